import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import simplex_grid_projection
from proxalm import ParameterError
from proxalm.prox import (L1, BoxIndicator, LinearNonneg, Quadratic, SimplexIndicator, Stacked,
                          Zero, oracle_from_dict, project_nonneg, project_simplex, prox_quadratic,
                          soft_threshold)

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
taus = st.floats(0.05, 20.0)


def vec(n):
    return arrays(np.float64, n, elements=finite)


def make_oracles(n, rng):
    B = rng.standard_normal((n, n))
    lo = -rng.uniform(0, 2, n)
    return [
        L1(0.7),
        LinearNonneg(rng.standard_normal(n)),
        Quadratic(B @ B.T / n, rng.standard_normal(n)),
        Zero(),
        SimplexIndicator(),
        BoxIndicator(lo, lo + rng.uniform(0, 3, n)),
        Stacked([L1(1.0), LinearNonneg(np.ones(n - 2))], [2, n - 2]),
    ]


ORACLES = make_oracles(5, np.random.default_rng(0))


# --- closed forms ---------------------------------------------------------------------------

def test_soft_threshold_examples():
    np.testing.assert_array_equal(soft_threshold([3, -0.5, 1], 1, 1), [2, 0, 0])
    c = np.array([0.3, -4.0, 2.5])
    np.testing.assert_array_equal(soft_threshold(c, 0, 1), c)
    np.testing.assert_allclose(soft_threshold([0.7], 1, 2), [0.2], atol=1e-15)


@pytest.mark.parametrize("tau", [0.0, -1.0])
def test_soft_threshold_rejects_nonpositive_tau(tau):
    with pytest.raises(ParameterError):
        soft_threshold([1.0], 1.0, tau)


def test_project_simplex_examples():
    np.testing.assert_allclose(project_simplex([0.5, 0.5, 0.5]), [1 / 3] * 3, atol=1e-15)
    np.testing.assert_array_equal(project_simplex([2.0, 0.0, 0.0]), [1.0, 0.0, 0.0])
    grid = simplex_grid_projection(np.array([0.4, 0.1]))
    np.testing.assert_allclose(grid, [0.65, 0.35], atol=1e-5)
    np.testing.assert_allclose(project_simplex([0.4, 0.1]), [0.65, 0.35], atol=1e-15)


def test_project_nonneg_examples():
    np.testing.assert_array_equal(project_nonneg([1, -2, 0]), [1, 0, 0])
    v = np.array([0.0, 3.0, 1e-300])
    np.testing.assert_array_equal(project_nonneg(v), v)
    np.testing.assert_array_equal(project_nonneg([-5]), [0])


def test_prox_quadratic_examples():
    c = np.array([1.5, -2.0])
    np.testing.assert_array_equal(prox_quadratic(np.zeros((2, 2)), np.zeros(2), c, 1.0), c)
    np.testing.assert_allclose(prox_quadratic(np.eye(1), np.zeros(1), [2.0], 1.0), [1.0])
    rng = np.random.default_rng(3)
    B = rng.standard_normal((5, 5))
    P, q, c, tau = B @ B.T, rng.standard_normal(5), rng.standard_normal(5), 0.7
    x = prox_quadratic(P, q, c, tau)
    assert np.linalg.norm((P + tau * np.eye(5)) @ x - (tau * c - q)) <= 1e-10


def test_prox_quadratic_factorization_failure():
    with pytest.raises(np.linalg.LinAlgError):
        prox_quadratic(-4 * np.eye(2), np.zeros(2), np.ones(2), 1.0)


def test_linear_nonneg_prox_formula():
    o = LinearNonneg([1.0, -2.0, 0.5])
    np.testing.assert_allclose(o.prox(np.array([0.2, 0.0, 1.0]), 2.0), [0.0, 1.0, 0.75])


# --- invariants -----------------------------------------------------------------------------

@pytest.mark.parametrize("oracle", ORACLES, ids=lambda o: o.kind)
def test_firm_nonexpansive_on_random_pairs(oracle):
    rng = np.random.default_rng(1)
    for _ in range(1000):
        c1, c2 = 5 * rng.standard_normal((2, 5))
        tau = rng.uniform(0.1, 10)
        p1, p2 = oracle.prox(c1, tau), oracle.prox(c2, tau)
        # ||p1 - p2||^2 <= <p1 - p2, c1 - c2>
        assert (p1 - p2) @ (p1 - p2) <= (p1 - p2) @ (c1 - c2) + 1e-12 * (1 + (c1 - c2) @ (c1 - c2))
        assert np.linalg.norm(p1 - p2) <= np.linalg.norm(c1 - c2) + 1e-12


@pytest.mark.parametrize("oracle", ORACLES, ids=lambda o: o.kind)
def test_prox_lands_in_set_and_is_optimal(oracle):
    rng = np.random.default_rng(2)
    for _ in range(20):
        c, tau = 3 * rng.standard_normal(5), rng.uniform(0.1, 10)
        p = oracle.prox(c, tau)
        assert oracle.contains(p, tol=1e-12)
        base = oracle(p) + 0.5 * tau * (p - c) @ (p - c)
        for _ in range(100):
            z = oracle.prox(p + rng.standard_normal(5), 1e6)  # a feasible perturbation
            assert oracle.contains(z, tol=1e-9)
            assert base <= oracle(z) + 0.5 * tau * (z - c) @ (z - c) + 1e-10


@given(vec(6), taus)
def test_zero_prox_is_identity(c, tau):
    np.testing.assert_array_equal(Zero().prox(c, tau), c)


@given(arrays(np.float64, st.integers(1, 12), elements=finite))
def test_simplex_projection_sums_to_one(c):
    p = project_simplex(c)
    assert np.all(p >= 0.0)
    assert abs(p.sum() - 1.0) <= 1e-12 * max(1, c.size)


@given(arrays(np.float64, st.integers(1, 8), elements=finite))
@settings(max_examples=50)
def test_simplex_projection_beats_vertices(c):
    p = project_simplex(c)
    d = np.sum((p - c) ** 2)
    for e in np.eye(c.size):
        assert d <= np.sum((e - c) ** 2) + 1e-9


@given(vec(4), st.floats(0, 5), taus)
def test_soft_threshold_is_l1_prox(c, mu, tau):
    x = soft_threshold(c, mu, tau)
    rng = np.random.default_rng(0)
    f = lambda z: mu * np.abs(z).sum() + 0.5 * tau * (z - c) @ (z - c)
    for z in x + 0.1 * rng.standard_normal((20, 4)):
        assert f(x) <= f(z) + 1e-9


# --- metric solves and serialization ---------------------------------------------------------

def test_metric_prox_matches_normal_equations():
    rng = np.random.default_rng(4)
    B = rng.standard_normal((4, 4))
    P, q = B @ B.T, rng.standard_normal(4)
    C = rng.standard_normal((4, 4))
    M = C @ C.T + np.eye(4)
    rhs = rng.standard_normal(4)
    x = Quadratic(P, q).metric_prox(M)(rhs)
    np.testing.assert_allclose((P + M) @ x + q, rhs, atol=1e-12)
    np.testing.assert_allclose(Zero().metric_prox(M)(rhs), np.linalg.solve(M, rhs), atol=1e-12)


def test_metric_prox_unavailable_for_l1():
    with pytest.raises(ParameterError):
        L1().metric_prox(np.eye(3))


def test_stacked_metric_prox_is_block_quadratic():
    P1 = np.array([[2.0, 0.5], [0.5, 1.0]])
    o = Stacked([Quadratic(P1, [1.0, 0.0]), Zero()], [2, 1])
    M = np.eye(3) * 3
    x = o.metric_prox(M)(np.array([1.0, 2.0, 3.0]))
    P = np.zeros((3, 3))
    P[:2, :2] = P1
    np.testing.assert_allclose((P + M) @ x + [1.0, 0.0, 0.0], [1.0, 2.0, 3.0], atol=1e-12)


@pytest.mark.parametrize("oracle", ORACLES, ids=lambda o: o.kind)
def test_oracle_dict_roundtrip(oracle):
    back = oracle_from_dict(oracle.to_dict())
    c = np.linspace(-2, 2, 5)
    np.testing.assert_array_equal(back.prox(c, 1.3), oracle.prox(c, 1.3))


def test_invalid_oracles_rejected():
    with pytest.raises(ParameterError):
        L1(-1.0)
    with pytest.raises(ParameterError):
        Quadratic([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ParameterError):
        BoxIndicator([1.0], [0.0])
    with pytest.raises(ParameterError):
        oracle_from_dict({"kind": "nuclear"})


def test_quadratic_restrict_requires_separability():
    q = Quadratic(np.array([[1.0, 0.3], [0.3, 1.0]]))
    with pytest.raises(ParameterError):
        q.restrict([0])
    d = Quadratic(np.diag([1.0, 2.0]), [1.0, -1.0]).restrict([1])
    np.testing.assert_array_equal(d.P, [[2.0]])
