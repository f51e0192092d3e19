import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_block, dense_dual_primal, dense_npdhg2, dense_palm
from proxalm import ExplicitQ, MetricH, ParameterError, ProxForm
from proxalm.certify import h_quadratic_form
from proxalm.spectral import SAFETY, is_spherical, power_iteration, safe_rho


def spd(k, rng, shift=0.5):
    B = rng.standard_normal((k, k))
    return B @ B.T / k + shift * np.eye(k)


def metric_cases(seed=0):
    """Yield ``(name, MetricH, dense H)`` for every kind and both Q forms."""
    rng = np.random.default_rng(seed)
    m, n = 4, 6
    A = rng.standard_normal((m, n))
    r = 0.7
    rho = np.linalg.eigvalsh(A.T @ A)[-1]
    tau = 1.3 * r * rho
    Q = spd(n, rng)
    yield "palm-prox", MetricH.palm(A, r, ProxForm(tau)), dense_palm(A, r, tau * np.eye(n) - r * A.T @ A)
    yield "palm-explicit", MetricH.palm(A, r, ExplicitQ(Q)), dense_palm(A, r, Q)
    yield "npdhg1", MetricH.npdhg1(A, r, ExplicitQ(Q)), dense_palm(A, r, Q)
    Qm = spd(m, rng)
    sig = 1.2 * np.linalg.eigvalsh(A @ A.T)[-1] / r
    yield "npdhg2-explicit", MetricH.npdhg2(A, r, ExplicitQ(Qm)), dense_npdhg2(A, r, Qm)
    yield "npdhg2-prox", MetricH.npdhg2(A, r, ProxForm(sig)), dense_npdhg2(A, r, sig * np.eye(m) - A @ A.T / r)
    parts = [rng.standard_normal((m, k)) for k in (2, 3, 1)]
    rs = [0.5, 1.0, 2.0]
    qs = [spd(P.shape[1], rng) for P in parts]
    yield ("block", MetricH.block([(ri, ExplicitQ(q), P) for ri, q, P in zip(rs, qs, parts)]),
           dense_block(list(zip(rs, qs, parts))))
    taus = [1.1 * ri * np.linalg.eigvalsh(P.T @ P)[-1] for ri, P in zip(rs, parts)]
    yield ("block-prox", MetricH.block([(ri, ProxForm(t), P) for ri, t, P in zip(rs, taus, parts)]),
           dense_block([(ri, t * np.eye(P.shape[1]) - ri * P.T @ P, P)
                        for ri, t, P in zip(rs, taus, parts)]))
    ss = [0.3, 1.0, 2.5]
    qd = [1.01 * ri * np.linalg.eigvalsh(P.T @ P)[-1] * np.eye(P.shape[1]) for ri, P in zip(rs, parts)]
    yield ("dual_primal",
           MetricH.dual_primal([(ri, ExplicitQ(q), s, P) for ri, q, s, P in zip(rs, qd, ss, parts)]),
           dense_dual_primal(list(zip(rs, qd, ss, parts))))


CASES = list(metric_cases())


def test_scalar_example():
    H = MetricH.palm(np.array([[1.0]]), 1.0, ExplicitQ(np.array([[1.0]])))
    assert h_quadratic_form(H, np.array([1.0, 1.0])) == pytest.approx(5.0, abs=1e-14)
    assert h_quadratic_form(H, np.zeros(2)) == 0.0


@pytest.mark.parametrize("name,H,D", CASES, ids=[c[0] for c in CASES])
def test_quadratic_form_matches_dense(name, H, D):
    rng = np.random.default_rng(1)
    for w in rng.standard_normal((200, D.shape[0])):
        dense = w @ D @ w
        assert abs(H.quadratic_form(w) - dense) <= 1e-10 * abs(dense)


@pytest.mark.parametrize("name,H,D", CASES, ids=[c[0] for c in CASES])
def test_apply_and_primal_row_match_dense(name, H, D):
    rng = np.random.default_rng(2)
    for w in rng.standard_normal((20, D.shape[0])):
        np.testing.assert_allclose(H.apply(w), D @ w, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(H.primal_row(w), (D @ w)[: H.n], rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("name,H,D", CASES, ids=[c[0] for c in CASES])
def test_dense_oracle_is_positive_definite(name, H, D):
    np.testing.assert_allclose(D, D.T)
    assert np.linalg.eigvalsh(D)[0] > 0


def test_dual_weight_is_sum_of_inverse_penalties():
    block = next(H for name, H, _ in CASES if name == "block")
    assert block.dual_weight == pytest.approx(1 / 0.5 + 1 / 1.0 + 1 / 2.0)


def test_dimension_mismatch_raises():
    H = CASES[0][1]
    with pytest.raises(ParameterError):
        H.quadratic_form(np.ones(H.dim + 1))


def test_dual_primal_requires_explicit_q():
    with pytest.raises(ParameterError):
        MetricH.dual_primal([(1.0, ProxForm(2.0), 1.0, np.eye(2))])


def test_blocks_must_share_rows():
    with pytest.raises(ParameterError):
        MetricH.block([(1.0, ProxForm(2.0), np.eye(2)), (1.0, ProxForm(2.0), np.eye(3))])


@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_power_iteration_estimates_spectral_radius(m, n, seed):
    A = np.random.default_rng(seed).standard_normal((m, n))
    exact = np.linalg.eigvalsh(A.T @ A)[-1]
    assert power_iteration(A) == pytest.approx(exact, rel=1e-6)


def test_power_iteration_is_a_lower_estimate():
    rng = np.random.default_rng(5)
    for _ in range(20):
        A = rng.standard_normal((50, 120))
        assert power_iteration(A) <= np.linalg.eigvalsh(A @ A.T)[-1] * (1 + 1e-12)


def test_safe_rho_is_covered_by_safety_factor():
    # seed 5 includes a draw where 100 steps land more than 1% low
    rng = np.random.default_rng(5)
    short = 0
    for _ in range(20):
        A = rng.standard_normal((50, 120))
        exact = np.linalg.eigvalsh(A @ A.T)[-1]
        short += SAFETY * power_iteration(A) <= exact
        assert SAFETY * safe_rho(A) > exact
    assert short >= 1


def test_is_spherical():
    assert is_spherical(3.0 * np.eye(4)) == 3.0
    assert is_spherical(np.diag([1.0, 2.0])) is None
