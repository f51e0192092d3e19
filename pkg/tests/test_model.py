import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from proxalm import (L1, PALM, ConstrainedProblem, LinearNonneg, ParameterError, Quadratic,
                     SaddleProblem, SeparableProblem, SimplexIndicator, Zero, load_problem,
                     save_problem, split_columns, validate)
from proxalm.model import problem_from_dict


def bp(m=3, n=5, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    return ConstrainedProblem(L1(), A, A @ rng.standard_normal(n))


def test_validate_clean_instance():
    assert validate(bp()) == []


def test_validate_dimension_mismatch():
    report = validate(ConstrainedProblem(L1(), np.ones((3, 2)), np.ones(4)))
    assert len(report) == 1 and "dimension mismatch" in report[0]


def test_validate_empty_blocks():
    report = validate(SeparableProblem([], np.ones(2)))
    assert len(report) == 1 and "empty blocks" in report[0]


def test_validate_zero_rows_and_oracle_size():
    A = np.array([[1.0, 2.0], [0.0, 0.0]])
    assert any("all-zero rows" in v for v in validate(ConstrainedProblem(L1(), A, [1.0, 0.0])))
    assert any("acts on length 3" in v
               for v in validate(ConstrainedProblem(LinearNonneg(np.ones(3)), np.eye(2), [1, 1])))
    bad = SaddleProblem(SimplexIndicator(), Quadratic(np.eye(2)), np.ones((3, 2)))
    assert any("theta2" in v for v in validate(bad))


def test_validate_never_raises_on_garbage():
    class Junk:
        pass

    assert validate(Junk()) != []
    assert validate(ConstrainedProblem("not an oracle", np.eye(2), [1, 1])) != []


def test_solvers_reject_invalid_problems():
    with pytest.raises(ParameterError, match="all-zero rows"):
        PALM().fit(ConstrainedProblem(L1(), [[1.0, 1.0], [0.0, 0.0]], [1.0, 0.0]))


def test_problems_are_immutable():
    p = bp()
    with pytest.raises(ValueError):
        p.A[0, 0] = 1.0
    with pytest.raises(AttributeError):
        p.b = np.zeros(3)


def test_sense_parsing():
    assert bp().sense.value == "eq"
    with pytest.raises(ParameterError):
        ConstrainedProblem(L1(), np.eye(2), [1, 1], "le")


def test_primal_residual_by_sense():
    A = np.array([[1.0, 0.0], [0.0, 1.0]])
    x = np.array([2.0, -1.0])
    w = np.concatenate([x, [0.0, 0.0]])
    eq = ConstrainedProblem(L1(), A, [1.0, 1.0], "eq")
    ge = ConstrainedProblem(L1(), A, [1.0, 1.0], "ge")
    assert eq.primal_residual(w) == pytest.approx(np.hypot(1.0, 2.0))
    # only the violated row counts: max(b - Ax, 0) = (0, 2)
    assert ge.primal_residual(w) == pytest.approx(2.0)


@pytest.mark.parametrize("problem", [
    bp(),
    ConstrainedProblem(LinearNonneg([1.0, 2.0]), [[1.0, 1.0]], [1.0], "ge"),
    SaddleProblem(SimplexIndicator(), SimplexIndicator(), [[0, -1, 1], [1, 0, -1], [-1, 1, 0]]),
    SeparableProblem([(L1(), np.eye(2)), (Zero(), np.ones((2, 1)))], [1.0, 2.0]),
], ids=["constrained", "lp", "saddle", "separable"])
def test_json_roundtrip(problem, tmp_path):
    path = tmp_path / "p.json"
    save_problem(problem, path)
    back = load_problem(path)
    assert type(back) is type(problem)
    assert back.to_dict() == problem.to_dict()
    assert json.loads(path.read_text())["type"] in ("constrained", "separable", "saddle")


def test_json_default_type_is_constrained():
    doc = {"A": [[1.0, 2.0]], "b": [1.0], "sense": "eq",
           "theta": {"kind": "l1", "params": {"mu": 2.0}}}
    p = problem_from_dict(doc)
    assert isinstance(p, ConstrainedProblem) and p.theta.mu == 2.0


def test_split_columns_single_block_matches_problem():
    p = bp(4, 7)
    s = split_columns(p, 1)
    assert s.p == 1 and s.n == p.n
    x = np.linspace(-1, 1, p.n)
    w = np.concatenate([x, np.ones(p.m)])
    assert s.objective(x) == p.objective(x)
    assert s.primal_residual(w) == p.primal_residual(w)
    np.testing.assert_allclose(s.vi_operator(w), p.vi_operator(w), rtol=0, atol=1e-14)
    np.testing.assert_array_equal(s.stacked().A, p.A)


def test_split_columns_blocks():
    p = bp(3, 7)
    s = split_columns(p, 3)
    assert s.sizes == [3, 2, 2]
    np.testing.assert_array_equal(np.hstack([A for _, A in s.blocks]), p.A)


def test_saddle_objective_sign():
    A = np.array([[1.0, 2.0]])
    p = SaddleProblem(Zero(), Zero(), A)
    w = np.array([1.0, 1.0, 2.0])
    assert p.objective(w) == pytest.approx(-6.0)


small = st.integers(1, 4)


@given(small, small, st.integers(0, 2**32 - 1))
def test_vi_operator_is_skew(m, n, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    for p in (ConstrainedProblem(Zero(), A, rng.standard_normal(m)), SaddleProblem(Zero(), Zero(), A)):
        w, v = rng.standard_normal((2, m + n))
        val = (w - v) @ (p.vi_operator(w) - p.vi_operator(v))
        assert abs(val) <= 1e-10 * (1 + np.linalg.norm(w) * np.linalg.norm(v))


@given(arrays(np.float64, 4, elements=st.floats(-5, 5)))
def test_in_domain_tracks_dual_sign(lam_x):
    p = ConstrainedProblem(LinearNonneg(np.ones(2)), np.eye(2), [0.0, 0.0], "ge")
    expected = bool(np.all(lam_x >= -1e-12))
    assert p.in_domain(lam_x) == expected
