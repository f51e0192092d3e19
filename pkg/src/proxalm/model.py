"""Problem definitions shared by every solver.

Three problem shapes are supported:

* :class:`ConstrainedProblem` -- ``min theta(x)  s.t.  Ax = b  (or Ax >= b), x in X``
* :class:`SeparableProblem` -- the same with ``theta`` and ``A`` split into
  column blocks that share one coupling constraint
* :class:`SaddleProblem` -- ``min_x max_y theta1(x) - y'Ax - theta2(y)``

Each problem knows how to split a stacked point ``w`` into its primal and
dual parts and exposes the pieces of its variational-inequality form
(``theta_value``, ``vi_operator``, ``in_domain``) used by the certificates.
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from ._validation import ParameterError
from .prox import ProxOracle, Stacked, oracle_from_dict

__all__ = [
    "Sense",
    "ConstrainedProblem",
    "SeparableProblem",
    "SaddleProblem",
    "validate",
    "split_columns",
    "problem_from_dict",
    "load_problem",
    "save_problem",
]


class Sense(str, Enum):
    EQ = "eq"
    GE = "ge"


def _frozen_array(a, ndim):
    arr = np.array(a, dtype=float)
    if arr.ndim < ndim:
        arr = arr.reshape((1,) * (ndim - arr.ndim) + arr.shape)
    arr.flags.writeable = False
    return arr


def _as_sense(sense):
    try:
        return Sense(sense)
    except ValueError as exc:
        raise ParameterError(f"sense must be 'eq' or 'ge', got {sense!r}") from exc


@dataclass(frozen=True, eq=False)
class ConstrainedProblem:
    """``min theta(x)`` subject to ``Ax = b`` or ``Ax >= b``, ``x`` in the oracle's set."""

    theta: ProxOracle
    A: np.ndarray
    b: np.ndarray
    sense: Sense = Sense.EQ

    def __post_init__(self):
        object.__setattr__(self, "A", _frozen_array(self.A, 2))
        object.__setattr__(self, "b", _frozen_array(self.b, 1).ravel())
        object.__setattr__(self, "sense", _as_sense(self.sense))

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]

    @property
    def dim(self):
        return self.n + self.m

    def split(self, w):
        return w[: self.n], w[self.n:]

    def objective(self, x):
        return self.theta(x)

    def constraint_violation(self, x):
        r = self.A @ x - self.b
        if self.sense is Sense.GE:
            r = np.minimum(r, 0.0)
        return r

    def primal_residual(self, w):
        return float(np.linalg.norm(self.constraint_violation(w[: self.n])))

    def theta_value(self, w):
        return self.theta(w[: self.n])

    def vi_operator(self, w):
        x, lam = self.split(w)
        return np.concatenate([-(self.A.T @ lam), self.A @ x - self.b])

    def in_domain(self, w, tol=1e-12):
        x, lam = self.split(w)
        if self.sense is Sense.GE and np.any(lam < -tol):
            return False
        return self.theta.contains(x, tol)

    def to_dict(self):
        return {
            "type": "constrained",
            "A": self.A.tolist(),
            "b": self.b.tolist(),
            "sense": self.sense.value,
            "theta": self.theta.to_dict(),
        }


@dataclass(frozen=True, eq=False)
class SeparableProblem:
    """``min sum_i theta_i(x_i)`` subject to ``sum_i A_i x_i = b`` (or ``>= b``)."""

    blocks: tuple
    b: np.ndarray
    sense: Sense = Sense.EQ
    _stacked: ConstrainedProblem = field(init=False, repr=False, default=None)

    def __post_init__(self):
        blocks = tuple((theta, _frozen_array(Ai, 2)) for theta, Ai in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "b", _frozen_array(self.b, 1).ravel())
        object.__setattr__(self, "sense", _as_sense(self.sense))

    @property
    def p(self):
        return len(self.blocks)

    @property
    def m(self):
        return self.b.size

    @property
    def sizes(self):
        return [Ai.shape[1] for _, Ai in self.blocks]

    @property
    def n(self):
        return sum(self.sizes)

    @property
    def dim(self):
        return self.n + self.m

    def stacked(self):
        """The equivalent single-block problem with ``A = [A_1 ... A_p]``."""
        if self._stacked is None:
            theta = Stacked([t for t, _ in self.blocks], self.sizes)
            A = np.hstack([Ai for _, Ai in self.blocks])
            object.__setattr__(self, "_stacked", ConstrainedProblem(theta, A, self.b, self.sense))
        return self._stacked

    def split(self, w):
        return self.stacked().split(w)

    def split_blocks(self, x):
        return np.split(x, np.cumsum(self.sizes)[:-1])

    def objective(self, x):
        return self.stacked().objective(x)

    def primal_residual(self, w):
        return self.stacked().primal_residual(w)

    def theta_value(self, w):
        return self.stacked().theta_value(w)

    def vi_operator(self, w):
        return self.stacked().vi_operator(w)

    def in_domain(self, w, tol=1e-12):
        return self.stacked().in_domain(w, tol)

    def to_dict(self):
        return {
            "type": "separable",
            "blocks": [{"A": Ai.tolist(), "theta": t.to_dict()} for t, Ai in self.blocks],
            "b": self.b.tolist(),
            "sense": self.sense.value,
        }


@dataclass(frozen=True, eq=False)
class SaddleProblem:
    """``min_{x in X} max_{y in Y} theta1(x) - y'Ax - theta2(y)``."""

    theta1: ProxOracle
    theta2: ProxOracle
    A: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", _frozen_array(self.A, 2))

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]

    @property
    def dim(self):
        return self.n + self.m

    def split(self, w):
        return w[: self.n], w[self.n:]

    def objective(self, w):
        x, y = self.split(w)
        return self.theta1(x) - y @ self.A @ x - self.theta2(y)

    def primal_residual(self, w):
        # no coupling constraint; solvers record the fixed-point residual instead
        return 0.0

    def theta_value(self, w):
        x, y = self.split(w)
        return self.theta1(x) + self.theta2(y)

    def vi_operator(self, w):
        x, y = self.split(w)
        return np.concatenate([-(self.A.T @ y), self.A @ x])

    def in_domain(self, w, tol=1e-12):
        x, y = self.split(w)
        return self.theta1.contains(x, tol) and self.theta2.contains(y, tol)

    def to_dict(self):
        return {
            "type": "saddle",
            "A": self.A.tolist(),
            "theta1": self.theta1.to_dict(),
            "theta2": self.theta2.to_dict(),
        }


def _check_A_b(A, b, label=""):
    out = []
    if A.ndim != 2:
        return [f"{label}A must be a matrix, got {A.ndim} dimensions"]
    if b is not None and b.size != A.shape[0]:
        out.append(f"{label}dimension mismatch: A has {A.shape[0]} rows but b has length {b.size}")
    if not np.all(np.isfinite(A)):
        out.append(f"{label}A contains non-finite entries")
    return out


def _check_oracle(theta, n, label):
    if not isinstance(theta, ProxOracle):
        return [f"{label} is not a prox oracle"]
    if theta.dim is not None and theta.dim != n:
        return [f"dimension mismatch: {label} acts on length {theta.dim} but A has {n} columns"]
    return []


def _zero_rows(A, label=""):
    rows = np.nonzero(~np.any(A != 0, axis=1))[0]
    return [f"{label}A has all-zero rows {rows.tolist()}"] if rows.size else []


def validate(problem):
    """Report everything wrong with ``problem``; an empty list means valid.

    Never raises: structural defects are returned as human-readable strings.
    """
    out = []
    if isinstance(problem, ConstrainedProblem):
        out += _check_A_b(problem.A, problem.b)
        out += _check_oracle(problem.theta, problem.n, "theta")
        if not out:
            out += _zero_rows(problem.A)
    elif isinstance(problem, SeparableProblem):
        if problem.p == 0:
            return ["empty blocks: a separable problem needs at least one block"]
        for i, (theta, Ai) in enumerate(problem.blocks):
            label = f"block {i}: "
            out += _check_A_b(Ai, problem.b, label)
            out += _check_oracle(theta, Ai.shape[1], f"{label}theta")
        if not out:
            out += _zero_rows(np.hstack([Ai for _, Ai in problem.blocks]))
    elif isinstance(problem, SaddleProblem):
        out += _check_A_b(problem.A, None)
        out += _check_oracle(problem.theta1, problem.n, "theta1")
        out += _check_oracle(problem.theta2, problem.m, "theta2")
    else:
        out.append(f"unsupported problem type {type(problem).__name__}")
    return out


def split_columns(problem, p):
    """Cut a coordinate-separable :class:`ConstrainedProblem` into ``p`` column blocks."""
    if not 1 <= p <= problem.n:
        raise ParameterError(f"cannot split {problem.n} columns into {p} blocks")
    index = np.array_split(np.arange(problem.n), p)
    blocks = [(problem.theta.restrict(ix), problem.A[:, ix]) for ix in index]
    return SeparableProblem(blocks, problem.b, problem.sense)


def problem_from_dict(doc):
    kind = doc.get("type", "constrained")
    if kind == "constrained":
        return ConstrainedProblem(oracle_from_dict(doc["theta"]), doc["A"], doc["b"],
                                  doc.get("sense", "eq"))
    if kind == "separable":
        blocks = [(oracle_from_dict(bk["theta"]), bk["A"]) for bk in doc["blocks"]]
        return SeparableProblem(blocks, doc["b"], doc.get("sense", "eq"))
    if kind == "saddle":
        return SaddleProblem(oracle_from_dict(doc["theta1"]), oracle_from_dict(doc["theta2"]),
                             doc["A"])
    raise ParameterError(f"unknown problem type {kind!r}")


def save_problem(problem, path):
    Path(path).write_text(json.dumps(problem.to_dict()))


def load_problem(path):
    return problem_from_dict(json.loads(Path(path).read_text()))
