"""Deterministic problem generators and high-accuracy reference solutions.

Random numbers come from a SplitMix64 counter stream so that a seed pins
every matrix bit for bit, independently of numpy's generators:

* the ``i``-th raw output (``i = 1, 2, ...``) is ``mix(seed + i * 0x9E3779B97F4A7C15)``
  (arithmetic mod 2**64), where ``mix`` is::

      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
      z = (z ^ (z >> 27)) * 0x94D049BB133111EB
      z =  z ^ (z >> 31)

* a uniform draw in ``(0, 1)`` is ``((z >> 11) + 0.5) * 2**-53``;
* normals are produced in pairs by Box-Muller from two consecutive uniforms
  ``u1, u2``: ``sqrt(-2 ln u1) cos(2 pi u2)`` then ``sqrt(-2 ln u1) sin(2 pi u2)``;
* matrices are filled row-major, and each generator consumes draws in the
  order its section below lists them.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import ParameterError
from .model import ConstrainedProblem, SaddleProblem, SeparableProblem
from .prox import L1, LinearNonneg, Quadratic, SimplexIndicator

__all__ = ["SplitMix64", "GenSpec", "Generated", "generate", "Reference", "reference_solve",
           "RPS", "lp_vertex_enumeration"]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1

RPS = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])


class SplitMix64:
    """Counter-based SplitMix64 stream; see the module docstring for the exact recurrence."""

    def __init__(self, seed):
        self.seed = int(seed) & _MASK
        self.counter = 0

    def raw(self, size):
        idx = np.arange(self.counter + 1, self.counter + size + 1, dtype=np.uint64)
        self.counter += size
        with np.errstate(over="ignore"):
            z = np.uint64(self.seed) + idx * _GOLDEN
            z = (z ^ (z >> np.uint64(30))) * _M1
            z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))

    def uniform(self, size):
        return ((self.raw(size) >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53

    def normal(self, size):
        pairs = (size + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        rad = np.sqrt(-2.0 * np.log(u[:, 0]))
        ang = 2.0 * np.pi * u[:, 1]
        return np.column_stack([rad * np.cos(ang), rad * np.sin(ang)]).ravel()[:size]

    def split(self):
        """Independent child stream seeded from the next raw output."""
        return SplitMix64(int(self.raw(1)[0]))


@dataclass(frozen=True)
class GenSpec:
    """What to generate.

    ``kind`` is one of ``basis_pursuit`` (m, n, sparsity), ``inequality_lp``
    (m, n), ``matrix_game`` (m, n, or ``name="rps"``), ``multiblock_l1``
    (p, m, n_i, sparsity per block) or ``quadratic_saddle`` (n, m).
    """

    kind: str
    m: int = 0
    n: int = 0
    sparsity: int = 0
    p: int = 0
    seed: int = 0
    name: str = None

    def to_dict(self):
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass
class Generated:
    problem: object
    metadata: dict = field(default_factory=dict)


def _positive(spec, *names):
    for nm in names:
        value = getattr(spec, nm)
        if not isinstance(value, (int, np.integer)) or value <= 0:
            raise ParameterError(f"{spec.kind}: {nm} must be a positive integer, got {value!r}")


def _basis_pursuit(spec):
    _positive(spec, "m", "n", "sparsity")
    if spec.sparsity >= spec.n:
        raise ParameterError("sparsity must be smaller than n")
    rng = SplitMix64(spec.seed)
    m, n, k = spec.m, spec.n, spec.sparsity
    A = rng.normal(m * n).reshape(m, n)
    # partial Fisher-Yates for the support
    perm = list(range(n))
    for i, u in enumerate(rng.uniform(k)):
        j = i + int(u * (n - i))
        perm[i], perm[j] = perm[j], perm[i]
    support = sorted(perm[:k])
    x = np.zeros(n)
    x[support] = rng.normal(k)
    b = A @ x
    problem = ConstrainedProblem(L1(1.0), A, b, "eq")
    meta = {"x_feasible": x.tolist(), "theta_feasible": float(np.abs(x).sum()),
            "support": support}
    return Generated(problem, meta)


def _inequality_lp(spec):
    """``min c'x  s.t.  Ax >= b, x >= 0`` with strictly feasible primal and dual.

    Draw order: A (normal), x0 - 0.5 (uniform, n), slack - 0.5 (uniform, m),
    y0 (uniform, m), z0 - 0.5 (uniform, n). Then ``b = A x0 - slack`` and
    ``c = A'y0 + z0``, so ``x0`` is an interior point and ``(y0, z0)`` a
    strictly feasible dual point; the optimum is finite and attained.
    """
    _positive(spec, "m", "n")
    rng = SplitMix64(spec.seed)
    m, n = spec.m, spec.n
    A = rng.normal(m * n).reshape(m, n)
    x0 = 0.5 + rng.uniform(n)
    slack = 0.5 + rng.uniform(m)
    y0 = rng.uniform(m)
    z0 = 0.5 + rng.uniform(n)
    b = A @ x0 - slack
    c = A.T @ y0 + z0
    problem = ConstrainedProblem(LinearNonneg(c), A, b, "ge")
    meta = {"x_interior": x0.tolist(), "theta_interior": float(c @ x0),
            "dual_feasible": y0.tolist(), "dual_bound": float(b @ y0)}
    return Generated(problem, meta)


def _matrix_game(spec):
    if spec.name is not None:
        if spec.name != "rps":
            raise ParameterError(f"unknown named game {spec.name!r}")
        A = RPS.copy()
        meta = {"name": "rps", "value": 0.0, "x_star": [1 / 3] * 3, "y_star": [1 / 3] * 3}
    else:
        _positive(spec, "m", "n")
        A = SplitMix64(spec.seed).normal(spec.m * spec.n).reshape(spec.m, spec.n)
        meta = {}
    # the zero start projects straight onto the uniform strategies, so runs
    # start from pure strategies instead
    m, n = A.shape
    meta["x0"] = np.eye(n)[0].tolist()
    meta["y0"] = np.eye(m)[min(1, m - 1)].tolist()
    return Generated(SaddleProblem(SimplexIndicator(), SimplexIndicator(), A), meta)


def _multiblock_l1(spec):
    """p blocks of width n with ``sparsity`` nonzeros each; draws block by block (A_i, support, values)."""
    _positive(spec, "p", "m", "n", "sparsity")
    if spec.sparsity >= spec.n:
        raise ParameterError("sparsity must be smaller than n_i")
    rng = SplitMix64(spec.seed)
    blocks, xs = [], []
    b = np.zeros(spec.m)
    for _ in range(spec.p):
        sub = _basis_pursuit(GenSpec("basis_pursuit", spec.m, spec.n, spec.sparsity,
                                     seed=int(rng.raw(1)[0])))
        blocks.append((L1(1.0), sub.problem.A))
        xs.append(sub.metadata["x_feasible"])
        b = b + sub.problem.b
    x = np.concatenate(xs)
    problem = SeparableProblem(blocks, b, "eq")
    return Generated(problem, {"x_feasible": x.tolist(), "theta_feasible": float(np.abs(x).sum())})


def _quadratic_saddle(spec):
    """Strictly convex-concave quadratic saddle; draws B1, q1, B2, q2, A in that order."""
    _positive(spec, "n", "m")
    rng = SplitMix64(spec.seed)
    n, m = spec.n, spec.m
    B1 = rng.normal(n * n).reshape(n, n)
    q1 = rng.normal(n)
    B2 = rng.normal(m * m).reshape(m, m)
    q2 = rng.normal(m)
    A = rng.normal(m * n).reshape(m, n)
    P1 = B1.T @ B1 / n + np.eye(n)
    P2 = B2.T @ B2 / m + np.eye(m)
    problem = SaddleProblem(Quadratic(P1, q1), Quadratic(P2, q2), A)
    # stationarity: P1 x + q1 - A'y = 0,  A x + P2 y + q2 = 0
    K = np.block([[P1, -A.T], [A, P2]])
    w = np.linalg.solve(K, -np.concatenate([q1, q2]))
    return Generated(problem, {"w_star": w.tolist()})


_GENERATORS = {
    "basis_pursuit": _basis_pursuit,
    "inequality_lp": _inequality_lp,
    "matrix_game": _matrix_game,
    "multiblock_l1": _multiblock_l1,
    "quadratic_saddle": _quadratic_saddle,
}


def generate(spec):
    """Build the problem described by ``spec``; a pure function of the spec."""
    try:
        builder = _GENERATORS[spec.kind]
    except KeyError:
        raise ParameterError(f"unknown generator kind {spec.kind!r}") from None
    out = builder(spec)
    out.metadata = {"spec": spec.to_dict(), **out.metadata}
    return out


def lp_vertex_enumeration(c, A, b, sense="ge"):
    """Exact minimum of ``c'x`` over ``{x >= 0, Ax >= b}`` (or ``Ax = b``) by checking every vertex.

    Returns ``(x, value)``; only meant for a handful of variables.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    rows = np.vstack([A, np.eye(n)])
    rhs = np.concatenate([b, np.zeros(n)])
    # equality rows are active at every vertex
    forced = [] if sense == "ge" else list(range(m))
    best, best_x = math.inf, None
    free = [i for i in range(m + n) if i not in forced]
    for extra in itertools.combinations(free, n - len(forced)):
        act = forced + list(extra)
        M = rows[act]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, rhs[act])
        if np.any(x < -1e-9):
            continue
        r = A @ x - b
        if (sense == "ge" and np.any(r < -1e-9)) or (sense == "eq" and np.any(abs(r) > 1e-9)):
            continue
        val = float(c @ x)
        if val < best:
            best, best_x = val, x
    if best_x is None:
        raise ParameterError("LP has no feasible vertex")
    return best_x, best


@dataclass
class Reference:
    """High-accuracy solution ``w`` with its objective.

    ``flagged`` is set when the iteration budget ran out before the
    tolerance was met; such a reference must not be trusted silently.
    """

    w: np.ndarray
    objective: float
    n: int
    converged: bool
    n_iter: int
    vertex_objective: float = None

    @property
    def flagged(self):
        return not self.converged

    @property
    def x(self):
        return self.w[: self.n]

    @property
    def dual(self):
        return self.w[self.n:]

    def to_dict(self):
        return {"w": self.w.tolist(), "objective": self.objective, "n": self.n,
                "converged": self.converged, "n_iter": self.n_iter,
                "vertex_objective": self.vertex_objective}

    @classmethod
    def from_dict(cls, doc):
        return cls(np.array(doc["w"], dtype=float), doc["objective"], doc["n"],
                   doc["converged"], doc["n_iter"], doc.get("vertex_objective"))


def reference_solve(problem, budget=1_000_000, tol=1e-12, **params):
    """Long, tight run: P-ALM for constrained problems, N-PDHG1 for saddles.

    Separable problems are solved in their stacked single-block form, which
    has the same solution set. Tiny LPs are cross-checked against
    :func:`lp_vertex_enumeration`.
    """
    from .solvers import NPDHG1, PALM

    if isinstance(problem, SeparableProblem):
        problem = problem.stacked()
    solver_cls = NPDHG1 if isinstance(problem, SaddleProblem) else PALM
    solver = solver_cls(max_iter=budget, tol_primal=tol, tol_step=tol, store_iterates=False,
                        **params)
    solver.fit(problem)
    trace = solver.trace_
    w = trace.final
    objective = float(problem.objective(w) if isinstance(problem, SaddleProblem)
                      else problem.objective(w[: problem.n]))
    ref = Reference(w.copy(), objective, problem.n, trace.status.value == "converged",
                    trace.n_iter)
    if (isinstance(problem, ConstrainedProblem) and isinstance(problem.theta, LinearNonneg)
            and problem.n <= 6 and problem.m <= 6):
        _, ref.vertex_objective = lp_vertex_enumeration(problem.theta.c, problem.A, problem.b,
                                                        problem.sense.value)
        if abs(ref.vertex_objective - objective) > 1e-9 * max(1.0, abs(objective)):
            ref.converged = False
    return ref
