"""Closed-form proximal operators, projections and the prox-oracle objects.

Every oracle minimizes ``theta(x) + (tau/2) ||x - c||^2`` over its own
feasible set, i.e. set constraints are folded into the oracle rather than
kept as separate objects.
"""

import numpy as np
from scipy import linalg

from ._validation import ParameterError, check_positive, check_vector

__all__ = [
    "soft_threshold",
    "project_simplex",
    "project_nonneg",
    "project_box",
    "prox_quadratic",
    "ProxOracle",
    "L1",
    "LinearNonneg",
    "Quadratic",
    "Zero",
    "SimplexIndicator",
    "BoxIndicator",
    "Stacked",
    "oracle_from_dict",
]


def soft_threshold(center, mu, tau):
    """Shrink ``center`` towards zero by ``mu / tau``.

    Minimizer of ``mu ||x||_1 + (tau/2) ||x - center||^2``.
    """
    tau = check_positive(tau, "tau")
    if mu < 0:
        raise ParameterError(f"mu must be nonnegative, got {mu}")
    center = np.asarray(center, dtype=float)
    return np.sign(center) * np.maximum(np.abs(center) - mu / tau, 0.0)


def project_nonneg(center):
    return np.maximum(np.asarray(center, dtype=float), 0.0)


def project_box(center, lo, hi):
    return np.clip(np.asarray(center, dtype=float), lo, hi)


def project_simplex(center):
    """Euclidean projection onto ``{x >= 0, sum(x) = 1}``.

    Sort-and-threshold: with ``u`` sorted descending, the threshold is
    ``(cumsum(u)[k] - 1) / (k + 1)`` for the largest ``k`` with
    ``u[k] > (cumsum(u)[k] - 1) / (k + 1)``.
    """
    v = np.asarray(center, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ParameterError("project_simplex needs a nonempty vector")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, v.size + 1)
    k = np.nonzero(u - css / ks > 0)[0][-1]
    return np.maximum(v - css[k] / (k + 1), 0.0)


def prox_quadratic(P, q, center, tau):
    """Solve ``(P + tau I) x = tau * center - q``."""
    tau = check_positive(tau, "tau")
    P = np.asarray(P, dtype=float)
    rhs = tau * np.asarray(center, dtype=float) - np.asarray(q, dtype=float)
    try:
        factor = linalg.cho_factor(P + tau * np.eye(P.shape[0]))
    except linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("P + tau*I is not positive definite") from exc
    return linalg.cho_solve(factor, rhs)


class ProxOracle:
    """Convex function restricted to a closed convex set, accessed by its prox.

    Subclasses implement ``__call__`` (value of the function on its set),
    ``prox(center, tau)`` and ``contains(x)``. ``dim`` is ``None`` for
    oracles that accept any dimension.
    """

    kind = None
    dim = None
    # True when the oracle can solve its subproblem in a general (non
    # spherical) metric by a linear solve; see ``metric_prox``.
    supports_metric = False
    separable = True

    def __call__(self, x):
        raise NotImplementedError

    def prox(self, center, tau):
        raise NotImplementedError

    def contains(self, x, tol=1e-12):
        return True

    def metric_prox(self, M):
        """Factor once and return ``rhs -> argmin theta(x) + (1/2) x'Mx - rhs'x``."""
        raise ParameterError(
            f"{self.kind} objective has no closed-form prox in a non-spherical metric"
        )

    def restrict(self, index):
        """Oracle acting on the coordinates ``index`` of a separable function."""
        raise ParameterError(f"{self.kind} objective is not coordinate separable")

    def params(self):
        return {}

    def to_dict(self):
        return {"kind": self.kind, "params": self.params()}

    def __repr__(self):
        return f"{type(self).__name__}({self.params()})"


class L1(ProxOracle):
    kind = "l1"

    def __init__(self, mu=1.0):
        if mu < 0:
            raise ParameterError(f"mu must be nonnegative, got {mu}")
        self.mu = float(mu)

    def __call__(self, x):
        return self.mu * float(np.abs(x).sum())

    def prox(self, center, tau):
        return soft_threshold(center, self.mu, tau)

    def restrict(self, index):
        return L1(self.mu)

    def params(self):
        return {"mu": self.mu}


class LinearNonneg(ProxOracle):
    """``c'x`` over the nonnegative orthant; the building block of LPs."""

    kind = "linear_nonneg"

    def __init__(self, c):
        self.c = check_vector(c, "c")
        self.dim = self.c.size

    def __call__(self, x):
        return float(self.c @ x)

    def prox(self, center, tau):
        tau = check_positive(tau, "tau")
        return np.maximum(center - self.c / tau, 0.0)

    def contains(self, x, tol=1e-12):
        return bool(np.all(np.asarray(x) >= -tol))

    def restrict(self, index):
        return LinearNonneg(self.c[index])

    def params(self):
        return {"c": self.c.tolist()}


class Quadratic(ProxOracle):
    """``(1/2) x'Px + q'x`` over the whole space, ``P`` symmetric PSD."""

    kind = "quadratic"
    supports_metric = True

    def __init__(self, P, q=None):
        P = np.atleast_2d(np.asarray(P, dtype=float))
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ParameterError("P must be a square matrix")
        if not np.allclose(P, P.T, rtol=0, atol=1e-12 * max(1.0, np.abs(P).max())):
            raise ParameterError("P must be symmetric")
        self.P = P
        self.q = np.zeros(P.shape[0]) if q is None else check_vector(q, "q")
        if self.q.size != P.shape[0]:
            raise ParameterError("q and P disagree in dimension")
        self.dim = P.shape[0]
        self._factors = {}

    def __call__(self, x):
        return float(0.5 * x @ self.P @ x + self.q @ x)

    def prox(self, center, tau):
        tau = check_positive(tau, "tau")
        factor = self._factors.get(tau)
        if factor is None:
            factor = self._factors[tau] = linalg.cho_factor(self.P + tau * np.eye(self.dim))
        return linalg.cho_solve(factor, tau * center - self.q)

    def metric_prox(self, M):
        factor = linalg.cho_factor(self.P + M)
        return lambda rhs: linalg.cho_solve(factor, rhs - self.q)

    def restrict(self, index):
        index = np.asarray(index)
        block = self.P[np.ix_(index, index)]
        rest = np.delete(self.P[index], index, axis=1)
        if np.any(rest != 0):
            raise ParameterError("quadratic objective couples the requested blocks")
        return Quadratic(block, self.q[index])

    def params(self):
        return {"P": self.P.tolist(), "q": self.q.tolist()}


class Zero(ProxOracle):
    kind = "zero"
    supports_metric = True

    def __call__(self, x):
        return 0.0

    def prox(self, center, tau):
        check_positive(tau, "tau")
        return np.array(center, dtype=float)

    def metric_prox(self, M):
        factor = linalg.cho_factor(M)
        return lambda rhs: linalg.cho_solve(factor, rhs)

    def restrict(self, index):
        return Zero()


class SimplexIndicator(ProxOracle):
    """Indicator of the probability simplex (value 0 on the set)."""

    kind = "simplex_indicator"
    separable = False

    def __call__(self, x):
        return 0.0

    def prox(self, center, tau):
        check_positive(tau, "tau")
        return project_simplex(center)

    def contains(self, x, tol=1e-12):
        x = np.asarray(x)
        return bool(np.all(x >= -tol) and abs(x.sum() - 1.0) <= tol * max(1, x.size))


class BoxIndicator(ProxOracle):
    kind = "box_indicator"

    def __init__(self, lo, hi):
        self.lo = check_vector(lo, "lo")
        self.hi = check_vector(hi, "hi")
        if self.lo.shape != self.hi.shape:
            raise ParameterError("lo and hi disagree in dimension")
        if np.any(self.lo > self.hi):
            raise ParameterError("box needs lo <= hi componentwise")
        self.dim = self.lo.size

    def __call__(self, x):
        return 0.0

    def prox(self, center, tau):
        check_positive(tau, "tau")
        return project_box(center, self.lo, self.hi)

    def contains(self, x, tol=1e-12):
        x = np.asarray(x)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def restrict(self, index):
        return BoxIndicator(self.lo[index], self.hi[index])

    def params(self):
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}


class Stacked(ProxOracle):
    """Sum of oracles acting on consecutive slices of one vector."""

    kind = "stacked"

    def __init__(self, oracles, sizes):
        if len(oracles) != len(sizes):
            raise ParameterError("one size per oracle is required")
        self.oracles = list(oracles)
        self.sizes = [int(s) for s in sizes]
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        self.dim = int(self.offsets[-1])
        self.supports_metric = all(o.supports_metric for o in oracles)

    def _slices(self):
        return [slice(a, b) for a, b in zip(self.offsets[:-1], self.offsets[1:])]

    def __call__(self, x):
        return sum(o(x[s]) for o, s in zip(self.oracles, self._slices()))

    def prox(self, center, tau):
        return np.concatenate([o.prox(center[s], tau) for o, s in zip(self.oracles, self._slices())])

    def contains(self, x, tol=1e-12):
        return all(o.contains(x[s], tol) for o, s in zip(self.oracles, self._slices()))

    def metric_prox(self, M):
        P = np.zeros((self.dim, self.dim))
        q = np.zeros(self.dim)
        for o, s in zip(self.oracles, self._slices()):
            if isinstance(o, Quadratic):
                P[s, s] = o.P
                q[s] = o.q
        return Quadratic(P, q).metric_prox(M)

    def to_dict(self):
        return {
            "kind": self.kind,
            "params": {"sizes": self.sizes, "oracles": [o.to_dict() for o in self.oracles]},
        }


def oracle_from_dict(doc):
    """Rebuild an oracle from its ``{"kind": ..., "params": {...}}`` form."""
    kind = doc.get("kind")
    params = doc.get("params") or {}
    if kind == "l1":
        return L1(params.get("mu", 1.0))
    if kind == "linear_nonneg":
        return LinearNonneg(params["c"])
    if kind == "quadratic":
        return Quadratic(params["P"], params.get("q"))
    if kind == "zero":
        return Zero()
    if kind == "simplex_indicator":
        return SimplexIndicator()
    if kind == "box_indicator":
        return BoxIndicator(params["lo"], params["hi"])
    if kind == "stacked":
        return Stacked([oracle_from_dict(d) for d in params["oracles"]], params["sizes"])
    raise ParameterError(f"unknown objective kind {kind!r}")
