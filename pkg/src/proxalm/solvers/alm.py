"""Single-block augmented Lagrangian schemes: P-ALM and the balanced B-ALM baseline."""

import numpy as np
from scipy import linalg, optimize

from .._validation import check_positive
from ..metric import ExplicitQ, MetricH, ProxForm
from ..model import Sense
from ._base import BaseSolver, Scheme, primal_q, prox_step


class PALM(BaseSolver):
    """Penalty augmented Lagrangian method.

    Each iteration takes a proximal step in the metric ``r A'A + Q`` and then
    an extrapolated multiplier step::

        x+   = argmin_{x in X} theta(x) - <lam, Ax - b> + 1/2 ||x - x||^2_{r A'A + Q}
        lam+ = lam - r (A(2 x+ - x) - b)        (projected onto lam >= 0 for Ax >= b)

    With the default prox form ``Q = tau I - r A'A`` the x-step is exactly
    ``theta.prox(x + A'lam / tau, tau)``, so only the prox of ``theta`` is
    needed. ``r`` can be chosen freely; only ``tau > r rho(A'A)`` is required.

    Parameters
    ----------
    r : float
        Penalty parameter, also the dual step size.
    tau : float, optional
        Prox weight. Defaults to ``1.01 r rho(A'A)`` with ``rho`` estimated by
        power iteration. Mutually exclusive with ``Q``.
    Q : ndarray, optional
        Explicit symmetric positive definite proximal matrix. Supported for
        quadratic or zero objectives, or whenever ``r A'A + Q`` is a multiple
        of the identity.
    max_iter : int
    tol_primal : float
        Stop once the constraint residual is below this...
    tol_step : float
        ...and the step ``||w^k - w^{k+1}||_H`` is below this.
    store_iterates : bool
        Keep every iterate in ``trace_.iterates`` (needed by the certificates).
    """

    solver_id = "palm"

    def __init__(self, r=1.0, tau=None, Q=None, max_iter=100000, tol_primal=1e-8,
                 tol_step=1e-10, store_iterates=True):
        self.r = r
        self.tau = tau
        self.Q = Q
        self.max_iter = max_iter
        self.tol_primal = tol_primal
        self.tol_step = tol_step
        self.store_iterates = store_iterates

    def _build(self, problem):
        r = check_positive(self.r, "r")
        A, b, theta, n = problem.A, problem.b, problem.theta, problem.n
        q = primal_q(A, r, self.tau, self.Q)
        xstep = prox_step(theta, A, r, q)
        ge = problem.sense is Sense.GE

        def step(w):
            x, lam = w[:n], w[n:]
            x_new = xstep(x, A.T @ lam)
            lam_new = lam - r * (A @ (2.0 * x_new - x) - b)
            if ge:
                lam_new = np.maximum(lam_new, 0.0)
            return np.concatenate([x_new, lam_new])

        params = {"r": r, "tau": q.tau if isinstance(q, ProxForm) else None,
                  "q_spec": "prox_form" if isinstance(q, ProxForm) else "explicit"}
        return Scheme(step, MetricH.palm(A, r, q), params, n)


class BALM(BaseSolver):
    """Balanced augmented Lagrangian method (baseline).

    The x-step is a plain prox with weight ``r``; the multiplier step solves
    a linear system with ``G = AA'/r + delta I``, factored once::

        x+   = theta.prox(x + A'lam / r, r)
        lam+ = lam - G^{-1} (A(2 x+ - x) - b)

    For ``Ax >= b`` the multiplier step is the ``G``-metric projection onto
    ``lam >= 0``, solved exactly as a nonnegative least-squares problem on the
    Cholesky factor of ``G``. Contracts in ``[[r I, A'], [A, G]]``.
    """

    solver_id = "balm"

    def __init__(self, r=1.0, delta=1.0, max_iter=100000, tol_primal=1e-8, tol_step=1e-10,
                 store_iterates=True):
        self.r = r
        self.delta = delta
        self.max_iter = max_iter
        self.tol_primal = tol_primal
        self.tol_step = tol_step
        self.store_iterates = store_iterates

    def _build(self, problem):
        r = check_positive(self.r, "r")
        delta = check_positive(self.delta, "delta")
        A, b, theta, n, m = problem.A, problem.b, problem.theta, problem.n, problem.m
        G = A @ A.T / r + delta * np.eye(m)
        try:
            L = linalg.cholesky(G, lower=True)
        except linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError("B-ALM multiplier matrix is not positive definite") from exc
        ge = problem.sense is Sense.GE
        # free set of the last projection and the Cholesky factor of G on it
        cache = {"free": None, "factor": None}

        def project(lam, g):
            """``min 1/2 ||z - lam||_G^2 + g'z  s.t.  z >= 0``.

            The free set of the previous call is tried first: solving on it and
            checking the KKT conditions is exact when the set is unchanged,
            which is the common case near convergence. Otherwise NNLS.
            """
            rhs = G @ lam - g
            free = cache["free"]
            if free is not None and free.any():
                z = np.zeros(m)
                z[free] = linalg.cho_solve(cache["factor"], rhs[free])
                mult = G @ z - rhs
                scale = 1e-13 * (1.0 + np.abs(rhs).max())
                if z[free].min() >= 0.0 and mult[~free].min(initial=0.0) >= -scale:
                    return z
            d = L.T @ lam - linalg.solve_triangular(L, g, lower=True)
            z = optimize.nnls(L.T, d)[0]
            free = z > 0.0
            if not np.array_equal(free, cache["free"]):
                cache["free"] = free
                cache["factor"] = linalg.cho_factor(G[np.ix_(free, free)]) if free.any() else None
            return z

        def dual_step(lam, g):
            if not ge:
                return lam - linalg.cho_solve((L, True), g)
            return project(lam, g)

        def step(w):
            x, lam = w[:n], w[n:]
            x_new = theta.prox(x + (A.T @ lam) / r, r)
            lam_new = dual_step(lam, A @ (2.0 * x_new - x) - b)
            return np.concatenate([x_new, lam_new])

        metric = MetricH.npdhg2(A, r, ExplicitQ(delta * np.eye(m)))
        return Scheme(step, metric, {"r": r, "delta": delta}, n)
