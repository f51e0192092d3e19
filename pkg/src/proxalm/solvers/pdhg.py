"""Primal-dual hybrid gradient schemes for ``min_x max_y theta1(x) - y'Ax - theta2(y)``.

The y-updates below are read off the first-order conditions of the
subproblems rather than the min/max shorthand. For a y-step with metric
``N`` on the extrapolated point ``xb = 2 x+ - x`` the condition is::

    theta2(y') - theta2(y+) + <y' - y+, A xb + N (y+ - y)> >= 0   for all y'

i.e. ``y+ = argmin theta2(y) + <y, A xb> + 1/2 ||y - y||_N^2``. With
``N = I / r`` this is ``theta2.prox(y - r A xb, 1 / r)``.
"""

import numpy as np

from .._validation import ParameterError, check_positive
from ..metric import ExplicitQ, MetricH, ProxForm
from ..model import SaddleProblem
from ..spectral import SAFETY, power_iteration, safe_rho
from ._base import BaseSolver, Scheme, check_spd, metric_step, primal_q, prox_step


class NPDHG1(BaseSolver):
    """PDHG with the P-ALM primal metric ``r A'A + Q``.

    ::

        x+ = argmin_{x in X} theta1(x) - <y, Ax> + 1/2 ||x - x||^2_{r A'A + Q}
        y+ = theta2.prox(y - r A(2 x+ - x), 1 / r)

    No strong convexity of ``theta1`` is needed. By default
    ``Q = tau I - r A'A`` with ``tau = 1.01 r rho(A'A)``.
    """

    solver_id = "npdhg1"
    problem_types = (SaddleProblem,)

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
        A, n = problem.A, problem.n
        th1, th2 = problem.theta1, problem.theta2
        q = primal_q(A, r, self.tau, self.Q)
        xstep = prox_step(th1, A, r, q)
        inv_r = 1.0 / r

        def step(w):
            x, y = w[:n], w[n:]
            x_new = xstep(x, A.T @ y)
            y_new = th2.prox(y - r * (A @ (2.0 * x_new - x)), inv_r)
            return np.concatenate([x_new, y_new])

        params = {"r": r, "tau": q.tau if isinstance(q, ProxForm) else None}
        return Scheme(step, MetricH.npdhg1(A, r, q), params, n)


class NPDHG2(BaseSolver):
    """PDHG with a plain primal prox and a metric dual step.

    ::

        x+ = theta1.prox(x + A'y / r, r)
        y+ = argmin_{y in Y} theta2(y) + <y, A(2 x+ - x)> + 1/2 ||y - y||^2_{AA'/r + Q}

    The dual metric ``AA'/r + Q`` makes the scheme contract in
    ``[[r I, A'], [A, AA'/r + Q]]`` for any ``r > 0``. In prox form
    ``AA'/r + Q = sigma I`` with ``sigma > rho(AA')/r`` (default ``1.01 rho / r``).
    """

    solver_id = "npdhg2"
    problem_types = (SaddleProblem,)

    def __init__(self, r=1.0, sigma=None, Q=None, max_iter=100000, tol_primal=1e-8,
                 tol_step=1e-10, store_iterates=True):
        self.r = r
        self.sigma = sigma
        self.Q = Q
        self.max_iter = max_iter
        self.tol_primal = tol_primal
        self.tol_step = tol_step
        self.store_iterates = store_iterates

    def _build(self, problem):
        r = check_positive(self.r, "r")
        A, n, m = problem.A, problem.n, problem.m
        th1, th2 = problem.theta1, problem.theta2
        if self.sigma is not None and self.Q is not None:
            raise ParameterError("give either sigma or Q, not both")
        if self.Q is not None:
            q = ExplicitQ(self.Q)
            if q.Q.shape != (m, m):
                raise ParameterError(f"Q must be {m}x{m}")
            check_spd(q.Q, "Q")
            solve = metric_step(th2, A @ A.T / r + q.Q)
            ystep = lambda y, xb: solve(y, -(A @ xb))  # noqa: E731
        else:
            rho = safe_rho(A) if self.sigma is None else power_iteration(A)
            sigma = SAFETY * rho / r if self.sigma is None else check_positive(self.sigma, "sigma")
            if not sigma - rho / r > 1e-12 * sigma:
                raise ParameterError(f"sigma={sigma} must exceed rho(AA')/r={rho / r:.6g}")
            q = ProxForm(sigma)
            ystep = lambda y, xb: th2.prox(y - (A @ xb) / sigma, sigma)  # noqa: E731

        def step(w):
            x, y = w[:n], w[n:]
            x_new = th1.prox(x + (A.T @ y) / r, r)
            y_new = ystep(y, 2.0 * x_new - x)
            return np.concatenate([x_new, y_new])

        params = {"r": r, "sigma": q.tau if isinstance(q, ProxForm) else None}
        return Scheme(step, MetricH.npdhg2(A, r, q), params, n)


class _PdhgMetric:
    """Block-diagonal step norm for the classic scheme, which has no contraction metric.

    ``primal_row`` still returns the subgradient residual ``r dx + A'dy``.
    """

    kind = "pdhg"

    def __init__(self, A, r, s):
        self.A, self.r, self.s = A, r, s
        self.n = A.shape[1]

    def quadratic_form(self, w):
        w = np.asarray(w, dtype=float)
        dx, dy = w[..., : self.n], w[..., self.n:]
        val = self.r * np.einsum("...i,...i->...", dx, dx) + self.s * np.einsum(
            "...i,...i->...", dy, dy)
        return float(val) if np.ndim(val) == 0 else val

    def norm(self, w):
        return float(np.sqrt(self.quadratic_form(w)))

    def primal_row(self, w):
        return self.r * w[: self.n] + self.A.T @ w[self.n:]

    def step_stats(self, dw):
        return self.norm(dw), float(np.linalg.norm(self.primal_row(dw)))


class PDHG(BaseSolver):
    """Classic PDHG without extrapolation (baseline).

    ::

        x+ = theta1.prox(x + A'y / r, r)
        y+ = theta2.prox(y - A x+ / s, s)

    Convergence needs a strongly convex ``theta1`` and ``r s > rho(A'A)``;
    outside that regime the run may oscillate or diverge, which is reported
    through ``status_`` rather than raised.
    """

    solver_id = "pdhg"
    problem_types = (SaddleProblem,)
    divergence_is_status = True

    def __init__(self, r=1.0, s=1.0, max_iter=100000, tol_primal=1e-8, tol_step=1e-10,
                 store_iterates=True):
        self.r = r
        self.s = s
        self.max_iter = max_iter
        self.tol_primal = tol_primal
        self.tol_step = tol_step
        self.store_iterates = store_iterates

    def _build(self, problem):
        r = check_positive(self.r, "r")
        s = check_positive(self.s, "s")
        A, n = problem.A, problem.n
        th1, th2 = problem.theta1, problem.theta2

        def step(w):
            x, y = w[:n], w[n:]
            x_new = th1.prox(x + (A.T @ y) / r, r)
            y_new = th2.prox(y - (A @ x_new) / s, s)
            return np.concatenate([x_new, y_new])

        return Scheme(step, _PdhgMetric(A, r, s), {"r": r, "s": s}, n)
