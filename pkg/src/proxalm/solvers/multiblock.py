"""Multi-block schemes for ``min sum_i theta_i(x_i)  s.t.  sum_i A_i x_i = b (or >= b)``."""

import numpy as np

from .._validation import ParameterError, check_positive
from ..metric import ExplicitQ, MetricH, ProxForm
from ..model import ConstrainedProblem, Sense, SeparableProblem
from ..spectral import SAFETY, safe_rho
from ._base import BaseSolver, Scheme, as_separable, metric_step, per_block, primal_q, prox_step


def _dual_step_size(rs):
    # p = 1 must reproduce the single-block step exactly
    return rs[0] if len(rs) == 1 else 1.0 / sum(1.0 / r for r in rs)


class PDALM(BaseSolver):
    """Parallel (Jacobi) splitting of P-ALM over ``p`` blocks.

    All blocks update from the same ``(x^k, lam^k)``::

        x_i+ = argmin theta_i(x_i) - <lam, A_i x_i> + 1/2 ||x_i - x_i||^2_{r_i A_i'A_i + Q_i}
        lam+ = lam - (sum_j 1/r_j)^{-1} (sum_i A_i(2 x_i+ - x_i) - b)

    ``r``, ``tau`` and ``Q`` accept a scalar (shared) or one entry per block.
    A :class:`ConstrainedProblem` is treated as a single block.
    """

    solver_id = "pdalm"
    problem_types = (SeparableProblem, ConstrainedProblem)

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
        problem = as_separable(problem)
        p = problem.p
        rs = [check_positive(r, "r") for r in per_block(self.r, p, "r")]
        taus = per_block(self.tau, p, "tau")
        Qs = per_block(self.Q, p, "Q")
        qs, steps = [], []
        for (theta, Ai), r, tau, Q in zip(problem.blocks, rs, taus, Qs):
            q = primal_q(Ai, r, tau, Q)
            qs.append(q)
            steps.append(prox_step(theta, Ai, r, q))
        blocks = [Ai for _, Ai in problem.blocks]
        cuts = np.cumsum(problem.sizes)[:-1]
        n, b = problem.n, problem.b
        rho = _dual_step_size(rs)
        ge = problem.sense is Sense.GE

        def step(w):
            xs, lam = np.split(w[:n], cuts), w[n:]
            new = [f(xi, Ai.T @ lam) for f, xi, Ai in zip(steps, xs, blocks)]
            coupling = sum(Ai @ (2.0 * xn - xi) for Ai, xn, xi in zip(blocks, new, xs))
            lam_new = lam - rho * (coupling - b)
            if ge:
                lam_new = np.maximum(lam_new, 0.0)
            return np.concatenate(new + [lam_new])

        params = {"r": rs, "tau": [q.tau if isinstance(q, ProxForm) else None for q in qs],
                  "p": p}
        metric = MetricH.block([(r, q, Ai) for r, q, Ai in zip(rs, qs, blocks)])
        return Scheme(step, metric, params, n)


class DPALM(BaseSolver):
    """Dual-primal variant: multiplier first, then parallel primal steps.

    ::

        lam+ = lam - (sum_j 1/r_j)^{-1} (sum_i A_i x_i - b)
        x_i+ = argmin theta_i(x_i) - <2 lam+ - lam, A_i x_i> + 1/2 ||x_i - x_i||^2_{Q_i + s_i I}

    ``Q_i`` must dominate ``r_i A_i'A_i``; by default ``Q_i = 1.01 r_i rho(A_i'A_i) I``
    so each primal step is a plain prox with weight ``Q_i + s_i``.
    """

    solver_id = "dpalm"
    problem_types = (SeparableProblem, ConstrainedProblem)

    def __init__(self, r=1.0, s=1.0, Q=None, max_iter=100000, tol_primal=1e-8,
                 tol_step=1e-10, store_iterates=True):
        self.r = r
        self.s = s
        self.Q = Q
        self.max_iter = max_iter
        self.tol_primal = tol_primal
        self.tol_step = tol_step
        self.store_iterates = store_iterates

    def _build(self, problem):
        problem = as_separable(problem)
        p = problem.p
        rs = [check_positive(r, "r") for r in per_block(self.r, p, "r")]
        ss = [check_positive(s, "s") for s in per_block(self.s, p, "s")]
        Qs = per_block(self.Q, p, "Q")
        blocks = [Ai for _, Ai in problem.blocks]
        qs, steps = [], []
        for (theta, Ai), r, s, Q in zip(problem.blocks, rs, ss, Qs):
            ni = Ai.shape[1]
            if Q is None:
                Q = SAFETY * r * safe_rho(Ai) * np.eye(ni)
            q = ExplicitQ(Q)
            if q.Q.shape != (ni, ni):
                raise ParameterError(f"Q_i must be {ni}x{ni}")
            gap = q.Q - r * (Ai.T @ Ai)
            if np.linalg.eigvalsh((gap + gap.T) / 2).min() < -1e-10 * max(1.0, np.abs(q.Q).max()):
                raise ParameterError("DP-ALM needs Q_i - r_i A_i'A_i positive semidefinite")
            qs.append(q)
            steps.append(metric_step(theta, q.Q + s * np.eye(ni)))
        cuts = np.cumsum(problem.sizes)[:-1]
        n, b = problem.n, problem.b
        rho = _dual_step_size(rs)
        ge = problem.sense is Sense.GE

        def step(w):
            xs, lam = np.split(w[:n], cuts), w[n:]
            lam_new = lam - rho * (sum(Ai @ xi for Ai, xi in zip(blocks, xs)) - b)
            if ge:
                lam_new = np.maximum(lam_new, 0.0)
            ext = 2.0 * lam_new - lam
            new = [f(xi, Ai.T @ ext) for f, xi, Ai in zip(steps, xs, blocks)]
            return np.concatenate(new + [lam_new])

        params = {"r": rs, "s": ss, "p": p}
        metric = MetricH.dual_primal([(r, q, s, Ai) for r, q, s, Ai in zip(rs, qs, ss, blocks)])
        return Scheme(step, metric, params, n)
