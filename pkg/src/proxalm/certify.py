"""Numerical checks of the convergence guarantees on recorded traces.

All inequalities are checked with an additive slack that scales with the
size of the quantities involved (``1e-9 * (1 + ||.||_H^2)`` by default),
never with a purely relative tolerance, because several of them sit at or
near zero.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize
from scipy.sparse import linalg as sparse_linalg

from ._validation import ParameterError, check_positive

__all__ = [
    "CheckReport",
    "ErgodicAverage",
    "h_quadratic_form",
    "check_contraction",
    "check_monotone_distance",
    "check_summed_contraction",
    "check_pointwise_rate",
    "check_dual_residual_rate",
    "random_probes",
    "ergodic_average",
    "check_ergodic_bound",
    "gamma_eta",
    "check_gamma_eta_bound",
    "dual_residual",
    "check_skew_symmetry",
    "check_h_positive",
    "best_response_gap",
    "write_reports",
]

SLACK_SCALE = 1e-9


@dataclass
class CheckReport:
    """Outcome of one check: per-item margins (``>= -slack`` passes)."""

    name: str
    passed: bool
    worst_margin: float
    worst_index: int
    slack: float
    margins: np.ndarray = field(repr=False, default=None)

    @classmethod
    def from_margins(cls, name, margins, slack):
        margins = np.asarray(margins, dtype=float)
        slack = np.broadcast_to(np.asarray(slack, dtype=float), margins.shape)
        if margins.size == 0:
            return cls(name, True, float("inf"), -1, 0.0, margins)
        # normalise by the allowed slack so the worst item is the one closest to failing
        i = int(np.argmin(margins + slack))
        passed = bool(np.all(margins >= -slack))
        return cls(name, passed, float(margins[i]), i, float(slack[i]), margins)

    @property
    def failures(self):
        return int(np.sum(self.margins < -self.slack)) if self.margins is not None else 0

    def to_dict(self):
        return {"name": self.name, "passed": self.passed, "worst_margin": self.worst_margin,
                "worst_iteration": self.worst_index, "slack": self.slack}


@dataclass
class ErgodicAverage:
    kappa: int
    T: int
    w_T: np.ndarray
    x_T: np.ndarray


def h_quadratic_form(H, w):
    """``||w||_H^2`` via the factored decomposition of ``H``."""
    return H.quadratic_form(w)


def _iterates(trace):
    if not trace.has_all_iterates:
        raise ParameterError("certificate needs every iterate; rerun with store_iterates=True")
    return trace.iterates


def _default_slack(H, w0):
    return SLACK_SCALE * (1.0 + H.quadratic_form(w0))


def _distances(H, W, w_star):
    return np.atleast_1d(H.quadratic_form(w_star - W))


def _steps(H, W):
    return np.atleast_1d(H.quadratic_form(W[:-1] - W[1:]))


def check_contraction(trace, H, w_star, slack=None, gamma=None):
    """``||w*-w^{k+1}||_H^2 <= ||w*-w^k||_H^2 - c ||w^k-w^{k+1}||_H^2`` at every k.

    ``c = (2 - gamma) / gamma`` for a relaxed run (``c = 1`` unrelaxed);
    ``gamma`` defaults to the trace's own relaxation factor.
    """
    W = _iterates(trace)
    gamma = trace.gamma if gamma is None else gamma
    c = (2.0 - gamma) / gamma
    if slack is None:
        slack = _default_slack(H, W[0])
    D = _distances(H, W, w_star)
    S = _steps(H, W)
    return CheckReport.from_margins("contraction", D[:-1] - c * S - D[1:], slack)


def check_monotone_distance(trace, H, w_star, slack=None):
    W = _iterates(trace)
    if slack is None:
        slack = _default_slack(H, W[0])
    D = _distances(H, W, w_star)
    return CheckReport.from_margins("monotone_distance", D[:-1] - D[1:], slack)


def check_summed_contraction(trace, H, w_star, slack=None):
    """``sum_k ||w^k - w^{k+1}||_H^2 <= ||w* - w^0||_H^2``."""
    W = _iterates(trace)
    if slack is None:
        slack = _default_slack(H, W[0])
    total = _steps(H, W).sum()
    return CheckReport.from_margins("summed_contraction",
                                    [H.quadratic_form(w_star - W[0]) - total], slack)


def check_pointwise_rate(trace, H, w_star, slack=None):
    """``min_{t <= k} ||w^{t-1} - w^t||_H^2 <= ||w* - w^0||_H^2 / k`` for every k."""
    W = _iterates(trace)
    if slack is None:
        slack = _default_slack(H, W[0])
    best = np.minimum.accumulate(_steps(H, W))
    k = np.arange(1, best.size + 1)
    return CheckReport.from_margins("pointwise_rate",
                                    H.quadratic_form(w_star - W[0]) / k - best, slack)


def ergodic_average(trace, kappa, T):
    """Mean of ``w^{k+1}`` for ``k = kappa, ..., kappa + T``."""
    if kappa < 0 or T < 0:
        raise ParameterError("kappa and T must be nonnegative")
    if kappa + T + 1 > trace.n_iter:
        raise ParameterError(
            f"window kappa={kappa}, T={T} needs {kappa + T + 1} iterations, trace has {trace.n_iter}"
        )
    W = _iterates(trace)
    w_T = W[kappa + 1: kappa + T + 2].mean(axis=0)
    return ErgodicAverage(kappa, T, w_T, w_T[: trace.n])


def check_ergodic_bound(trace, problem, H, kappa, T, probes):
    """Gap bound of the ergodic average at each probe point ``w`` in the domain::

        theta(x_T) - theta(x) + <w_T - w, J(w)> <= ||w^kappa - w||_H^2 / (2 gamma (T + 1))

    For a relaxed run (``gamma != 1``) the bound concerns the average of the
    unrelaxed outputs ``w_tilde^k = w^k + (w^{k+1} - w^k) / gamma``, which are
    recovered from consecutive iterates.
    """
    avg = ergodic_average(trace, kappa, T)
    gamma = trace.gamma
    w_kappa = trace.iterates[kappa]
    w_T = avg.w_T
    if gamma != 1.0:
        W = trace.iterates[kappa: kappa + T + 2]
        w_T = (W[:-1] + (W[1:] - W[:-1]) / gamma).mean(axis=0)
    theta_T = problem.theta_value(w_T)
    margins, slacks = [], []
    for w in np.atleast_2d(probes):
        if not problem.in_domain(w, tol=1e-9):
            raise ParameterError("ergodic probe lies outside the feasible domain")
        lhs = theta_T - problem.theta_value(w) + (w_T - w) @ problem.vi_operator(w)
        dist = H.quadratic_form(w_kappa - w)
        margins.append(dist / (2.0 * gamma * (T + 1)) - lhs)
        slacks.append(SLACK_SCALE * (1.0 + dist))
    return CheckReport.from_margins("ergodic_bound", margins, np.array(slacks))


def _dual_block(H):
    """The ``lam``-``lam`` block of ``H``: a scalar ``c`` (meaning ``c I``) or a matrix."""
    if H.kind in ("palm", "npdhg1", "block", "dual_primal"):
        return H.dual_weight
    q = H.blocks[0].q
    if hasattr(q, "tau"):
        return q.tau
    zeros = np.zeros(H.n)
    return np.column_stack([H.apply(np.concatenate([zeros, e]))[H.n:] for e in np.eye(H.m)])


def _ball_max(G, h, eta):
    """``max_{||z|| <= eta} z'Gz - 2 h'z`` for symmetric positive semidefinite ``G``.

    The maximiser lies on the sphere with ``z = (G - mu I)^{-1} h`` for the
    root ``mu > lambda_max(G)`` of ``||z(mu)|| = eta``; when ``h`` has no
    component along the top eigenvector that root may not exist and the top
    eigenvector fills the remaining norm.
    """
    evals, V = np.linalg.eigh(G)
    ht = V.T @ h
    top = evals[-1]
    hn = np.linalg.norm(h)
    if hn == 0.0:
        return top * eta ** 2

    gap = evals - top

    # parametrise mu = top + t so the root keeps full relative precision
    def excess(t):
        return np.sum((ht / (gap - t)) ** 2) - eta ** 2

    lo = 1e-14 * max(1.0, abs(top), hn / eta)
    hi = hn / eta
    if excess(lo) > 0.0:
        t = optimize.brentq(excess, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
        zt = ht / (gap - t)
    else:
        zt = np.where(gap < 0.0, ht / np.where(gap < 0.0, gap, 1.0), 0.0)
        zt[-1] = -np.sign(ht[-1] or 1.0) * np.sqrt(max(eta ** 2 - zt[:-1] @ zt[:-1], 0.0))
    return float(evals @ zt ** 2 - 2.0 * ht @ zt)


def gamma_eta(H, w_kappa, x_star, eta):
    """``sup_{||lam|| <= eta} ||(x*, lam) - w^kappa||_H^2`` for the given ``x*``.

    This upper-bounds the inf-sup over solutions. Write ``d = x* - x^kappa``,
    ``g`` for the dual rows of ``H (d; 0)`` and ``G`` for the dual block. As
    a function of ``lam`` the form is ``lam'G lam - 2 h'lam + const`` with
    ``h = G lam^kappa - g``.

    When ``G = c I`` (every kind except ``npdhg2`` with an explicit ``Q``)
    completing the square gives the closed form::

        d'H_xx d - ||g||^2 / c + c (||p|| + eta)^2,   p = lam^kappa - g / c,

    attained at ``lam = -eta p / ||p||``. Otherwise the ball maximisation is
    solved in the eigenbasis of ``G``.
    """
    eta = check_positive(eta, "eta")
    n = H.n
    lam_k = w_kappa[n:]
    d = np.concatenate([np.asarray(x_star, dtype=float) - w_kappa[:n], np.zeros(H.m)])
    Hd = H.apply(d)
    dxx = float(d @ Hd)
    g = Hd[n:]
    G = _dual_block(H)
    if np.ndim(G) == 0:
        p = lam_k - g / G
        return dxx - (g @ g) / G + G * (np.linalg.norm(p) + eta) ** 2
    const = dxx + lam_k @ G @ lam_k - 2.0 * g @ lam_k
    return const + _ball_max(G, G @ lam_k - g, eta)


def check_gamma_eta_bound(trace, problem, H, x_star, eta, kappa, T):
    """``theta(x_T) - theta(x*) + eta ||A x_T - b|| <= gamma_eta / (2 (T + 1))``.

    For ``Ax >= b`` the norm is taken of the violation ``min(A x_T - b, 0)``.
    """
    avg = ergodic_average(trace, kappa, T)
    g = gamma_eta(H, trace.iterates[kappa], x_star, eta)
    if hasattr(problem, "stacked"):
        problem = problem.stacked()
    lhs = (problem.objective(avg.x_T) - problem.objective(np.asarray(x_star))
           + eta * np.linalg.norm(problem.constraint_violation(avg.x_T)))
    rhs = g / (2.0 * (T + 1))
    return CheckReport.from_margins(f"gamma_eta(eta={eta:g})", [rhs - lhs],
                                    SLACK_SCALE * (1.0 + g))


def dual_residual(trace, H, t):
    """``||s^t||`` with ``s^t`` the primal rows of ``H (w^t - w^{t-1})``.

    For P-ALM this is ``(r A'A + Q)(x^t - x^{t-1}) + A'(lam^t - lam^{t-1})``.
    """
    if t < 1:
        raise ParameterError("dual residual needs t >= 1")
    W = _iterates(trace)
    if t >= len(W):
        raise ParameterError(f"t={t} beyond the recorded {len(W) - 1} iterations")
    return float(np.linalg.norm(H.primal_row(W[t] - W[t - 1])))


def _lambda_max(H):
    """Largest eigenvalue of ``H`` through matrix-vector products only."""
    if H.dim <= 200:
        dense = np.column_stack([H.apply(e) for e in np.eye(H.dim)])
        return float(np.linalg.eigvalsh((dense + dense.T) / 2.0)[-1])
    op = sparse_linalg.LinearOperator((H.dim, H.dim), matvec=H.apply, dtype=float)
    return float(sparse_linalg.eigsh(op, k=1, which="LA", tol=1e-10,
                                     return_eigenvectors=False)[0])


def check_dual_residual_rate(trace, H, w_star, slack=None):
    """``min_{t <= k} ||s^t||^2 <= lambda_max(H) ||w* - w^0||_H^2 / k`` for every k.

    ``s^t`` is a block of ``H d`` with ``d = w^t - w^{t-1}``, so
    ``||s^t||^2 <= ||H d||^2 <= lambda_max(H) ||d||_H^2`` and the pointwise
    rate of the H-steps carries over.
    """
    W = _iterates(trace)
    lam = _lambda_max(H) * (1.0 + 1e-8)
    if slack is None:
        slack = lam * _default_slack(H, W[0])
    s2 = np.array([np.sum(H.primal_row(b - a) ** 2) for a, b in zip(W[:-1], W[1:])])
    best = np.minimum.accumulate(s2)
    k = np.arange(1, best.size + 1)
    return CheckReport.from_margins("dual_residual_rate",
                                    lam * H.quadratic_form(w_star - W[0]) / k - best, slack)


def random_probes(problem, count, seed=0, scale=1.0):
    """Random points of the domain: Gaussian draws pushed into ``X`` (and ``Y`` or ``lam >= 0``).

    A prox with a very large weight lands in the oracle's domain while moving
    the point only slightly.
    """
    rng = np.random.default_rng(seed)
    W = scale * rng.standard_normal((count, problem.dim))
    for w in W:
        _push_into_domain(problem, w)
    return W


def _push_into_domain(problem, w):
    n = problem.n
    x = w[:n]
    if hasattr(problem, "theta1"):
        x[:] = problem.theta1.prox(x, 1e8)
        w[n:] = problem.theta2.prox(w[n:], 1e8)
        return
    theta = problem.theta if hasattr(problem, "theta") else problem.stacked().theta
    x[:] = theta.prox(x, 1e8)
    if problem.sense.value == "ge":
        w[n:] = np.abs(w[n:])


def check_skew_symmetry(problem, n_pairs=1000, seed=0, scale=1.0):
    """``<w - v, J(w) - J(v)> = 0`` on random pairs (``J`` is affine and skew)."""
    rng = np.random.default_rng(seed)
    margins, slacks = [], []
    for _ in range(n_pairs):
        w = scale * rng.standard_normal(problem.dim)
        v = scale * rng.standard_normal(problem.dim)
        val = (w - v) @ (problem.vi_operator(w) - problem.vi_operator(v))
        margins.append(-abs(val))
        slacks.append(1e-10 * (1.0 + np.linalg.norm(w) * np.linalg.norm(v)))
    return CheckReport.from_margins("skew_symmetry", margins, np.array(slacks))


def check_h_positive(H, n_samples=1000, seed=0):
    """``w'Hw > 0`` on random nonzero vectors; margins are ``w'Hw / ||w||^2``."""
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(n_samples):
        w = rng.standard_normal(H.dim)
        ratios.append(H.quadratic_form(w) / (w @ w))
    ratios = np.array(ratios)
    rep = CheckReport.from_margins("h_positive", ratios, 0.0)
    rep.passed = bool(np.all(ratios > 0))
    return rep


def best_response_gap(A, x, y):
    """Duality gap of the matrix game ``min_x max_y -y'Ax`` over two simplices."""
    A = np.asarray(A)
    return float(np.max(A.T @ y) - np.min(A @ x))


def write_reports(reports, path):
    Path(path).write_text(json.dumps({"passed": all(r.passed for r in reports),
                                      "checks": [r.to_dict() for r in reports]}, indent=2))
