import numpy as np
from sklearn.base import BaseEstimator

from .._validation import DivergenceError, ParameterError, check_positive, check_positive_int
from ..metric import ExplicitQ, MetricH, ProxForm
from ..model import ConstrainedProblem, SaddleProblem, SeparableProblem, validate
from ..spectral import SAFETY, is_spherical, power_iteration, safe_rho
from ..trace import SolveTrace, Status

DIVERGENCE_BOUND = 1e12


class Scheme:
    """One configured instance of an iteration map ``w -> w_tilde``.

    ``step`` maps the stacked point ``w^k`` to the scheme's output; ``metric``
    is the ``H`` in which the scheme contracts.
    """

    def __init__(self, step, metric, params, n):
        self.step = step
        self.metric = metric
        self.params = params
        self.n = n


class BaseSolver(BaseEstimator):
    """Shared driver loop; subclasses implement ``_build(problem) -> Scheme``.

    After :meth:`fit` the estimator carries ``w_``, ``x_``, ``dual_``,
    ``trace_``, ``n_iter_``, ``status_`` and ``metric_``.
    """

    solver_id = None
    problem_types = (ConstrainedProblem,)
    # the classic PDHG baseline may legitimately diverge
    divergence_is_status = False

    def _check_problem(self, problem):
        if not isinstance(problem, self.problem_types):
            names = ", ".join(t.__name__ for t in self.problem_types)
            raise ParameterError(f"{self.solver_id} solves {names}, got {type(problem).__name__}")
        report = validate(problem)
        if report:
            raise ParameterError("invalid problem: " + "; ".join(report))

    def _build(self, problem):
        raise NotImplementedError

    def _start(self, problem, x0, dual0):
        if x0 is None:
            x = np.zeros(problem.n)
        elif isinstance(x0, (list, tuple)):
            # per-block starts for separable problems
            x = np.concatenate([np.ravel(np.asarray(v, dtype=float)) for v in x0])
        else:
            x = np.asarray(x0, dtype=float).ravel()
        y = np.zeros(problem.m) if dual0 is None else np.asarray(dual0, dtype=float).ravel()
        if x.size != problem.n or y.size != problem.m:
            raise ParameterError(
                f"start point must have sizes ({problem.n}, {problem.m}), got ({x.size}, {y.size})"
            )
        return np.concatenate([x, y])

    def fit(self, problem, x0=None, dual0=None):
        """Run the scheme on ``problem`` from ``(x0, dual0)`` (zeros by default)."""
        self._check_problem(problem)
        scheme = self._build(problem)
        w0 = self._start(problem, x0, dual0)
        self._store(problem, scheme, self._run(problem, scheme, w0, 1.0))
        return self

    def _store(self, problem, scheme, trace):
        self.trace_ = trace
        self.metric_ = scheme.metric
        self.w_ = trace.final.copy()
        self.x_, self.dual_ = self.w_[: scheme.n], self.w_[scheme.n:]
        self.n_iter_ = trace.n_iter
        self.status_ = trace.status

    def _loop_params(self):
        return (check_positive_int(self.max_iter, "max_iter"),
                check_positive(self.tol_primal, "tol_primal"),
                check_positive(self.tol_step, "tol_step"))

    def _run(self, problem, scheme, w0, gamma, solver_id=None):
        max_iter, tol_primal, tol_step = self._loop_params()
        saddle = isinstance(problem, SaddleProblem)
        metric, step = scheme.metric, scheme.step
        n = scheme.n
        keep = [w0.copy()]
        rows = np.empty((max_iter, 5))
        status = Status.MAX_ITER
        w = w0
        k = 0
        while k < max_iter:
            w_tilde = step(w)
            w_new = w_tilde if gamma == 1.0 else w + gamma * (w_tilde - w)
            if not np.all(np.isfinite(w_new)) or np.abs(w_new).max() > DIVERGENCE_BOUND:
                if self.divergence_is_status:
                    status = Status.DIVERGED
                    break
                raise DivergenceError(f"{solver_id or self.solver_id}: iterate diverged at k={k + 1}")
            k += 1
            dw = w_new - w
            h_step, dual_res = metric.step_stats(dw)
            if saddle:
                primal_res = float(np.linalg.norm(dw))
                obj = problem.objective(w_new)
            else:
                primal_res = problem.primal_residual(w_new)
                obj = problem.objective(w_new[:n])
            rows[k - 1] = (k, primal_res, obj, h_step, dual_res)
            w = w_new
            if self.store_iterates:
                keep.append(w)
            if primal_res <= tol_primal and h_step <= tol_step:
                status = Status.CONVERGED
                break
        if not self.store_iterates and k > 0:
            keep.append(w)
        params = dict(scheme.params)
        params.update(max_iter=max_iter, tol_primal=tol_primal, tol_step=tol_step)
        return SolveTrace(
            solver_id=solver_id or self.solver_id,
            params=params,
            n=n,
            status=status,
            iterates=np.array(keep),
            history=rows[:k].copy(),
            gamma=gamma,
        )


def primal_q(A, r, tau, Q, name="tau"):
    """Resolve the ``(tau, Q)`` pair into a ProxForm or ExplicitQ for ``r A'A + Q``.

    ``tau`` defaults to ``1.01 r rho(A'A)`` when neither is given.
    """
    if tau is not None and Q is not None:
        raise ParameterError(f"give either {name} or Q, not both")
    if Q is not None:
        q = ExplicitQ(Q)
        n = A.shape[1]
        if q.Q.shape != (n, n):
            raise ParameterError(f"Q must be {n}x{n}")
        check_spd(q.Q, "Q")
        return q
    rho = safe_rho(A) if tau is None else power_iteration(A)
    if tau is None:
        return ProxForm(SAFETY * r * rho)
    tau = check_positive(tau, name)
    if not tau - r * rho > 1e-12 * tau:
        raise ParameterError(f"{name}={tau} must exceed r*rho(A'A)={r * rho:.6g}")
    return ProxForm(tau)


def check_spd(Q, name):
    if not np.allclose(Q, Q.T, rtol=0, atol=1e-12 * max(1.0, np.abs(Q).max())):
        raise ParameterError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(Q)
    except np.linalg.LinAlgError as exc:
        raise ParameterError(f"{name} must be positive definite") from exc


def metric_step(theta, M):
    """Solver for ``argmin theta(x) - v'x + (1/2)||x - x_k||_M^2``.

    Returns ``f(x_k, v)``. A spherical ``M = c I`` reduces to the prox with
    weight ``c``; otherwise the oracle must support a metric solve.
    """
    if theta.supports_metric:
        solve = theta.metric_prox(M)
        return lambda xk, v: solve(M @ xk + v)
    c = is_spherical(M)
    if c is None:
        raise ParameterError(
            f"the {theta.kind} objective needs a spherical metric (use the prox form)"
        )
    return lambda xk, v: theta.prox(xk + v / c, c)


def prox_step(theta, A, r, q):
    """x-update ``argmin theta(x) - v'x + (1/2)||x - x_k||^2_{r A'A + Q}``."""
    if isinstance(q, ProxForm):
        tau = q.tau
        return lambda xk, v: theta.prox(xk + v / tau, tau)
    return metric_step(theta, r * (A.T @ A) + q.Q)


def as_separable(problem):
    if isinstance(problem, ConstrainedProblem):
        return SeparableProblem([(problem.theta, problem.A)], problem.b, problem.sense)
    return problem


def _is_matrix(value):
    try:
        return np.asarray(value, dtype=float).ndim == 2
    except (TypeError, ValueError):
        return False


def per_block(value, p, name):
    """Broadcast a scalar (or ``None``) to ``p`` blocks; lists must have length ``p``.

    A nested list that reads as one 2-D matrix is a single shared ``Q``.
    """
    if isinstance(value, (list, tuple)) and name == "Q" and _is_matrix(value):
        return [value] * p
    if isinstance(value, (list, tuple)):
        if len(value) != p:
            raise ParameterError(f"{name} needs {p} entries, got {len(value)}")
        return list(value)
    return [value] * p


__all__ = ["BaseSolver", "Scheme", "MetricH"]
