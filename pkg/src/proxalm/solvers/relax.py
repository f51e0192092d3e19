from sklearn.base import clone

from .._validation import ParameterError
from ._base import BaseSolver


class Relaxed(BaseSolver):
    """Relaxation wrapper ``w^{k+1} = w^k + gamma (w_tilde^k - w^k)``.

    ``w_tilde^k`` is the wrapped solver's output from ``w^k``; ``gamma`` must
    lie in ``(0, 2)``. ``gamma = 1`` reproduces the wrapped solver. The
    stopping tolerances and iteration budget are taken from ``solver``.
    """

    def __init__(self, solver, gamma=1.0):
        self.solver = solver
        self.gamma = gamma

    @property
    def solver_id(self):
        return f"relax({self.solver.solver_id})"

    @property
    def problem_types(self):
        return self.solver.problem_types

    @property
    def divergence_is_status(self):
        return self.solver.divergence_is_status

    def __getattr__(self, name):
        # loop settings live on the wrapped solver
        if name in ("max_iter", "tol_primal", "tol_step", "store_iterates"):
            return getattr(self.__dict__["solver"], name)
        raise AttributeError(name)

    def _build(self, problem):
        gamma = self.gamma
        if not 0.0 < gamma < 2.0:
            raise ParameterError(f"relaxation gamma must lie in (0, 2), got {gamma}")
        scheme = self.solver._build(problem)
        scheme.params = dict(scheme.params, gamma=float(gamma))
        return scheme

    def fit(self, problem, x0=None, dual0=None):
        self._check_problem(problem)
        scheme = self._build(problem)
        w0 = self._start(problem, x0, dual0)
        trace = self._run(problem, scheme, w0, float(self.gamma), solver_id=self.solver_id)
        self._store(problem, scheme, trace)
        return self


def relax(solver, gamma):
    """Wrap an unfitted copy of ``solver`` with relaxation factor ``gamma``."""
    if not 0.0 < gamma < 2.0:
        raise ParameterError(f"relaxation gamma must lie in (0, 2), got {gamma}")
    return Relaxed(clone(solver), gamma)
