"""Iterative schemes. Each class is an estimator whose ``fit`` records a
:class:`~proxalm.trace.SolveTrace`; the ``solve_*`` functions are thin
wrappers returning that trace directly."""

from .._validation import ParameterError
from ._base import BaseSolver, Scheme
from .alm import BALM, PALM
from .multiblock import DPALM, PDALM
from .pdhg import NPDHG1, NPDHG2, PDHG
from .relax import Relaxed, relax

SOLVERS = {
    "palm": PALM,
    "balm": BALM,
    "pdalm": PDALM,
    "dpalm": DPALM,
    "npdhg1": NPDHG1,
    "npdhg2": NPDHG2,
    "pdhg": PDHG,
}


def solver_from_trace(trace):
    """Unfitted solver reproducing the configuration recorded in ``trace``.

    Rebuilding it on the same problem gives the same metric ``H``. Explicit
    ``Q`` matrices are not stored in traces, so such runs cannot be rebuilt.
    """
    sid = trace.solver_id
    relaxed = sid.startswith("relax(")
    base = sid[len("relax("):-1] if relaxed else sid
    if base not in SOLVERS:
        raise ParameterError(f"unknown solver id {sid!r}")
    flat = [v for val in trace.params.values() for v in (val if isinstance(val, list) else [val])]
    if any(v is None for v in flat):
        raise ParameterError("trace was produced with an explicit Q and cannot be rebuilt")
    cls = SOLVERS[base]
    names = cls().get_params()
    solver = cls(**{k: v for k, v in trace.params.items() if k in names})
    return Relaxed(solver, trace.params["gamma"]) if relaxed else solver


def _solve(cls, problem, x0=None, dual0=None, gamma=None, **params):
    solver = cls(**params)
    if gamma is not None:
        solver = Relaxed(solver, gamma)
    return solver.fit(problem, x0, dual0).trace_


def solve_palm(problem, x0=None, lambda0=None, **params):
    return _solve(PALM, problem, x0, lambda0, **params)


def solve_balm(problem, x0=None, lambda0=None, **params):
    return _solve(BALM, problem, x0, lambda0, **params)


def solve_pdalm(problem, x0=None, lambda0=None, **params):
    return _solve(PDALM, problem, x0, lambda0, **params)


def solve_dpalm(problem, x0=None, lambda0=None, **params):
    return _solve(DPALM, problem, x0, lambda0, **params)


def solve_npdhg1(problem, x0=None, y0=None, **params):
    return _solve(NPDHG1, problem, x0, y0, **params)


def solve_npdhg2(problem, x0=None, y0=None, **params):
    return _solve(NPDHG2, problem, x0, y0, **params)


def solve_pdhg_classic(problem, x0=None, y0=None, **params):
    return _solve(PDHG, problem, x0, y0, **params)


__all__ = [
    "BaseSolver", "Scheme", "PALM", "BALM", "PDALM", "DPALM", "NPDHG1", "NPDHG2", "PDHG",
    "Relaxed", "relax", "SOLVERS", "solve_palm", "solve_balm", "solve_pdalm", "solve_dpalm",
    "solve_npdhg1", "solve_npdhg2", "solve_pdhg_classic", "solver_from_trace",
]
