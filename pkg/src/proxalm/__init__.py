"""Proximal augmented Lagrangian and primal-dual solvers with convergence certificates."""

from ._validation import DivergenceError, ParameterError
from .metric import ExplicitQ, MetricH, ProxForm
from .model import (ConstrainedProblem, SaddleProblem, SeparableProblem, Sense, load_problem,
                    save_problem, split_columns, validate)
from .prox import (L1, BoxIndicator, LinearNonneg, ProxOracle, Quadratic, SimplexIndicator, Zero,
                   project_nonneg, project_simplex, prox_quadratic, soft_threshold)
from .solvers import (BALM, DPALM, NPDHG1, NPDHG2, PALM, PDALM, PDHG, SOLVERS, Relaxed, relax,
                      solve_balm, solve_dpalm, solve_npdhg1, solve_npdhg2, solve_palm,
                      solve_pdalm, solve_pdhg_classic)
from .trace import IterateRecord, SolveTrace, Status

__version__ = "0.1.0"
