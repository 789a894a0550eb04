"""LP/MILP engine and the exhaustive oracle."""

from padplan.solver.brute import DEFAULT_CAP, SearchSpaceError, brute_force, search_space_size
from padplan.solver.milp import Problem, choose_backend, solve_lp, solve_milp
from padplan.solver.result import SolveResult, SolverConfig, SolverError, SolveStats

__all__ = [
    "DEFAULT_CAP",
    "Problem",
    "SearchSpaceError",
    "SolveResult",
    "SolveStats",
    "SolverConfig",
    "SolverError",
    "brute_force",
    "choose_backend",
    "search_space_size",
    "solve_lp",
    "solve_milp",
]
