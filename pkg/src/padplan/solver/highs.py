"""HiGHS backend through ``scipy.optimize.milp``.

Used for models too large for the native tree search to close in
reasonable time.  The incumbent is polished by the native simplex with
every integer column fixed at its rounded value, so reported continuous
values obey the same tolerances as native solves.
"""

from __future__ import annotations

import time

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from padplan.solver.result import SolveResult, SolverConfig, SolveStats
from padplan.solver.simplex import BoundedSimplex, StandardForm


def solve_highs(prob, config: SolverConfig) -> SolveResult:
    start = time.monotonic()
    senses = prob.senses
    lb = np.where(senses == "<=", -np.inf, prob.rhs)
    ub = np.where(senses == ">=", np.inf, prob.rhs)
    options = {"mip_rel_gap": config.gap}
    if config.time_limit is not None:
        options["time_limit"] = config.time_limit
    if config.node_limit is not None:
        options["node_limit"] = config.node_limit
    constraints = [LinearConstraint(prob.A, lb, ub)] if prob.A.shape[0] else []
    res = milp(
        prob.c,
        constraints=constraints,
        integrality=prob.integer.astype(np.int8),
        bounds=Bounds(prob.lo, prob.hi),
        options=options,
    )
    stats = SolveStats(
        nodes=int(getattr(res, "mip_node_count", 0) or 0),
        backend="highs",
    )
    if res.status == 2:
        stats.wall_time = time.monotonic() - start
        return SolveResult("infeasible", stats=stats)
    if res.status == 3:
        stats.wall_time = time.monotonic() - start
        return SolveResult("unbounded", stats=stats)
    if res.x is None:
        stats.wall_time = time.monotonic() - start
        return SolveResult("time-limit", stats=stats)
    status = "optimal" if res.status == 0 else "time-limit"
    values, objective = _polish(prob, np.asarray(res.x, dtype=float), stats)
    bound = getattr(res, "mip_dual_bound", None)
    stats.wall_time = time.monotonic() - start
    return SolveResult(status, objective, values, None if bound is None else float(bound), stats)


def _polish(prob, x: np.ndarray, stats: SolveStats):
    ints = prob.integer
    if not ints.any():
        return x, float(prob.c @ x)
    lo, hi = prob.lo.copy(), prob.hi.copy()
    r = np.round(x[ints])
    lo[ints] = r
    hi[ints] = r
    engine = BoundedSimplex(StandardForm(prob.A, prob.senses, prob.rhs, prob.c))
    out = engine.solve(lo, hi)
    stats.lp_iterations += out.iterations
    if out.status != "optimal":
        x = x.copy()
        x[ints] = r
        return x, float(prob.c @ x)
    xs = out.x
    xs[ints] = r
    return xs, float(prob.c @ xs)
