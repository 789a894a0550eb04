"""Exhaustive oracle: every pad placement, every per-period on/off pattern.

Placements are enumerated outright.  For a fixed placement the periods do
not interact, so each period's switching pattern is chosen independently
by ``kernels.best_period_pattern`` using the closed-form charge map from
``chargeflow.transfer_operators``.  No LP is involved anywhere.
"""

from __future__ import annotations

import itertools
import time

import numpy as np

from padplan import kernels
from padplan.chargeflow import PadAssignment, evaluate_charge_flow, transfer_operators
from padplan.formulation import FormulationOptions, build_model
from padplan.network import NetworkInstance, derive_weights
from padplan.solver.result import SolveResult, SolveStats

DEFAULT_CAP = 2**22


class SearchSpaceError(ValueError):
    pass


def search_space_size(inst: NetworkInstance) -> int:
    R, M, L, T = inst.num_routes, inst.sites_per_route, inst.lengths, inst.horizon
    return (L + 1) ** (R * M) * 2 ** (R * T)


def brute_force(
    inst: NetworkInstance,
    options: FormulationOptions = FormulationOptions(),
    cap: int = DEFAULT_CAP,
    tol: float = 1e-9,
) -> SolveResult:
    size = search_space_size(inst)
    if size > cap:
        raise SearchSpaceError(f"search space {size} exceeds cap {cap}")
    start = time.monotonic()
    inst = derive_weights(inst)
    par = inst.params
    R, M, L, T = inst.num_routes, inst.sites_per_route, inst.lengths, inst.horizon
    K, base = transfer_operators(inst)
    eff = inst.effective_wc()  # (R, M, L, T)
    build_cost = par.ccc + par.ccf.sum(axis=2)[:, :, None]  # (R, M, L)

    best_cost = np.inf
    best = None
    evaluated = 0
    # choice 0 = no pad at the site, k = pad of length k
    for choice in itertools.product(range(L + 1), repeat=R * M):
        evaluated += 1
        pick = np.asarray(choice, dtype=np.int64).reshape(R, M)
        x = np.zeros((R, M, L), dtype=np.int8)
        r_idx, m_idx = np.nonzero(pick)
        x[r_idx, m_idx, pick[r_idx, m_idx] - 1] = 1
        if options.use_budget and float(np.sum(par.ccc * x)) > par.budget + tol:
            continue
        fixed = float(np.sum(build_cost * x))
        if fixed >= best_cost:
            continue
        site_charge = np.einsum("rmlt,rml->rmt", eff, x)  # (R, M, T)
        gain = site_charge.sum(axis=1)  # (R, T)
        varcost = np.einsum("rmt,rmt->rt", par.ccv, site_charge)
        total = fixed
        p = np.zeros((R, T), dtype=np.int8)
        for t in range(T):
            cost_t, p_t = kernels.best_period_pattern(
                np.ascontiguousarray(K[t]),
                np.ascontiguousarray(base[t]),
                np.ascontiguousarray(gain[:, t]),
                np.ascontiguousarray(varcost[:, t]),
                np.ascontiguousarray(par.cc[:, t]),
                float(par.ma),
                tol,
            )
            if p_t is None:
                total = np.inf
                break
            total += cost_t
            p[:, t] = p_t
            if total >= best_cost:
                break
        if total < best_cost:
            best_cost = total
            best = (x, p)

    stats = SolveStats(nodes=evaluated, wall_time=time.monotonic() - start)
    if best is None:
        return SolveResult("infeasible", stats=stats)
    assign = PadAssignment(*best)
    _, vmap = build_model(inst, options)
    values = vmap.encode(inst, assign, evaluate_charge_flow(inst, assign))
    return SolveResult("optimal", float(best_cost), values, float(best_cost), stats, assign)
