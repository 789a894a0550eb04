"""Linearised mixed-integer planning model.

Columns are laid out family by family (x, u, p, z), each in lexicographic
index order:

* ``x(r,m,l)``  pad of length l built at site m of route r (binary)
* ``u(r,t)``    average charge on route r in period t, in [0, 1]
* ``p(r,t)``    pads of route r switched on in period t (binary)
* ``z(r,m,t)``  charge delivered by site m, equal to ``p * sum_l we*wc*x``

Names use 1-based route/site/length/period numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from padplan.chargeflow import ChargeFlowError, ChargeProfile, PadAssignment
from padplan.model import MilpModel, ModelError
from padplan.network import NetworkInstance, derive_weights

X_PRIORITY = 0
P_PRIORITY = 1


@dataclass(frozen=True)
class FormulationOptions:
    use_budget: bool = False
    big_m: float | None = None  # overrides the instance's big_m and the per-site default
    coverage_rows: bool = False  # add the implied rows of ``coverage_rows`` below


@dataclass(frozen=True, eq=False)
class PlacementSolution:
    status: str
    objective: float | None
    x: np.ndarray | None = None  # (R, M, L)
    p: np.ndarray | None = None  # (R, T)
    u: np.ndarray | None = None  # (R, T)
    z: np.ndarray | None = None  # (R, M, T)

    def assignment(self) -> PadAssignment:
        if self.x is None:
            raise ValueError(f"no assignment for a {self.status} solution")
        return PadAssignment(self.x, self.p)

    def pads_by_length(self) -> np.ndarray:
        return self.x.sum(axis=(0, 1)) if self.x is not None else None


@dataclass(frozen=True, eq=False)
class VariableMap:
    x: np.ndarray  # (R, M, L) column ids
    u: np.ndarray  # (R, T)
    p: np.ndarray  # (R, T)
    z: np.ndarray  # (R, M, T)

    @property
    def num_columns(self) -> int:
        return self.x.size + self.u.size + self.p.size + self.z.size

    def decode(self, values, status: str = "optimal", objective: float | None = None):
        v = np.asarray(values, dtype=float)
        x = np.rint(v[self.x]).astype(np.int8)
        # switching is meaningless on a route without pads; report it off
        p = np.rint(v[self.p]).astype(np.int8) * (x.sum(axis=(1, 2)) > 0)[:, None].astype(np.int8)
        return PlacementSolution(
            status=status,
            objective=objective,
            x=x,
            p=p,
            u=v[self.u],
            z=v[self.z],
        )

    def encode(
        self, inst: NetworkInstance, assign: PadAssignment, profile: ChargeProfile
    ) -> np.ndarray:
        """Column vector for a fixed assignment (z set to its exact product)."""
        v = np.zeros(self.num_columns)
        v[self.x] = assign.x
        v[self.p] = assign.p
        v[self.u] = profile.u
        delivered = np.einsum("rmlt,rml->rmt", inst.effective_wc(), assign.x.astype(float))
        v[self.z] = delivered * assign.p[:, None, :]
        return v


def linearize_product(
    model: MilpModel,
    expr: Mapping[int, float],
    expr_max: float,
    gate: int,
    big_m: float,
    name: str,
    cost: float = 0.0,
) -> tuple[int, list[int]]:
    """Add ``z = expr * gate`` for a nonnegative linear ``expr`` and binary ``gate``.

    Emits, in order: ``z <= expr``, ``z <= big_m * gate``,
    ``z >= expr - (1 - gate) * big_m`` and ``z >= 0``.  Returns the new
    column and the four row ids.
    """
    if big_m < expr_max - 1e-12:
        raise ModelError(
            f"{name}: big-M {big_m} is below the expression's attainable maximum {expr_max}"
        )
    for col, coef in expr.items():
        if coef < 0 or model.lower[col] < 0:
            raise ModelError(f"{name}: expression must be nonnegative")
    z = model.add_variable(name, 0.0, math.inf, cost=cost, priority=2)
    neg = {c: -v for c, v in expr.items()}
    rows = [
        model.add_constraint({z: 1.0, **neg}, "<=", 0.0, f"{name}.le_expr"),
        model.add_constraint({z: 1.0, gate: -big_m}, "<=", 0.0, f"{name}.le_gate"),
        model.add_constraint({z: 1.0, **neg, gate: -big_m}, ">=", -big_m, f"{name}.ge_expr"),
        model.add_constraint({z: 1.0}, ">=", 0.0, f"{name}.nonneg"),
    ]
    return z, rows


def expected_row_count(R: int, M: int, T: int, budget: bool = False) -> int:
    """Rows of ``build_model``: four per (route, site, period) for the product,
    flow, minimum-charge and no-overcharge per (route, period), one site
    uniqueness row per (route, site)."""
    return 4 * R * M * T + 3 * R * T + R * M + int(budget)


def build_model(
    inst: NetworkInstance, options: FormulationOptions = FormulationOptions()
) -> tuple[MilpModel, VariableMap]:
    inst = derive_weights(inst)
    p_ = inst.params
    R, M, L, T = inst.num_routes, inst.sites_per_route, inst.lengths, inst.horizon
    eff = inst.effective_wc()
    model = MilpModel(inst.name or "dwpt")

    x = np.empty((R, M, L), dtype=np.intp)
    u = np.empty((R, T), dtype=np.intp)
    p = np.empty((R, T), dtype=np.intp)
    z = np.empty((R, M, T), dtype=np.intp)

    fixed_per_site = p_.ccf.sum(axis=2)  # fixed cost accrues every period the pad exists
    for r in range(R):
        for m in range(M):
            for l in range(L):
                x[r, m, l] = model.add_binary(
                    f"x({r + 1},{m + 1},{l + 1})",
                    cost=p_.ccc[r, m, l] + fixed_per_site[r, m],
                    priority=X_PRIORITY,
                )
    for r in range(R):
        for t in range(T):
            u[r, t] = model.add_variable(f"u({r + 1},{t + 1})", 0.0, 1.0)
    for r in range(R):
        for t in range(T):
            p[r, t] = model.add_binary(f"p({r + 1},{t + 1})", priority=P_PRIORITY)

    big_m = options.big_m if options.big_m is not None else p_.big_m
    for r in range(R):
        for m in range(M):
            for t in range(T):
                expr = {int(x[r, m, l]): float(eff[r, m, l, t]) for l in range(L)}
                expr_max = float(eff[r, m, :, t].max()) if L else 0.0
                z[r, m, t], _ = linearize_product(
                    model,
                    expr,
                    expr_max,
                    int(p[r, t]),
                    expr_max if big_m is None else float(big_m),
                    f"z({r + 1},{m + 1},{t + 1})",
                    cost=float(p_.ccv[r, m, t]),
                )

    w = p_.w
    tails, heads = inst.tails, inst.heads
    for r in range(R):
        i = tails[r]
        upstream = np.flatnonzero(heads == i)
        for t in range(T):
            denom = p_.wo[i] + w[upstream, t].sum()
            if denom <= 0:
                raise ChargeFlowError(
                    f"zero total inflow weight at node {inst.nodes[i]} in period {t + 1}"
                )
            share = {int(u[k, t]): float(w[k, t] / denom) for k in upstream}
            outside = float(p_.wo[i] * p_.uo[i, t] / denom)
            delivered = {int(z[r, m, t]): 1.0 for m in range(M)}
            flow = {int(u[r, t]): 1.0}
            for col, coef in share.items():
                flow[col] = flow.get(col, 0.0) - coef
            for col in delivered:
                flow[col] = -1.0
            model.add_constraint(flow, "=", outside - float(p_.cc[r, t]), f"flow({r + 1},{t + 1})")
            model.add_constraint({int(u[r, t]): 1.0}, ">=", p_.ma, f"minchg({r + 1},{t + 1})")
            model.add_constraint({**share, **delivered}, "<=", 1.0 - outside, f"full({r + 1},{t + 1})")
    for r in range(R):
        for m in range(M):
            model.add_constraint(
                {int(x[r, m, l]): 1.0 for l in range(L)}, "<=", 1.0, f"uniq({r + 1},{m + 1})"
            )
    if options.use_budget:
        if p_.budget is None:
            raise ModelError("use_budget set but the instance has no budget")
        model.add_constraint(
            {int(x[r, m, l]): float(p_.ccc[r, m, l]) for r in range(R) for m in range(M) for l in range(L)},
            "<=",
            p_.budget,
            "budget",
        )
    vmap = VariableMap(x=x, u=u, p=p, z=z)
    if options.coverage_rows:
        add_coverage_rows(model, inst, vmap)
    model.validate()
    return model, vmap


def add_coverage_rows(model: MilpModel, inst: NetworkInstance, vmap: VariableMap) -> int:
    """Add one implied row per (route, period) whose requirement is not met
    for free::

        sum_{k,m,l} K[t,r,k] * we*wc[k,m,l,t] * x(k,m,l) >= ma - base[t,r]

    Charge levels are ``base + K @ delivered`` with ``K >= 0`` and delivered
    charge at most ``sum_l we*wc*x``, so every integer solution satisfies
    these rows.  They add nothing to the relaxation but expose the covering
    structure in x to the MILP solver's cut separators.  Returns the row count.
    """
    from padplan.chargeflow import transfer_operators

    K, base = transfer_operators(inst)
    eff = inst.effective_wc()
    ma = inst.params.ma
    cols = vmap.x.reshape(-1)
    added = 0
    for t in range(inst.horizon):
        # reach[r, k*M*L + m*L + l] = K[t,r,k] * eff[k,m,l,t]
        reach = K[t][:, :, None] * eff[:, :, :, t].reshape(inst.num_routes, -1)[None, :, :]
        reach = reach.reshape(inst.num_routes, -1)
        for r in range(inst.num_routes):
            need = ma - base[t, r]
            if need <= 1e-12:
                continue
            nz = np.flatnonzero(reach[r] > 1e-15)
            model.add_constraint(
                {int(cols[j]): float(reach[r, j]) for j in nz}, ">=", float(need), f"cover({r + 1},{t + 1})"
            )
            added += 1
    return added


def apply_capacity(
    inst: NetworkInstance,
    grid_cap,
    solar_cap,
    solar_fraction: float,
) -> NetworkInstance:
    """Cap each site's deliverable charge at grid power plus a share of solar:
    ``wc' = min(wc, grid_cap + solar_fraction * solar_cap)``.

    Caps are scalars or arrays broadcastable to (routes, sites).
    """
    if not 0.0 <= solar_fraction <= 1.0:
        raise ValueError("solar_fraction must lie in [0, 1]")
    R, M = inst.num_routes, inst.sites_per_route
    grid = np.broadcast_to(np.asarray(grid_cap, dtype=float), (R, M))
    solar = np.broadcast_to(np.asarray(solar_cap, dtype=float), (R, M))
    if np.any(grid < 0) or np.any(solar < 0):
        raise ValueError("capacities must be nonnegative")
    cap = (grid + solar_fraction * solar)[:, :, None, None]
    return inst.with_params(wc=np.minimum(inst.params.wc, cap))
