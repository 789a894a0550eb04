"""Average charge propagation for a fixed pad placement and on/off schedule.

For route (i, j) in period t the charge entering node i is the weighted
mean of the routes arriving at i plus the outside flow::

    inflow(i, t) = (sum_k w[k,i,t] * u[k,i,t] + wo[i] * uo[i,t]) / (sum_k w[k,i,t] + wo[i])
    u[i,j,t]     = inflow(i, t) - cc[i,j,t] + p[i,j,t] * sum_{m,l} we * wc * x

Array indices are 0-based; file formats and labels use 1-based sites
and lengths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from padplan import kernels
from padplan.network import NetworkInstance, topology_report, weights


class ChargeFlowError(ValueError):
    """The charge recursion is undefined (zero inflow weight, singular system)."""


def _binary(arr, name) -> np.ndarray:
    a = np.asarray(arr)
    if a.size and not np.all((a == 0) | (a == 1)):
        raise ValueError(f"{name} must be binary")
    out = a.astype(np.int8)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class PadAssignment:
    x: np.ndarray  # (R, M, L)
    p: np.ndarray  # (R, T)

    def __post_init__(self):
        object.__setattr__(self, "x", _binary(self.x, "x"))
        object.__setattr__(self, "p", _binary(self.p, "p"))
        if self.x.ndim != 3 or self.p.ndim != 2:
            raise ValueError("x must be (routes, sites, lengths) and p (routes, periods)")
        if self.x.size and self.x.sum(axis=2).max() > 1:
            raise ValueError("more than one length selected at a site")

    def __eq__(self, other):
        if not isinstance(other, PadAssignment):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.p, other.p)

    __hash__ = None

    @classmethod
    def empty(cls, inst: NetworkInstance, pads_on: bool = False) -> "PadAssignment":
        R, M, L, T = inst.num_routes, inst.sites_per_route, inst.lengths, inst.horizon
        return cls(np.zeros((R, M, L), np.int8), np.full((R, T), int(pads_on), np.int8))

    @classmethod
    def from_sites(
        cls,
        inst: NetworkInstance,
        sites: Iterable[tuple],
        p: np.ndarray | None = None,
    ) -> "PadAssignment":
        """``sites`` holds ``(route, site, length)`` triples; route may be a key
        or index, site and length are 0-based.  ``p`` defaults to all on."""
        R, M, L, T = inst.num_routes, inst.sites_per_route, inst.lengths, inst.horizon
        x = np.zeros((R, M, L), np.int8)
        for route, m, l in sites:
            r = route if isinstance(route, (int, np.integer)) else inst.route_index(route)
            if x[r, m].any():
                raise ValueError(f"site {m} on route {inst.routes[r]} selected twice")
            x[r, m, l] = 1
        if p is None:
            p = np.ones((R, T), np.int8)
        return cls(x, p)

    def check_shape(self, inst: NetworkInstance) -> None:
        want_x = (inst.num_routes, inst.sites_per_route, inst.lengths)
        want_p = (inst.num_routes, inst.horizon)
        if self.x.shape != want_x or self.p.shape != want_p:
            raise ValueError(
                f"assignment shapes x{self.x.shape}/p{self.p.shape} do not match "
                f"instance x{want_x}/p{want_p}"
            )

    def selected_sites(self) -> list[tuple[int, int, int]]:
        return [tuple(int(v) for v in idx) for idx in np.argwhere(self.x)]


@dataclass(frozen=True, eq=False)
class ChargeProfile:
    u: np.ndarray  # (R, T) average charge on each route
    inflow: np.ndarray  # (R, T) charge entering each route's source node


@dataclass(frozen=True)
class Violation:
    kind: str  # "min_charge" or "overcharge"
    route: str
    period: int
    value: float
    limit: float


@dataclass(frozen=True)
class FeasibilityVerdict:
    violations: tuple[Violation, ...]

    @property
    def feasible(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.feasible


def delivered_charge(inst: NetworkInstance, x: np.ndarray) -> np.ndarray:
    """Per-route charge the built pads deliver when on, shape (R, T)."""
    return np.einsum("rmlt,rml->rt", inst.effective_wc(), x.astype(float))


@dataclass(frozen=True)
class _Recursion:
    inbound_ptr: np.ndarray  # CSR pointers over routes
    inbound_idx: np.ndarray  # upstream route of each entry
    coef: np.ndarray  # (nnz, T) weight share of each upstream route
    const: np.ndarray  # (R, T) outside-flow share minus consumption


def _recursion(inst: NetworkInstance) -> _Recursion:
    w = weights(inst)
    p = inst.params
    R, T = inst.num_routes, inst.horizon
    tails, heads = inst.tails, inst.heads
    denom = np.repeat(p.wo[:, None], T, axis=1).astype(float)
    np.add.at(denom, heads, w)
    ptr = [0]
    idx = []
    coef = []
    const = np.empty((R, T))
    for r in range(R):
        i = tails[r]
        if np.any(denom[i] <= 0):
            t = int(np.flatnonzero(denom[i] <= 0)[0])
            raise ChargeFlowError(
                f"zero total inflow weight at node {inst.nodes[i]} in period {t + 1}"
            )
        for k in np.flatnonzero(heads == i):
            idx.append(k)
            coef.append(w[k] / denom[i])
        ptr.append(len(idx))
        const[r] = p.wo[i] * p.uo[i] / denom[i] - p.cc[r]
    coef_arr = np.array(coef, dtype=float).reshape(len(idx), T)
    return _Recursion(
        np.array(ptr, dtype=np.intp), np.array(idx, dtype=np.intp), coef_arr, const
    )


def _route_order(inst: NetworkInstance) -> np.ndarray | None:
    topo = topology_report(inst)
    if not topo.acyclic:
        return None
    pos = {n: k for k, n in enumerate(topo.order)}
    return np.array(
        sorted(range(inst.num_routes), key=lambda r: (pos[inst.routes[r].source], r)),
        dtype=np.intp,
    )


def _propagation_matrices(inst: NetworkInstance, rec: _Recursion) -> np.ndarray:
    """P[t] with ``u = const + P u + gain`` (shape (T, R, R))."""
    R, T = inst.num_routes, inst.horizon
    P = np.zeros((T, R, R))
    for r in range(R):
        for j in range(rec.inbound_ptr[r], rec.inbound_ptr[r + 1]):
            P[:, r, rec.inbound_idx[j]] += rec.coef[j]
    return P


def evaluate_charge_flow(inst: NetworkInstance, assign: PadAssignment) -> ChargeProfile:
    """Average charge on every route and period.  Acyclic networks are swept
    in topological order; cyclic ones solve the per-period linear system."""
    assign.check_shape(inst)
    rec = _recursion(inst)
    gain_on = delivered_charge(inst, assign.x) * assign.p
    order = _route_order(inst)
    if order is not None:
        u = kernels.propagate_topological(
            order,
            rec.inbound_ptr,
            rec.inbound_idx,
            np.ascontiguousarray(rec.coef),
            np.ascontiguousarray(rec.const),
            np.ascontiguousarray(gain_on),
        )
    else:
        P = _propagation_matrices(inst, rec)
        eye = np.eye(inst.num_routes)
        u = np.empty_like(rec.const)
        for t in range(inst.horizon):
            system = eye - P[t]
            if np.linalg.cond(system) > 1e12:
                raise ChargeFlowError(f"singular charge system in period {t + 1}")
            u[:, t] = np.linalg.solve(system, rec.const[:, t] + gain_on[:, t])
    inflow = u + inst.params.cc - gain_on
    return ChargeProfile(u=u, inflow=inflow)


def transfer_operators(inst: NetworkInstance) -> tuple[np.ndarray, np.ndarray]:
    """Per-period linear map from pad gains to charge levels.

    Returns ``(K, base)`` with shapes (T, R, R) and (T, R) such that
    ``u[:, t] = base[t] + K[t] @ (p[:, t] * gain[:, t])``.
    """
    rec = _recursion(inst)
    P = _propagation_matrices(inst, rec)
    system = np.eye(inst.num_routes)[None] - P
    if inst.num_routes and np.max(np.linalg.cond(system)) > 1e12:
        raise ChargeFlowError("singular charge system")
    K = np.linalg.inv(system) if inst.num_routes else system
    base = np.einsum("trs,st->tr", K, rec.const)
    return K, base


def check_feasibility(
    inst: NetworkInstance,
    assign: PadAssignment,
    profile: ChargeProfile,
    tol: float = 1e-7,
) -> FeasibilityVerdict:
    """List minimum-charge and no-overcharge violations.

    The overcharge rule bounds ``inflow + p * delivered`` by 1, i.e. the
    level before the route's own consumption is subtracted.
    """
    ma = inst.params.ma
    gain_on = delivered_charge(inst, assign.x) * assign.p
    violations = []
    for r, t in np.argwhere(profile.u < ma - tol):
        violations.append(
            Violation("min_charge", inst.routes[r].key, int(t) + 1, float(profile.u[r, t]), ma)
        )
    top = profile.inflow + gain_on
    for r, t in np.argwhere(top > 1.0 + tol):
        violations.append(
            Violation("overcharge", inst.routes[r].key, int(t) + 1, float(top[r, t]), 1.0)
        )
    return FeasibilityVerdict(tuple(violations))


def cost_breakdown(inst: NetworkInstance, assign: PadAssignment) -> tuple[float, float, float]:
    """(construction, fixed operating, variable charging) cost."""
    assign.check_shape(inst)
    p = inst.params
    x = assign.x.astype(float)
    construction = float(np.sum(p.ccc * x))
    built = x.sum(axis=2)  # (R, M)
    fixed = float(np.sum(p.ccf * built[:, :, None]))
    delivered = np.einsum("rmlt,rml->rmt", inst.effective_wc(), x)  # (R, M, T)
    variable = float(np.sum(p.ccv * delivered * assign.p[:, None, :]))
    return construction, fixed, variable


def evaluate_cost(inst: NetworkInstance, assign: PadAssignment) -> float:
    return sum(cost_breakdown(inst, assign))


def unreachable_levels(inst: NetworkInstance, tol: float = 1e-9) -> list[Violation]:
    """Minimum-charge requirements missed even with every site built at its
    strongest pad and switched on in every period.

    Charge levels only grow with delivered charge (the propagation operator
    is nonnegative), so a nonempty result proves the instance infeasible.
    An empty result proves nothing.
    """
    K, base = transfer_operators(inst)
    strongest = inst.effective_wc().max(axis=2).sum(axis=1) if inst.lengths else np.zeros(
        (inst.num_routes, inst.horizon)
    )  # (R, T)
    top = base.T + np.einsum("trs,st->rt", K, strongest)
    ma = inst.params.ma
    return [
        Violation("min_charge", inst.routes[r].key, int(t) + 1, float(top[r, t]), ma)
        for r, t in np.argwhere(top < ma - tol)
    ]
