"""Pure-Python/numpy versions of the enumeration kernels.

Same signatures and tie-breaking as ``_ckernels.pyx``; used when the
extension is not built or ``PADPLAN_PURE_PYTHON`` is set.
"""

import numpy as np


def best_period_pattern(K, base, gain, varcost, cc, ma, tol):
    """Cheapest feasible on/off pattern for one period.

    ``u = base + K @ (p * gain)``.  A pattern is feasible when every
    ``u >= ma - tol`` and ``u + cc <= 1 + tol`` (the latter is the
    no-overcharge rule: inflow plus delivered charge equals ``u + cc``).
    Only routes with ``gain > 0`` are enumerated; the rest stay off.
    Returns ``(cost, p)`` with ``p`` an int8 vector, or ``(inf, None)``.
    Ties go to the smallest pattern index (bit k = k-th active route).
    """
    active = np.flatnonzero(gain > 0)
    n_act = active.size
    masks = ((np.arange(1 << n_act)[:, None] >> np.arange(n_act)) & 1).astype(float)
    U = base[None, :] + (masks * gain[active]) @ K[:, active].T
    ok = np.all(U >= ma - tol, axis=1) & np.all(U + cc[None, :] <= 1.0 + tol, axis=1)
    if not ok.any():
        return np.inf, None
    costs = masks @ varcost[active]
    costs[~ok] = np.inf
    k = int(np.argmin(costs))
    p = np.zeros(base.shape[0], dtype=np.int8)
    p[active] = masks[k].astype(np.int8)
    return float(costs[k]), p


def propagate_topological(order, inbound_ptr, inbound_idx, coef, const, gain_on):
    """Evaluate ``u[r] = const[r] + sum(coef[j] * u[inbound_idx[j]]) + gain_on[r]``
    for routes in topological ``order``; ``inbound_ptr`` is CSR-style over routes.
    All per-route arrays carry a trailing period axis."""
    u = np.zeros_like(const)
    for r in order:
        acc = const[r] + gain_on[r]
        for j in range(inbound_ptr[r], inbound_ptr[r + 1]):
            acc = acc + coef[j] * u[inbound_idx[j]]
        u[r] = acc
    return u
