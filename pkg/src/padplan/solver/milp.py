"""LP and MILP drivers: branch-and-bound over the bounded simplex.

Node selection is best-first on the LP bound with depth-first plunging
after every branching; heap ties break on node id, so runs are
deterministic.  Integer columns carry a branching priority (lower first).

When the lowest-priority integer class links otherwise independent blocks
(as pad placements link the periods of a plan), the search first fixes
that class completely and then solves each remaining block as its own
subproblem, instead of interleaving branching across blocks.
"""

from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from padplan.model import MilpModel
from padplan.solver.result import (
    AUTO_NATIVE_MAX_INTEGERS,
    SolveResult,
    SolverConfig,
    SolverError,
    SolveStats,
)
from padplan.solver.simplex import BoundedSimplex, StandardForm

log = logging.getLogger(__name__)


class _Limit(Exception):
    pass


class Problem:
    """Array form of a MILP: min c x, A x (senses) rhs, lo <= x <= hi."""

    def __init__(self, A, senses, rhs, c, lo, hi, integer, priority=None):
        self.A = sp.csr_matrix(A, dtype=float)
        self.Acsc = self.A.tocsc()
        self.senses = np.asarray(senses, dtype=object)
        self.rhs = np.asarray(rhs, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.integer = np.asarray(integer, dtype=bool)
        n = self.c.size
        self.priority = (
            np.zeros(n, dtype=np.int64) if priority is None else np.asarray(priority, dtype=np.int64)
        )
        if self.integer.any():
            # integer bounds are rounded inward once, up front
            ints = self.integer
            self.lo = self.lo.copy()
            self.hi = self.hi.copy()
            self.lo[ints] = np.ceil(self.lo[ints] - 1e-9)
            self.hi[ints] = np.floor(self.hi[ints] + 1e-9)

    @classmethod
    def from_model(cls, model: MilpModel, relax: bool = False) -> "Problem":
        A, senses, rhs, c, lo, hi, integer = model.arrays()
        if relax:
            integer = np.zeros_like(integer)
        return cls(A, senses, rhs, c, lo, hi, integer, np.array(model.priority, dtype=np.int64))

    @property
    def n(self) -> int:
        return self.c.size

    def restrict(self, rows: np.ndarray, cols: np.ndarray, fixed_values: np.ndarray) -> "Problem":
        """Subproblem on ``cols``; every other column is held at ``fixed_values``."""
        held = fixed_values.copy()
        held[cols] = 0.0
        Arows = self.A[rows]
        rhs = self.rhs[rows] - Arows @ held
        return Problem(
            Arows[:, cols],
            self.senses[rows],
            rhs,
            self.c[cols],
            self.lo[cols],
            self.hi[cols],
            self.integer[cols],
            self.priority[cols],
        )


@dataclass
class _Node:
    bound: float
    ident: int
    lo: np.ndarray
    hi: np.ndarray
    basis: object
    depth: int
    branch: tuple | None = None  # (column, direction, distance) for pseudo-costs

    def __lt__(self, other):
        return (self.bound, self.ident) < (other.bound, other.ident)


class _Search:
    def __init__(
        self,
        prob: Problem,
        config: SolverConfig,
        stats: SolveStats,
        deadline: float | None,
        cutoff: float = math.inf,
        abs_gap: float | None = None,
    ):
        self.prob = prob
        self.cfg = config
        self.stats = stats
        self.deadline = deadline
        self.abs_gap = abs_gap
        self.engine = BoundedSimplex(
            StandardForm(prob.A, prob.senses, prob.rhs, prob.c),
            feas_tol=min(1e-9, config.feas_tol),
        )
        self.incumbent = cutoff
        self.solution: np.ndarray | None = None
        self.pruned_bound = math.inf
        self.next_id = 0
        n = prob.n
        self.pc_sum = np.zeros((2, n))
        self.pc_cnt = np.zeros((2, n))
        self.linking = self._find_linking_class()

    # -- structure ------------------------------------------------------

    def _components(self, free: np.ndarray):
        """Label free columns by connected block of the row/column graph."""
        prob = self.prob
        cols = np.flatnonzero(free)
        sub = prob.Acsc[:, cols]
        m, k = sub.shape
        graph = sp.bmat([[None, sub], [sub.T, None]], format="csr")
        graph.data[:] = 1.0
        count, labels = connected_components(graph, directed=False)
        col_labels = labels[m:]
        row_labels = labels[:m]
        touched = np.diff(sub.tocsr().indptr) > 0
        return cols, col_labels, row_labels, touched

    def _find_linking_class(self) -> np.ndarray | None:
        prob = self.prob
        if not self.cfg.decompose or not prob.integer.any():
            return None
        ints = prob.integer & (prob.hi > prob.lo)
        if not ints.any():
            return None
        top = prob.priority[ints].min()
        link = ints & (prob.priority == top)
        rest = ~link & (prob.hi > prob.lo)
        if not (rest & prob.integer).any():
            return None
        cols, labels, _, _ = self._components(rest)
        blocks = np.unique(labels[prob.integer[cols]])
        return link if blocks.size >= 2 else None

    # -- bookkeeping ----------------------------------------------------

    def _threshold(self) -> float:
        inc = self.incumbent
        if inc == math.inf:
            return math.inf
        if self.abs_gap is not None:
            return inc - self.abs_gap
        return inc - max(self.cfg.gap * abs(inc), 1e-9)

    def _check_limits(self):
        st = self.stats
        if self.cfg.node_limit is not None and st.nodes >= self.cfg.node_limit:
            raise _Limit
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise _Limit

    def _new_node(self, bound, lo, hi, basis, depth, branch=None) -> _Node:
        self.next_id += 1
        return _Node(bound, self.next_id, lo, hi, basis, depth, branch)

    def _lp(self, lo, hi, basis):
        out = self.engine.solve(lo, hi, basis)
        self.stats.lp_iterations += out.iterations
        if out.status in ("iteration-limit", "numerical"):
            raise SolverError(f"LP engine stopped: {out.status}")
        return out

    def _offer(self, values: np.ndarray, objective: float):
        if objective < self.incumbent:
            self.incumbent = objective
            self.solution = values

    # -- branching ------------------------------------------------------

    def _pick(self, x: np.ndarray, frac_mask: np.ndarray, node: _Node):
        """Return (column, integral) for the branching decision or None."""
        prob = self.prob
        link = self.linking
        if link is not None:
            open_link = link & (node.hi > node.lo)
            if open_link.any() and not (frac_mask & link).any():
                return np.flatnonzero(open_link), True
        if not frac_mask.any():
            return None
        cand = np.flatnonzero(frac_mask)
        pr = prob.priority[cand]
        cand = cand[pr == pr.min()]
        f = x[cand] - np.floor(x[cand])
        if self.cfg.branching == "pseudo-cost":
            known = self.pc_cnt > 0
            avg = np.where(
                known.any(axis=1),
                (self.pc_sum.sum(axis=1) / np.maximum(self.pc_cnt.sum(axis=1), 1)),
                1.0,
            )
            est = np.where(known[:, cand], self.pc_sum[:, cand] / np.maximum(self.pc_cnt[:, cand], 1), avg[:, None])
            score = np.maximum(est[0] * f, 1e-6) * np.maximum(est[1] * (1 - f), 1e-6)
            best = np.flatnonzero(score >= score.max() - 1e-12 * max(1.0, score.max()))
            return int(cand[best[0]]), False
        dist = np.minimum(f, 1 - f)
        best = np.flatnonzero(dist >= dist.max() - 1e-12)
        return int(cand[best[0]]), False

    def _record_pseudo(self, node: _Node, objective: float, parent_bound: float):
        if node.branch is None:
            return
        col, direction, dist = node.branch
        if dist <= 0:
            return
        self.pc_sum[direction, col] += max(objective - parent_bound, 0.0) / dist
        self.pc_cnt[direction, col] += 1

    def _children(self, node: _Node, z: float, x: np.ndarray, basis, col, integral: bool):
        lo, hi = node.lo, node.hi
        if integral:
            # Partition on the open linking columns J (all integral here):
            # child 0 fixes J at its current values; child k keeps the first
            # k-1 columns of J at their values and moves the k-th off its value.
            vals = np.round(x[col])
            first_lo, first_hi = lo.copy(), hi.copy()
            first_lo[col] = vals
            first_hi[col] = vals
            kids = [self._new_node(z, first_lo, first_hi, basis, node.depth + 1)]
            prefix_lo, prefix_hi = lo.copy(), hi.copy()
            for j, v in zip(col.tolist(), vals.tolist()):
                if v - 1 >= lo[j]:
                    a_lo, a_hi = prefix_lo.copy(), prefix_hi.copy()
                    a_hi[j] = v - 1
                    kids.append(self._new_node(z, a_lo, a_hi, basis, node.depth + 1))
                if v + 1 <= hi[j]:
                    b_lo, b_hi = prefix_lo.copy(), prefix_hi.copy()
                    b_lo[j] = v + 1
                    kids.append(self._new_node(z, b_lo, b_hi, basis, node.depth + 1))
                prefix_lo[j] = prefix_hi[j] = v
            return kids
        v = x[col]
        down_hi = hi.copy()
        down_hi[col] = math.floor(v)
        up_lo = lo.copy()
        up_lo[col] = math.ceil(v)
        f = v - math.floor(v)
        down = self._new_node(z, lo.copy(), down_hi, basis, node.depth + 1, (col, 0, f))
        up = self._new_node(z, up_lo, hi.copy(), basis, node.depth + 1, (col, 1, 1 - f))
        return [up, down] if f >= 0.5 else [down, up]

    # -- node work ------------------------------------------------------

    def _fix_by_reduced_cost(self, node: _Node, z: float, x: np.ndarray, d: np.ndarray):
        if self.incumbent == math.inf or d is None:
            return
        room = self.incumbent - z
        prob = self.prob
        open_int = prob.integer & (node.hi > node.lo)
        at_lo = open_int & (np.abs(x - node.lo) <= 1e-9) & (d > room + 1e-9)
        at_hi = open_int & (np.abs(x - node.hi) <= 1e-9) & (-d > room + 1e-9)
        if at_lo.any():
            node.hi = node.hi.copy()
            node.hi[at_lo] = node.lo[at_lo]
        if at_hi.any():
            node.lo = node.lo.copy()
            node.lo[at_hi] = node.hi[at_hi]

    def _integral_candidate(self, node: _Node, x: np.ndarray, basis):
        prob = self.prob
        ints = prob.integer
        if not ints.any():
            return x, float(prob.c @ x)
        lo, hi = node.lo.copy(), node.hi.copy()
        r = np.round(x[ints])
        lo[ints] = r
        hi[ints] = r
        out = self._lp(lo, hi, basis)
        if out.status != "optimal":
            return None
        xs = out.x
        xs[ints] = r
        return xs, float(prob.c @ xs)

    def _solve_blocks(self, node: _Node, z: float, x: np.ndarray) -> None:
        """Node with the linking class fixed: solve each block on its own."""
        prob = self.prob
        free = node.hi > node.lo
        cols, labels, row_labels, touched = self._components(free)
        values = x.copy()
        total = z
        int_free = prob.integer[cols]
        blocks = np.unique(labels[int_free])
        held = np.where(free, 0.0, node.lo)
        m = prob.A.shape[0]
        for b in blocks:
            bcols = cols[labels == b]
            brows = np.flatnonzero(touched & (row_labels == b))
            lp_part = float(prob.c[bcols] @ x[bcols])
            room = self._threshold() - (total - lp_part)
            if room <= lp_part - 1e-12 * max(1.0, abs(lp_part)):
                return
            sub = prob.restrict(brows, bcols, held)
            sub.lo = node.lo[bcols].copy()
            sub.hi = node.hi[bcols].copy()
            gap = self.cfg.gap * max(abs(z), 1.0) / max(len(blocks), 1)
            if self.abs_gap is not None:
                gap = min(gap, self.abs_gap / max(len(blocks), 1))
            inner = _Search(sub, self.cfg, self.stats, self.deadline, cutoff=room, abs_gap=max(gap, 1e-9))
            inner.linking = None
            self.stats.subproblems += 1
            status = inner.run()
            if status == "unbounded":
                raise SolverError("unbounded block below an integral node")
            if inner.solution is None:
                return  # infeasible, or cannot beat the incumbent
            values[bcols] = inner.solution
            total += inner.incumbent - lp_part
        values[prob.integer] = np.round(values[prob.integer])
        self._offer(values, float(prob.c @ values))

    def run(self) -> str:
        prob = self.prob
        if np.any(prob.lo > prob.hi):
            return "infeasible"
        root = self._new_node(-math.inf, prob.lo.copy(), prob.hi.copy(), None, 0)
        heap: list[_Node] = []
        dive: _Node | None = root
        parent_bound = {root.ident: -math.inf}
        while dive is not None or heap:
            if dive is not None:
                node, dive = dive, None
            else:
                node = heapq.heappop(heap)
            if node.bound >= self._threshold():
                self.pruned_bound = min(self.pruned_bound, node.bound) if node.bound < self.incumbent else self.pruned_bound
                continue
            self._check_limits()
            self.stats.nodes += 1
            if self.stats.nodes % 500 == 0 and log.isEnabledFor(logging.DEBUG):
                log.debug(
                    "nodes=%d open=%d bound=%.6g incumbent=%.10g depth=%d",
                    self.stats.nodes, len(heap), min(node.bound, heap[0].bound if heap else math.inf),
                    self.incumbent, node.depth,
                )
            out = self._lp(node.lo, node.hi, node.basis)
            if out.status == "infeasible":
                continue
            if out.status == "unbounded":
                return "unbounded"
            z, x = out.objective, out.x
            self._record_pseudo(node, z, node.bound)
            if z >= self._threshold():
                if z < self.incumbent:
                    self.pruned_bound = min(self.pruned_bound, z)
                continue
            self._fix_by_reduced_cost(node, z, x, out.reduced)
            ints = prob.integer
            frac = np.zeros(prob.n, dtype=bool)
            frac[ints] = np.abs(x[ints] - np.round(x[ints])) > self.cfg.int_tol
            if self.linking is not None and not (self.linking & (node.hi > node.lo)).any() and frac.any():
                self._solve_blocks(node, z, x)
                continue
            pick = self._pick(x, frac, node)
            if pick is None:
                cand = self._integral_candidate(node, x, out.basis)
                if cand is not None:
                    self._offer(*cand)
                continue
            col, integral = pick
            kids = self._children(node, z, x, out.basis, col, integral)
            if integral:
                # the LP optimum stays optimal once J is fixed at its own values
                fixed = kids[0]
                self.stats.nodes += 1
                if frac.any():
                    self._solve_blocks(fixed, z, x)
                else:
                    cand = self._integral_candidate(fixed, x, out.basis)
                    if cand is not None:
                        self._offer(*cand)
                kids = kids[1:]
                for kid in kids:
                    heapq.heappush(heap, kid)
                continue
            dive = kids[0]
            for kid in kids[1:]:
                heapq.heappush(heap, kid)
        return "done"

    def global_bound(self, heap_bound: float = math.inf) -> float:
        return min(self.incumbent, self.pruned_bound, heap_bound)


def _run(prob: Problem, config: SolverConfig) -> SolveResult:
    start = time.monotonic()
    stats = SolveStats()
    deadline = start + config.time_limit if config.time_limit is not None else None
    search = _Search(prob, config, stats, deadline)
    try:
        status = search.run()
    except _Limit:
        status = "time-limit"
    stats.wall_time = time.monotonic() - start
    if status == "unbounded":
        return SolveResult("unbounded", stats=stats)
    if status == "time-limit":
        if search.solution is None:
            return SolveResult("time-limit", stats=stats)
        return SolveResult(
            "time-limit", search.incumbent, search.solution, None, stats
        )
    if search.solution is None:
        return SolveResult("infeasible", stats=stats)
    return SolveResult(
        "optimal", search.incumbent, search.solution, search.global_bound(), stats
    )


def solve_lp(model: MilpModel | Problem, config: SolverConfig = SolverConfig()) -> SolveResult:
    """Solve the continuous relaxation (integrality ignored)."""
    if isinstance(model, MilpModel):
        prob = Problem.from_model(model, relax=True)
    else:
        prob = Problem(model.A, model.senses, model.rhs, model.c, model.lo, model.hi,
                       np.zeros(model.n, dtype=bool), model.priority)
    result = _run(prob, config)
    if isinstance(model, MilpModel) and result.objective is not None:
        result.objective += model.obj_offset
    return result


def choose_backend(prob: Problem, config: SolverConfig) -> str:
    if config.backend != "auto":
        return config.backend
    return "native" if int(prob.integer.sum()) <= AUTO_NATIVE_MAX_INTEGERS else "highs"


def solve_milp(model: MilpModel | Problem, config: SolverConfig = SolverConfig()) -> SolveResult:
    prob = Problem.from_model(model) if isinstance(model, MilpModel) else model
    if choose_backend(prob, config) == "highs":
        from padplan.solver.highs import solve_highs

        result = solve_highs(prob, config)
    else:
        result = _run(prob, config)
    if isinstance(model, MilpModel) and result.objective is not None:
        result.objective += model.obj_offset
        if result.bound is not None:
            result.bound += model.obj_offset
    return result
