"""Bounded-variable revised simplex on sparse data.

Every row ``a x (<=|=|>=) b`` gets a logical column so the working form is
``[A I] (x, s) = b`` with ``lo <= (x, s) <= hi``.  The basis is factored with
SuperLU and updated in product form between refactorisations.  Both the
primal method (composite phase 1) and the dual method are provided; the
dual method re-optimises branch-and-bound children from the parent basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

BASIC, AT_LOWER, AT_UPPER, FREE_ZERO = 0, 1, 2, 3

INF = np.inf


class NumericalError(RuntimeError):
    """Singular basis or loss of accuracy the engine could not recover from."""


class _Factor:
    """LU of the basis plus a product-form eta file."""

    def __init__(self, Af: sp.csc_matrix, basis: np.ndarray):
        B = Af[:, basis].tocsc()
        try:
            self.lu = splu(B, permc_spec="COLAMD", options={"SymmetricMode": False})
        except RuntimeError as exc:  # "Factor is exactly singular"
            raise NumericalError(str(exc)) from None
        self.etas: list[tuple[int, np.ndarray]] = []

    def ftran(self, v: np.ndarray) -> np.ndarray:
        w = self.lu.solve(v)
        for r, col in self.etas:
            wr = w[r] / col[r]
            if wr != 0.0:
                w -= wr * col
            w[r] = wr
        return w

    def btran(self, v: np.ndarray) -> np.ndarray:
        w = np.array(v, dtype=float)
        for r, col in reversed(self.etas):
            w[r] = (w[r] - (w @ col - w[r] * col[r])) / col[r]
        return self.lu.solve(w, trans="T")

    def update(self, r: int, alpha: np.ndarray) -> None:
        self.etas.append((r, alpha.copy()))

    @property
    def size(self) -> int:
        return len(self.etas)


@dataclass
class Basis:
    """Warm-start state: basic column ids per row and a status per column."""

    basis: np.ndarray
    status: np.ndarray

    def copy(self) -> "Basis":
        return Basis(self.basis.copy(), self.status.copy())


@dataclass
class LPOutcome:
    status: str  # optimal | infeasible | unbounded | iteration-limit | numerical
    x: np.ndarray | None
    objective: float | None
    iterations: int
    basis: Basis | None
    reduced: np.ndarray | None = None  # structural reduced costs at the optimum


class StandardForm:
    """Immutable problem data shared by every LP solve of one model."""

    def __init__(self, A: sp.spmatrix, senses, rhs, c):
        A = sp.csr_matrix(A, dtype=float)
        self.m, self.n = A.shape
        m, n = self.m, self.n
        self.b = np.asarray(rhs, dtype=float)
        senses = np.asarray(senses, dtype=object)
        self.slack_lo = np.where(senses == ">=", -INF, 0.0)
        self.slack_hi = np.where(senses == "<=", INF, 0.0)
        self.Af = sp.hstack([A, sp.identity(m, format="csr")], format="csc")
        self.Af.sort_indices()
        self.AfT = self.Af.T.tocsr()
        self.c = np.concatenate([np.asarray(c, dtype=float), np.zeros(m)])
        self.cscale = max(1.0, float(np.max(np.abs(self.c), initial=0.0)))

    def column(self, j: int) -> np.ndarray:
        Af = self.Af
        col = np.zeros(self.m)
        s, e = Af.indptr[j], Af.indptr[j + 1]
        col[Af.indices[s:e]] = Af.data[s:e]
        return col


class BoundedSimplex:
    def __init__(
        self,
        form: StandardForm,
        feas_tol: float = 1e-9,
        opt_tol: float = 1e-9,
        pivot_tol: float = 1e-9,
        refactor_every: int = 50,
        max_iter: int | None = None,
    ):
        self.f = form
        self.ftol = feas_tol
        self.dtol = opt_tol * form.cscale
        self.ptol = pivot_tol
        self.refactor_every = refactor_every
        self.max_iter = max_iter or 50 * (form.m + form.n) + 1000
        self.iterations = 0

    # -- state ------------------------------------------------------------

    def _setup(self, lo, hi, warm: Basis | None):
        f = self.f
        self.lo = np.concatenate([lo, f.slack_lo])
        self.hi = np.concatenate([hi, f.slack_hi])
        N = f.n + f.m
        if warm is None:
            self.basis = np.arange(f.n, N)
            st = np.empty(N, dtype=np.int8)
            st[f.n:] = BASIC
            c = f.c[: f.n]
            lo_f, hi_f = np.isfinite(lo), np.isfinite(hi)
            st[: f.n] = np.where(
                (c >= 0) & lo_f,
                AT_LOWER,
                np.where(hi_f, AT_UPPER, np.where(lo_f, AT_LOWER, FREE_ZERO)),
            )
            self.status = st
        else:
            self.basis = warm.basis.copy()
            self.status = warm.status.copy()
        self._fix_nonbasic_status()
        self.x = np.zeros(N)
        self._set_nonbasic_values()
        self._refactor()

    def _fix_nonbasic_status(self):
        st, lo, hi = self.status, self.lo, self.hi
        nb = st != BASIC
        lo_f, hi_f = np.isfinite(lo), np.isfinite(hi)
        bad_lo = nb & (st == AT_LOWER) & ~lo_f
        st[bad_lo] = np.where(hi_f[bad_lo], AT_UPPER, FREE_ZERO)
        bad_hi = nb & (st == AT_UPPER) & ~hi_f
        st[bad_hi] = np.where(lo_f[bad_hi], AT_LOWER, FREE_ZERO)
        bad_free = nb & (st == FREE_ZERO) & (lo_f | hi_f)
        st[bad_free] = np.where(lo_f[bad_free], AT_LOWER, AT_UPPER)

    def _set_nonbasic_values(self):
        st = self.status
        x = self.x
        x[st == AT_LOWER] = self.lo[st == AT_LOWER]
        x[st == AT_UPPER] = self.hi[st == AT_UPPER]
        x[st == FREE_ZERO] = 0.0

    def _refactor(self):
        self.F = _Factor(self.f.Af, self.basis)
        self._recompute_primal()

    def _recompute_primal(self):
        x = self.x
        x[self.basis] = 0.0
        resid = self.f.b - self.f.Af @ x
        x[self.basis] = self.F.ftran(resid)

    def _reduced_costs(self, cost=None) -> np.ndarray:
        c = self.f.c if cost is None else cost
        y = self.F.btran(c[self.basis])
        d = c - self.f.AfT @ y
        d[self.basis] = 0.0
        return d

    def _movable(self):
        st = self.status
        span = self.hi > self.lo
        can_up = ((st == AT_LOWER) | (st == FREE_ZERO)) & span
        can_down = ((st == AT_UPPER) | (st == FREE_ZERO)) & span
        return can_up, can_down

    def dual_feasible(self, d=None) -> bool:
        if d is None:
            d = self._reduced_costs()
        can_up, can_down = self._movable()
        return not (np.any(can_up & (d < -self.dtol)) or np.any(can_down & (d > self.dtol)))

    def _pivot(self, r: int, q: int, alpha: np.ndarray):
        self.basis[r] = q
        self.status[q] = BASIC
        self.F.update(r, alpha)
        if self.F.size >= self.refactor_every:
            self._refactor()
            return True
        return False

    def _leave_to(self, j: int, value: float):
        self.x[j] = value
        if value == self.lo[j]:
            self.status[j] = AT_LOWER
        else:
            self.status[j] = AT_UPPER

    # -- primal ---------------------------------------------------------

    def _primal(self) -> str:
        f = self.f
        degenerate = 0
        bland = False
        zero_cost = np.zeros(f.n + f.m)
        while True:
            if self.iterations >= self.max_iter:
                return "iteration-limit"
            basis = self.basis
            xB = self.x[basis]
            loB, hiB = self.lo[basis], self.hi[basis]
            below = xB < loB - self.ftol
            above = xB > hiB + self.ftol
            phase1 = bool(below.any() or above.any())
            if phase1:
                cost = zero_cost.copy()
                cost[basis] = above.astype(float) - below.astype(float)
                d = self._reduced_costs(cost)
                dtol = 1e-11
            else:
                d = self._reduced_costs()
                dtol = self.dtol
            can_up, can_down = self._movable()
            up = can_up & (d < -dtol)
            down = can_down & (d > dtol)
            elig = up | down
            if not elig.any():
                return "infeasible" if phase1 else "optimal"
            if bland:
                q = int(np.flatnonzero(elig)[0])
            else:
                q = int(np.argmax(np.where(elig, np.abs(d), -1.0)))
            dirn = 1.0 if up[q] else -1.0
            alpha = self.F.ftran(f.column(q))
            delta = -dirn * alpha
            inc = delta > self.ptol
            dec = delta < -self.ptol
            if phase1:
                ub = np.where(below, loB, np.where(above, INF, hiB))
                lb = np.where(above, hiB, np.where(below, -INF, loB))
            else:
                ub, lb = hiB, loB
            with np.errstate(divide="ignore", invalid="ignore"):
                relaxed = np.full(basis.size, INF)
                relaxed[inc] = (ub[inc] + self.ftol - xB[inc]) / delta[inc]
                relaxed[dec] = (xB[dec] - lb[dec] + self.ftol) / -delta[dec]
                exact = np.full(basis.size, INF)
                exact[inc] = (ub[inc] - xB[inc]) / delta[inc]
                exact[dec] = (xB[dec] - lb[dec]) / -delta[dec]
            theta_max = float(relaxed.min()) if relaxed.size else INF
            span = self.hi[q] - self.lo[q]
            if theta_max == INF and span == INF:
                if phase1:
                    raise NumericalError("unbounded phase-1 direction")
                return "unbounded"
            self.iterations += 1
            if span <= theta_max:
                # entering variable runs to its opposite bound
                self.x[basis] += span * delta
                self.x[q] += dirn * span
                self.status[q] = AT_UPPER if dirn > 0 else AT_LOWER
                degenerate = 0
                bland = False
                continue
            cand = (exact <= theta_max) & (inc | dec)
            if bland:
                tmin = exact[cand].min()
                ties = np.flatnonzero(cand & (exact <= tmin + 1e-12))
                r = int(ties[np.argmin(basis[ties])])
            else:
                r = int(np.argmax(np.where(cand, np.abs(delta), -1.0)))
            theta = max(float(exact[r]), 0.0)
            bound = ub[r] if inc[r] else lb[r]
            leaving = int(basis[r])
            self.x[basis] += theta * delta
            self.x[q] += dirn * theta
            self._leave_to(leaving, bound)
            if theta < 1e-12:
                degenerate += 1
                if degenerate > 50:
                    bland = True
            else:
                degenerate = 0
                bland = False
            self._pivot(r, q, alpha)

    # -- dual -------------------------------------------------------------

    def _dual(self) -> str:
        f = self.f
        d = self._reduced_costs()
        stalls = 0
        while True:
            if self.iterations >= self.max_iter:
                return "iteration-limit"
            basis = self.basis
            xB = self.x[basis]
            loB, hiB = self.lo[basis], self.hi[basis]
            low_gap = loB - xB
            high_gap = xB - hiB
            viol = np.maximum(low_gap, high_gap)
            r = int(np.argmax(viol))
            if viol[r] <= self.ftol:
                return "optimal"
            to_lower = low_gap[r] >= high_gap[r]
            s = 1.0 if to_lower else -1.0
            target = loB[r] if to_lower else hiB[r]
            e_r = np.zeros(f.m)
            e_r[r] = 1.0
            rho = self.F.btran(e_r)
            row = f.AfT @ rho
            can_up, can_down = self._movable()
            sr = s * row
            el_up = can_up & (sr < -self.ptol)
            el_down = can_down & (sr > self.ptol)
            elig = el_up | el_down
            if not elig.any():
                return "infeasible"
            absrow = np.abs(row)
            dj = np.where(el_up, np.maximum(d, 0.0), np.maximum(-d, 0.0))
            with np.errstate(divide="ignore", invalid="ignore"):
                relaxed = np.where(elig, (dj + self.dtol) / absrow, INF)
                exact = np.where(elig, dj / absrow, INF)
            theta_max = relaxed.min()
            cand = elig & (exact <= theta_max)
            q = int(np.argmax(np.where(cand, absrow, -1.0)))
            alpha = self.F.ftran(f.column(q))
            if abs(alpha[r] - row[q]) > 1e-7 * (1.0 + abs(alpha[r])):
                stalls += 1
                if stalls > 3:
                    raise NumericalError("inconsistent pivot element")
                self._refactor()
                d = self._reduced_costs()
                continue
            self.iterations += 1
            step = (xB[r] - target) / alpha[r]
            self.x[basis] -= step * alpha
            self.x[q] += step
            leaving = int(basis[r])
            self._leave_to(leaving, target)
            theta_d = d[q] / row[q]
            d -= theta_d * row
            refactored = self._pivot(r, q, alpha)
            if refactored:
                d = self._reduced_costs()
            else:
                d[self.basis] = 0.0

    # -- driver -----------------------------------------------------------

    def solve(self, lo, hi, warm: Basis | None = None) -> LPOutcome:
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        n = self.f.n
        self.iterations = 0
        if np.any(lo > hi):
            return LPOutcome("infeasible", None, None, 0, None)
        if self.f.m == 0:
            return self._bounds_only(lo, hi)
        for attempt in range(2):
            try:
                self._setup(lo, hi, warm if attempt == 0 else None)
                if self.dual_feasible():
                    status = self._dual()
                    if status == "optimal":
                        status = self._primal()  # polish; normally no pivots
                    elif status == "iteration-limit":
                        status = self._primal()
                else:
                    status = self._primal()
                break
            except NumericalError:
                if attempt == 1:
                    return LPOutcome("numerical", None, None, self.iterations, None)
        if status != "optimal":
            return LPOutcome(status, None, None, self.iterations, None)
        self._refactor()
        x = self.x[:n].copy()
        obj = float(self.f.c[:n] @ x)
        d = self._reduced_costs()[:n]
        return LPOutcome(
            "optimal", x, obj, self.iterations, Basis(self.basis.copy(), self.status.copy()), d
        )

    def _bounds_only(self, lo, hi) -> LPOutcome:
        """No rows: every column sits at whichever bound its cost favours."""
        c = self.f.c[: self.f.n]
        x = np.where(c > 0, lo, np.where(c < 0, hi, np.where(np.isfinite(lo), lo, np.minimum(hi, 0.0))))
        if not np.all(np.isfinite(x)):
            return LPOutcome("unbounded", None, None, 0, None)
        status = np.where(x == lo, AT_LOWER, np.where(x == hi, AT_UPPER, FREE_ZERO)).astype(np.int8)
        return LPOutcome(
            "optimal", x, float(c @ x), 0, Basis(np.zeros(0, dtype=np.intp), status), c.copy()
        )
