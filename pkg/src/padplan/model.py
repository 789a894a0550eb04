"""Solver-agnostic mixed-integer linear model (minimisation)."""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np
import scipy.sparse as sp

SENSES = {"<=": "<=", "L": "<=", "=": "=", "==": "=", "E": "=", ">=": ">=", "G": ">="}


class ModelError(ValueError):
    pass


class MilpModel:
    """Variables with bounds and integrality, linear rows, linear objective.

    Rows are stored as coordinate triplets and assembled lazily into a CSR
    matrix.  ``priority`` orders branching (lower branches first).
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.var_names: list[str] = []
        self.lower: list[float] = []
        self.upper: list[float] = []
        self.integer: list[bool] = []
        self.cost: list[float] = []
        self.priority: list[int] = []
        self.row_names: list[str] = []
        self.senses: list[str] = []
        self.rhs: list[float] = []
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self.obj_offset = 0.0
        self._csr = None

    # -- building ---------------------------------------------------------

    def add_variable(
        self,
        name: str,
        lower: float = 0.0,
        upper: float = math.inf,
        integer: bool = False,
        cost: float = 0.0,
        priority: int = 0,
    ) -> int:
        lower, upper = float(lower), float(upper)
        if lower > upper:
            raise ModelError(f"variable {name}: lower bound {lower} > upper bound {upper}")
        self.var_names.append(name)
        self.lower.append(lower)
        self.upper.append(upper)
        self.integer.append(bool(integer))
        self.cost.append(float(cost))
        self.priority.append(int(priority))
        return len(self.var_names) - 1

    def add_binary(self, name: str, cost: float = 0.0, priority: int = 0) -> int:
        return self.add_variable(name, 0.0, 1.0, True, cost, priority)

    def add_constraint(
        self, coeffs: Mapping[int, float], sense: str, rhs: float, name: str | None = None
    ) -> int:
        if sense not in SENSES:
            raise ModelError(f"unknown relation {sense!r}")
        row = len(self.rhs)
        n = len(self.var_names)
        for col, val in coeffs.items():
            if not 0 <= col < n:
                raise ModelError(f"row {name or row}: column {col} is not a declared variable")
            if val != 0.0:
                self._rows.append(row)
                self._cols.append(int(col))
                self._vals.append(float(val))
        self.row_names.append(name or f"r{row}")
        self.senses.append(SENSES[sense])
        self.rhs.append(float(rhs))
        self._csr = None
        return row

    def set_cost(self, col: int, value: float) -> None:
        self.cost[col] = float(value)

    # -- views ------------------------------------------------------------

    @property
    def num_vars(self) -> int:
        return len(self.var_names)

    @property
    def num_constraints(self) -> int:
        return len(self.rhs)

    @property
    def num_integer(self) -> int:
        return sum(self.integer)

    def matrix(self) -> sp.csr_matrix:
        if self._csr is None:
            self._csr = sp.csr_matrix(
                (self._vals, (self._rows, self._cols)),
                shape=(self.num_constraints, self.num_vars),
            )
            self._csr.sum_duplicates()
        return self._csr

    def arrays(self):
        """(A, senses, rhs, c, lower, upper, integer) as numpy/scipy objects."""
        return (
            self.matrix(),
            np.array(self.senses, dtype=object),
            np.array(self.rhs, dtype=float),
            np.array(self.cost, dtype=float),
            np.array(self.lower, dtype=float),
            np.array(self.upper, dtype=float),
            np.array(self.integer, dtype=bool),
        )

    def row(self, k: int) -> dict[int, float]:
        A = self.matrix()
        s, e = A.indptr[k], A.indptr[k + 1]
        return dict(zip(A.indices[s:e].tolist(), A.data[s:e].tolist()))

    def validate(self) -> None:
        lo, hi = np.array(self.lower), np.array(self.upper)
        if np.any(lo > hi):
            raise ModelError("lower bound above upper bound")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ModelError("NaN bound")
        if self._cols and max(self._cols) >= self.num_vars:
            raise ModelError("coefficient on undeclared variable")
        if not np.all(np.isfinite(self.rhs)) or not np.all(np.isfinite(self._vals)):
            raise ModelError("non-finite coefficient")
        if len(set(self.var_names)) != len(self.var_names):
            raise ModelError("duplicate variable names")

    def relaxed(self) -> "MilpModel":
        m = self.copy()
        m.integer = [False] * m.num_vars
        return m

    def copy(self) -> "MilpModel":
        m = MilpModel(self.name)
        for attr in ("var_names", "lower", "upper", "integer", "cost", "priority",
                     "row_names", "senses", "rhs", "_rows", "_cols", "_vals"):
            setattr(m, attr, list(getattr(self, attr)))
        m.obj_offset = self.obj_offset
        return m

    # -- evaluation -------------------------------------------------------

    def objective_value(self, values) -> float:
        return float(np.dot(self.cost, values)) + self.obj_offset

    def max_violation(self, values) -> float:
        """Largest bound or row violation at ``values``."""
        v = np.asarray(values, dtype=float)
        lo, hi = np.array(self.lower), np.array(self.upper)
        worst = max(0.0, float(np.max(lo - v, initial=0)), float(np.max(v - hi, initial=0)))
        act = self.matrix() @ v
        rhs = np.array(self.rhs)
        for sense, viol in (
            ("<=", act - rhs),
            (">=", rhs - act),
            ("=", np.abs(act - rhs)),
        ):
            mask = np.array([s == sense for s in self.senses], dtype=bool)
            if mask.any():
                worst = max(worst, float(np.max(viol[mask])))
        return worst

    def integrality_violation(self, values) -> float:
        v = np.asarray(values, dtype=float)[np.array(self.integer, dtype=bool)]
        return float(np.max(np.abs(v - np.round(v)), initial=0.0))

    def column(self, name: str) -> int:
        return self.var_names.index(name)

    def __repr__(self):
        return (
            f"MilpModel({self.name!r}, vars={self.num_vars}, ints={self.num_integer}, "
            f"rows={self.num_constraints})"
        )
