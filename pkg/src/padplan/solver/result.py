"""Solver configuration and result records."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

BRANCHING_RULES = ("most-fractional", "pseudo-cost")
BACKENDS = ("auto", "native", "highs")
# "auto" hands models with more integer columns than this to HiGHS
AUTO_NATIVE_MAX_INTEGERS = 64


class SolverError(RuntimeError):
    """Numerical breakdown inside the LP engine (distinct from infeasibility)."""


@dataclass(frozen=True)
class SolverConfig:
    feas_tol: float = 1e-7
    int_tol: float = 1e-6
    gap: float = 1e-6  # relative optimality gap
    node_limit: int | None = None
    time_limit: float | None = None  # seconds
    branching: str = "most-fractional"
    seed: int = 0
    decompose: bool = True  # solve independent blocks separately once linking columns are fixed
    backend: str = "auto"

    def __post_init__(self):
        if not (self.feas_tol > 0 and self.int_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.gap < 0:
            raise ValueError("gap must be nonnegative")
        if self.branching not in BRANCHING_RULES:
            raise ValueError(f"branching must be one of {BRANCHING_RULES}")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        if self.node_limit is not None and self.node_limit < 1:
            raise ValueError("node_limit must be positive")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        """Short stable hash of the settings, for provenance records."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class SolveStats:
    nodes: int = 0
    lp_iterations: int = 0
    wall_time: float = 0.0
    subproblems: int = 0
    backend: str = "native"


@dataclass(eq=False)
class SolveResult:
    status: str  # optimal | infeasible | unbounded | time-limit
    objective: float | None = None
    values: np.ndarray | None = None
    bound: float | None = None
    stats: SolveStats = field(default_factory=SolveStats)
    assignment: object | None = None  # PadAssignment when the solve came from an instance

    @property
    def ok(self) -> bool:
        return self.status == "optimal"
