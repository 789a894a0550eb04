"""Seeded instance generation and sensitivity sweeps."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Mapping

import numpy as np

from padplan.network import PARAM_AXES, InstanceError, NetworkInstance, instance_from_dict

log = logging.getLogger(__name__)

# parameters the generator may draw, in block order within a period
DRAWABLE = ("cc", "ahd", "uo", "ccv", "ccf")

TABLE3_NODES = tuple(str(k) for k in range(1, 9))
TABLE3_ROUTES = (
    ("1", "2", 3.0),
    ("2", "5", 5.0),
    ("1", "3", 7.0),
    ("3", "7", 5.0),
    ("3", "4", 3.0),
    ("4", "5", 8.0),
    ("4", "6", 4.0),
    ("5", "6", 4.0),
    ("6", "8", 7.0),
    ("7", "8", 8.0),
)
BUNDLED = {"paper_table3": "paper_table3.toml"}


def bundled_instance_path(name: str = "paper_table3"):
    return resources.files("padplan") / "data" / BUNDLED[name]


def draw_generated_params(gen: Mapping[str, Any], dims: Mapping[str, int]):
    """Materialise a ``[generator]`` table.

    Draws are unit uniforms from ``numpy.random.default_rng(seed)`` laid
    out period-major: period t consumes one block holding, for each listed
    parameter in ``DRAWABLE`` order, its entries for that period in C order
    over the remaining axes.  A longer horizon therefore extends a shorter
    one without changing its draws.
    """
    if "seed" not in gen:
        raise InstanceError("missing", "generator.seed")
    seed = int(gen["seed"])
    unknown = set(gen) - set(DRAWABLE) - {"seed"}
    if unknown:
        raise InstanceError(f"cannot draw {sorted(unknown)}", "generator")
    T = dims["period"]
    plan = []
    for name in DRAWABLE:
        if name not in gen:
            continue
        spec = gen[name]
        if not (isinstance(spec, list) and len(spec) == 3 and spec[0] == "uniform"):
            raise InstanceError("expected ['uniform', low, high]", f"generator.{name}")
        low, high = float(spec[1]), float(spec[2])
        if not low <= high:
            raise InstanceError("bounds out of order", f"generator.{name}")
        axes = PARAM_AXES[name]
        shape = tuple(dims[a] for a in axes if a != "period")
        plan.append((name, low, high, shape))
    block = sum(int(np.prod(s)) for _, _, _, s in plan)
    draws = np.random.default_rng(seed).random((T, block))
    out = {}
    col = 0
    for name, low, high, shape in plan:
        size = int(np.prod(shape))
        vals = low + (high - low) * draws[:, col : col + size]
        col += size
        # (T, *shape) -> (*shape, T)
        out[name] = np.moveaxis(vals.reshape((T,) + shape), 0, -1).copy()
    return seed, out


@dataclass(frozen=True)
class GeneratorSpec:
    """Random instance profile; defaults reproduce the eight-node example."""

    seed: int = 2022
    cc: tuple[float, float] = (0.06, 0.12)
    ccv: tuple[float, float] = (10.0, 14.0)
    ccf: tuple[float, float] = (100.0, 110.0)
    ccc: float = 10000.0
    wc_by_length: tuple[float, ...] = (0.04, 0.08, 0.12)
    uo: float = 0.5
    wo: float = 2.0
    we: float = 1.0
    ma: float = 0.4
    sites_per_route: int = 3
    nodes: tuple[str, ...] = TABLE3_NODES
    routes: tuple[tuple[str, str, float], ...] = TABLE3_ROUTES
    name: str = "paper_table3"

    def __post_init__(self):
        for label in ("cc", "ccv", "ccf"):
            lo, hi = getattr(self, label)
            if lo > hi:
                raise ValueError(f"{label}: distribution bounds out of order")

    def to_document(self, horizon: int) -> dict:
        return {
            "schema": 1,
            "name": self.name,
            "horizon": int(horizon),
            "sites_per_route": self.sites_per_route,
            "lengths": len(self.wc_by_length),
            "ma": self.ma,
            "nodes": list(self.nodes),
            "routes": [f"{a}->{b}" for a, b, _ in self.routes],
            "generator": {
                "seed": self.seed,
                "cc": ["uniform", *self.cc],
                "ccv": ["uniform", *self.ccv],
                "ccf": ["uniform", *self.ccf],
            },
            "params": {
                "we": self.we,
                "wo": self.wo,
                "uo": self.uo,
                "ccc": self.ccc,
                "wc": [list(self.wc_by_length)],
                "w": {f"{a}->{b}": float(w) for a, b, w in self.routes},
            },
        }


def generate_instance(spec: GeneratorSpec = GeneratorSpec(), horizon: int = 24) -> NetworkInstance:
    return instance_from_dict(spec.to_document(horizon))


def random_small_instance(
    seed: int,
    max_routes: int = 3,
    max_sites: int = 2,
    max_lengths: int = 2,
    max_horizon: int = 3,
) -> NetworkInstance:
    """Small random instance for oracle cross-checks.

    Three nodes, one to ``max_routes`` distinct directed routes (cycles
    allowed), parameter ranges chosen so that a fair share of draws are
    infeasible or need pads.
    """
    from padplan.network import InstanceParams, Route

    rng = np.random.default_rng(seed)
    nodes = ("a", "b", "c")
    pairs = [(s, t) for s in nodes for t in nodes if s != t]
    R = int(rng.integers(1, max_routes + 1))
    chosen = rng.choice(len(pairs), size=R, replace=False)
    routes = tuple(Route(*pairs[k]) for k in sorted(chosen))
    M = int(rng.integers(1, max_sites + 1))
    L = int(rng.integers(1, max_lengths + 1))
    T = int(rng.integers(1, max_horizon + 1))
    V = len(nodes)
    wc_len = np.sort(rng.uniform(0.02, 0.25, L))
    params = InstanceParams(
        cc=rng.uniform(0.02, 0.15, (R, T)),
        w=rng.uniform(1.0, 10.0, (R, T)),
        wo=rng.uniform(0.5, 3.0, V),
        uo=rng.uniform(0.3, 0.7, (V, T)),
        wc=np.broadcast_to(wc_len[None, None, :, None], (R, M, L, T)).copy(),
        ccv=rng.uniform(1.0, 20.0, (R, M, T)),
        ccf=rng.uniform(1.0, 10.0, (R, M, T)),
        ccc=rng.uniform(50.0, 150.0, (R, M, L)),
        ma=float(rng.uniform(0.2, 0.6)),
    )
    return NetworkInstance(nodes, routes, T, M, L, params, name=f"random-{seed}", seed=seed)


# -- sensitivity sweeps ------------------------------------------------------

MA_GRID = (0.2, 0.27, 0.3, 0.4, 0.5, 0.6, 0.7, 0.74, 0.8)
SOLAR_GRID = (0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0)
SOLAR_MA = 0.7
# grid and solar capacity as shares of the largest pad's nominal charge
GRID_SHARE = 0.9
SOLAR_SHARE = 0.1


def length_labels(lengths: int) -> list[str]:
    if lengths == 3:
        return ["small", "medium", "large"]
    return [f"l{k + 1}" for k in range(lengths)]


def _length_letter(k: int, lengths: int) -> str:
    return "SML"[k] if lengths == 3 else str(k + 1)


@dataclass(frozen=True)
class SweepRow:
    label: str
    value: float
    status: str
    cost: float | None
    pads: tuple[int, ...]  # built sites per length, shortest first
    sites: tuple[str, ...]  # "route#site:length", 1-based sites
    pct_decrease: float | None = None
    message: str = ""
    # decoded plan for re-checking; not part of the written reports
    plan: Any = field(default=None, compare=False, repr=False)

    @property
    def num_sites(self) -> int:
        return len(self.sites)


@dataclass(frozen=True)
class SweepReport:
    kind: str  # "ma" | "solar"
    rows: tuple[SweepRow, ...]
    meta: tuple[tuple[str, str], ...]  # provenance, in emission order
    lengths: int = 3

    def columns(self) -> list[str]:
        cols = ["label", "value", "status", "cost"]
        cols += [f"pads_{n}" for n in length_labels(self.lengths)]
        cols += ["num_sites", "sites"]
        if self.kind == "solar":
            cols.append("pct_decrease")
        return cols

    def to_csv(self) -> str:
        import csv
        import io

        buf = io.StringIO()
        for key, val in self.meta:
            buf.write(f"# {key}={val}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns())
        for row in self.rows:
            rec = [row.label, _fmt(row.value), row.status, _fmt(row.cost)]
            rec += [str(k) for k in row.pads] if row.pads else [""] * self.lengths
            rec += [str(row.num_sites) if row.pads else "", ";".join(row.sites)]
            if self.kind == "solar":
                rec.append(_fmt(row.pct_decrease, 4))
            writer.writerow(rec)
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"{key}: {val}" for key, val in self.meta]
        cols = self.columns()
        cols.remove("sites")
        table = [cols]
        for row in self.rows:
            rec = [row.label, _fmt(row.value), row.status, _fmt(row.cost, 2)]
            rec += [str(k) for k in row.pads] if row.pads else ["-"] * self.lengths
            rec.append(str(row.num_sites) if row.pads else "-")
            if self.kind == "solar":
                rec.append(_fmt(row.pct_decrease, 2))
            table.append([c if c else "-" for c in rec])
        widths = [max(len(r[k]) for r in table) for k in range(len(cols))]
        lines.append("")
        for r in table:
            lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip())
        for row in self.rows:
            if row.sites:
                lines.append(f"{row.label}: {' '.join(row.sites)}")
            if row.message:
                lines.append(f"{row.label}: {row.message}")
        return "\n".join(lines) + "\n"

    def costs(self) -> list[float | None]:
        return [row.cost for row in self.rows]


def _fmt(v, digits: int = 6) -> str:
    if v is None:
        return ""
    return f"{v:.{digits}f}"


def _solve_row(args):
    """Solve one scenario (module level so process pools can pickle it)."""
    from padplan.chargeflow import ChargeFlowError
    from padplan.formulation import build_model
    from padplan.model import ModelError
    from padplan.solver import SolverError, solve_milp

    label, value, inst, config, options = args
    try:
        model, vmap = build_model(inst, options)
        result = solve_milp(model, config)
    except (SolverError, ChargeFlowError, ModelError) as exc:
        return SweepRow(label, value, "error", None, (), (), message=str(exc))
    if result.values is None:
        log.info("%s: %s after %.1fs", label, result.status, result.stats.wall_time)
        return SweepRow(label, value, result.status, None, (), ())
    log.info("%s: %s %.6f after %.1fs", label, result.status, result.objective, result.stats.wall_time)
    sol = vmap.decode(result.values)
    pads = tuple(int(k) for k in sol.pads_by_length())
    sites = tuple(
        f"{inst.routes[r].key}#{m + 1}:{_length_letter(l, inst.lengths)}"
        for r, m, l in np.argwhere(sol.x == 1)
    )
    return SweepRow(label, value, result.status, float(result.objective), pads, sites, plan=sol.assignment())


def _run_rows(jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [_solve_row(job) for job in jobs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_solve_row, jobs))  # map keeps input order


def _meta(inst: NetworkInstance, config, extra: list[tuple[str, str]]):
    import json

    base = [
        ("instance", inst.name or "-"),
        ("seed", "-" if inst.seed is None else str(inst.seed)),
        ("horizon", str(inst.horizon)),
        ("routes", str(inst.num_routes)),
        ("sites_per_route", str(inst.sites_per_route)),
        ("lengths", str(inst.lengths)),
        ("feas_tol", repr(config.feas_tol)),
        ("int_tol", repr(config.int_tol)),
        ("gap", repr(config.gap)),
        ("solver", json.dumps(config.to_dict(), sort_keys=True)),
        ("config_hash", config.digest()),
    ]
    return tuple(base + extra)


def _options_text(options) -> str:
    return ",".join(f"{f.name}={getattr(options, f.name)!r}" for f in dataclasses.fields(options))


def sweep_ma(
    instance: NetworkInstance,
    ma_values=MA_GRID,
    config=None,
    options=None,
    workers: int = 1,
) -> SweepReport:
    """One solve per minimum-charge level; rows follow ``ma_values``."""
    from padplan.formulation import FormulationOptions
    from padplan.solver import SolverConfig

    config = config or SolverConfig()
    options = options or FormulationOptions(coverage_rows=True)
    values = [float(v) for v in ma_values]
    if values != sorted(values):
        raise ValueError("ma_values must be sorted ascending")
    jobs = [(f"MA={v:g}", v, instance.with_params(ma=v), config, options) for v in values]
    rows = _run_rows(jobs, workers)
    return SweepReport("ma", tuple(rows), _meta(instance, config, [("sweep", "ma"), ("formulation", _options_text(options))]), instance.lengths)


def default_capacities(instance: NetworkInstance) -> tuple[float, float]:
    """(grid_cap, solar_cap) defaults: shares of the largest nominal pad charge."""
    top = float(np.max(instance.params.wc))
    return GRID_SHARE * top, SOLAR_SHARE * top


def sweep_solar(
    instance: NetworkInstance,
    fractions=SOLAR_GRID,
    grid_cap=None,
    solar_cap=None,
    config=None,
    ma: float | None = SOLAR_MA,
    options=None,
    workers: int = 1,
) -> SweepReport:
    """Cap pad output at ``grid_cap + f * solar_cap`` for each fraction f.

    ``ma`` replaces the instance's minimum charge level unless None.
    Percent decrease is measured against the fraction-0 row (or the first
    row when 0 is not in the grid).
    """
    from padplan.formulation import FormulationOptions, apply_capacity
    from padplan.solver import SolverConfig

    config = config or SolverConfig()
    options = options or FormulationOptions(coverage_rows=True)
    fracs = [float(f) for f in fractions]
    if any(not 0.0 <= f <= 1.0 for f in fracs):
        raise ValueError("fractions must lie in [0, 1]")
    d_grid, d_solar = default_capacities(instance)
    grid_cap = d_grid if grid_cap is None else grid_cap
    solar_cap = d_solar if solar_cap is None else solar_cap
    base = instance if ma is None else instance.with_params(ma=ma)
    jobs = [
        (f"f={f:g}", f, apply_capacity(base, grid_cap, solar_cap, f), config, options)
        for f in fracs
    ]
    rows = _run_rows(jobs, workers)
    ref_idx = fracs.index(0.0) if 0.0 in fracs else 0
    ref = rows[ref_idx].cost if rows else None
    rows = [
        dataclasses.replace(
            r, pct_decrease=None if (r.cost is None or not ref) else 100.0 * (ref - r.cost) / ref
        )
        for r in rows
    ]
    extra = [
        ("sweep", "solar"),
        ("ma", "-" if ma is None else repr(float(ma))),
        ("grid_cap", _cap_text(grid_cap)),
        ("solar_cap", _cap_text(solar_cap)),
        ("formulation", _options_text(options)),
    ]
    return SweepReport("solar", tuple(rows), _meta(base, config, extra), instance.lengths)


def _cap_text(cap) -> str:
    arr = np.asarray(cap, dtype=float)
    if arr.ndim == 0:
        return repr(float(arr))
    return "[" + ",".join(repr(float(v)) for v in arr.ravel()) + "]"
