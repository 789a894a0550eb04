"""Road network instances: topology, planning horizon and model parameters.

Instances are stored as TOML documents (``schema = 1``).  Every parameter
table is keyed by a route (``"i->j"``) or a node id, plus an optional
``default`` entry.  Values broadcast *left-aligned*: a value with fewer
axes than the parameter is padded with trailing singleton axes before
numpy broadcasting, so ``wc = [[0.04, 0.08, 0.12]]`` gives every site the
same per-length charge over all periods.
"""

from __future__ import annotations

import dataclasses
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import networkx as nx
import numpy as np
import tomli_w

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

SCHEMA_VERSION = 1

# axis layout of every parameter; the first axis is the keyed entity
PARAM_AXES: dict[str, tuple[str, ...]] = {
    "cc": ("route", "period"),
    "ahd": ("route", "period"),
    "w": ("route", "period"),
    "we": ("route", "period"),
    "wo": ("node",),
    "uo": ("node", "period"),
    "wc": ("route", "site", "length", "period"),
    "ccv": ("route", "site", "period"),
    "ccf": ("route", "site", "period"),
    "ccc": ("route", "site", "length"),
}
REQUIRED_PARAMS = ("cc", "wo", "uo", "wc", "ccv", "ccf", "ccc")
OPTIONAL_PARAMS = ("ahd", "w", "we")


class InstanceError(ValueError):
    """Malformed or invalid instance data.  ``field`` names the offending entry."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


@dataclass(frozen=True, order=True)
class Route:
    source: str
    target: str

    def __post_init__(self):
        if self.source == self.target:
            raise InstanceError(f"self-loop {self.source}->{self.target}", "routes")

    @property
    def key(self) -> str:
        return f"{self.source}->{self.target}"

    @classmethod
    def parse(cls, key: str) -> "Route":
        parts = key.split("->")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise InstanceError(f"bad route key {key!r}, expected 'i->j'", "routes")
        return cls(parts[0].strip(), parts[1].strip())

    def __str__(self):
        return self.key


def _frozen(arr: np.ndarray | None) -> np.ndarray | None:
    if arr is None:
        return None
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class InstanceParams:
    """Model parameters as dense arrays (R routes, V nodes, M sites, L lengths, T periods).

    cc, ahd, w, we: (R, T); wo: (V,); uo: (V, T); wc: (R, M, L, T);
    ccv, ccf: (R, M, T); ccc: (R, M, L).
    """

    cc: np.ndarray
    wo: np.ndarray
    uo: np.ndarray
    wc: np.ndarray
    ccv: np.ndarray
    ccf: np.ndarray
    ccc: np.ndarray
    ma: float
    we: np.ndarray | None = None
    w: np.ndarray | None = None
    ahd: np.ndarray | None = None
    budget: float | None = None
    big_m: float | None = None

    def __post_init__(self):
        for name in PARAM_AXES:
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.we is None:
            object.__setattr__(self, "we", _frozen(np.ones_like(self.cc)))
        object.__setattr__(self, "ma", float(self.ma))

    def __eq__(self, other):
        if not isinstance(other, InstanceParams):
            return NotImplemented
        for f in dataclasses.fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
                if a is None or b is None or a.shape != b.shape or not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
        return True

    __hash__ = None

    def replace(self, **changes) -> "InstanceParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, eq=False)
class NetworkInstance:
    nodes: tuple[str, ...]
    routes: tuple[Route, ...]
    horizon: int
    sites_per_route: int
    lengths: int
    params: InstanceParams
    name: str = ""
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(str(n) for n in self.nodes))
        object.__setattr__(self, "routes", tuple(self.routes))
        validate_instance(self)

    def __eq__(self, other):
        if not isinstance(other, NetworkInstance):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.routes == other.routes
            and self.horizon == other.horizon
            and self.sites_per_route == other.sites_per_route
            and self.lengths == other.lengths
            and self.params == other.params
            and self.name == other.name
            and self.seed == other.seed
        )

    __hash__ = None

    @property
    def num_routes(self) -> int:
        return len(self.routes)

    def node_index(self, node: str) -> int:
        return self.nodes.index(str(node))

    def route_index(self, route: Route | str | tuple) -> int:
        if isinstance(route, str):
            route = Route.parse(route)
        elif isinstance(route, tuple):
            route = Route(str(route[0]), str(route[1]))
        return self.routes.index(route)

    @property
    def tails(self) -> np.ndarray:
        """Node index of each route's source."""
        return np.array([self.node_index(r.source) for r in self.routes], dtype=np.intp)

    @property
    def heads(self) -> np.ndarray:
        return np.array([self.node_index(r.target) for r in self.routes], dtype=np.intp)

    def inbound(self, node: str) -> list[int]:
        return [k for k, r in enumerate(self.routes) if r.target == node]

    def effective_wc(self) -> np.ndarray:
        """Delivered charge ``we * wc`` with shape (R, M, L, T)."""
        return self.params.we[:, None, None, :] * self.params.wc

    def replace(self, **changes) -> "NetworkInstance":
        return dataclasses.replace(self, **changes)

    def with_params(self, **changes) -> "NetworkInstance":
        return self.replace(params=self.params.replace(**changes))


def _param_shape(name: str, inst_dims: Mapping[str, int]) -> tuple[int, ...]:
    return tuple(inst_dims[a] for a in PARAM_AXES[name])


def validate_instance(inst: NetworkInstance) -> None:
    if len(set(inst.nodes)) != len(inst.nodes):
        raise InstanceError("duplicate node ids", "nodes")
    if not inst.nodes:
        raise InstanceError("no nodes declared", "nodes")
    declared = set(inst.nodes)
    seen = set()
    for r in inst.routes:
        if r.source not in declared or r.target not in declared:
            raise InstanceError(f"route {r.key} uses an undeclared node", "routes")
        if r in seen:
            raise InstanceError(f"duplicate route {r.key}", "routes")
        seen.add(r)
    if int(inst.horizon) != inst.horizon or inst.horizon < 1:
        raise InstanceError("horizon must be an integer >= 1", "horizon")
    if int(inst.sites_per_route) != inst.sites_per_route or inst.sites_per_route < 0:
        raise InstanceError("sites_per_route must be an integer >= 0", "sites_per_route")
    if int(inst.lengths) != inst.lengths or inst.lengths < 1:
        raise InstanceError("lengths must be an integer >= 1", "lengths")

    dims = _dims(inst)
    p = inst.params
    for name in PARAM_AXES:
        arr = getattr(p, name)
        if arr is None:
            if name in REQUIRED_PARAMS:
                raise InstanceError("missing", name)
            continue
        want = _param_shape(name, dims)
        if arr.shape != want:
            raise InstanceError(f"shape {arr.shape}, expected {want}", name)
        if not np.all(np.isfinite(arr)):
            raise InstanceError("non-finite value", name)
    for name in ("cc", "uo", "wc"):
        arr = getattr(p, name)
        if arr.size and (arr.min() < 0 or arr.max() > 1):
            raise InstanceError("charge fraction outside [0, 1]", name)
    if p.we.size and (p.we.min() <= 0 or p.we.max() > 1):
        raise InstanceError("efficiency outside (0, 1]", "we")
    for name in ("ccv", "ccf", "ccc", "wo", "w", "ahd"):
        arr = getattr(p, name)
        if arr is not None and arr.size and arr.min() < 0:
            raise InstanceError("negative value", name)
    if not np.isfinite(p.ma) or not 0 <= p.ma <= 1:
        raise InstanceError("must lie in [0, 1]", "ma")
    if p.budget is not None and (not np.isfinite(p.budget) or p.budget < 0):
        raise InstanceError("must be a finite value >= 0", "budget")
    if p.big_m is not None and (not np.isfinite(p.big_m) or p.big_m <= 0):
        raise InstanceError("must be a finite value > 0", "big_m")
    if inst.effective_wc().size and inst.effective_wc().max() > 1:
        raise InstanceError("we*wc exceeds 1", "wc")


def _dims(inst) -> dict[str, int]:
    return {
        "route": len(inst.routes),
        "node": len(inst.nodes),
        "site": int(inst.sites_per_route),
        "length": int(inst.lengths),
        "period": int(inst.horizon),
    }


# ---------------------------------------------------------------------------
# file format


def _broadcast_left(value: Any, shape: tuple[int, ...], where: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (ValueError, TypeError) as exc:
        raise InstanceError(f"not a number or rectangular array ({exc})", where) from None
    if arr.ndim > len(shape):
        raise InstanceError(f"too many axes ({arr.ndim} > {len(shape)})", where)
    arr = arr.reshape(arr.shape + (1,) * (len(shape) - arr.ndim))
    try:
        return np.broadcast_to(arr, shape).copy()
    except ValueError:
        raise InstanceError(f"shape {arr.shape} does not broadcast to {shape}", where) from None


def _parse_param(name: str, raw: Any, keys: list[str], shape: tuple[int, ...]) -> np.ndarray:
    rest = shape[1:]
    if not isinstance(raw, dict):
        raw = {"default": raw}
    unknown = set(raw) - set(keys) - {"default"}
    if unknown:
        raise InstanceError(f"unknown keys {sorted(unknown)}", name)
    out = np.empty(shape, dtype=float)
    for k, key in enumerate(keys):
        if key in raw:
            out[k] = _broadcast_left(raw[key], rest, f"{name}[{key}]")
        elif "default" in raw:
            out[k] = _broadcast_left(raw["default"], rest, f"{name}.default")
        else:
            raise InstanceError(f"no value for {key!r} and no default", name)
    return out


def instance_from_dict(doc: Mapping[str, Any], horizon: int | None = None) -> NetworkInstance:
    """Build an instance from a parsed document.  ``horizon`` overrides the file."""
    schema = doc.get("schema")
    if schema != SCHEMA_VERSION:
        raise InstanceError(f"unsupported schema {schema!r}, expected {SCHEMA_VERSION}", "schema")
    try:
        nodes = [str(n) for n in doc["nodes"]]
        routes = [Route.parse(str(k)) for k in doc.get("routes", [])]
        T = int(horizon if horizon is not None else doc["horizon"])
        M = int(doc["sites_per_route"])
        L = int(doc["lengths"])
        ma = float(doc["ma"])
    except KeyError as exc:
        raise InstanceError("missing", exc.args[0]) from None
    except (TypeError, ValueError) as exc:
        raise InstanceError(str(exc)) from None

    dims = {"route": len(routes), "node": len(nodes), "site": M, "length": L, "period": T}
    raw_params = dict(doc.get("params", {}))
    unknown = set(raw_params) - set(PARAM_AXES)
    if unknown:
        raise InstanceError(f"unknown parameters {sorted(unknown)}", "params")

    seed = doc.get("seed")
    if "generator" in doc:
        from padplan.scenario import draw_generated_params

        seed, drawn = draw_generated_params(doc["generator"], dims)
        for name, arr in drawn.items():
            if name in raw_params:
                raise InstanceError("given both explicitly and by the generator", name)
            raw_params[name] = arr

    values: dict[str, np.ndarray | None] = {}
    for name in PARAM_AXES:
        shape = _param_shape(name, dims)
        keys = [r.key for r in routes] if PARAM_AXES[name][0] == "route" else nodes
        raw = raw_params.get(name)
        if raw is None:
            if name in REQUIRED_PARAMS:
                raise InstanceError("missing", name)
            values[name] = None
        elif isinstance(raw, np.ndarray):
            values[name] = raw
        else:
            values[name] = _parse_param(name, raw, keys, shape)

    params = InstanceParams(
        ma=ma,
        budget=_opt_float(doc, "budget"),
        big_m=_opt_float(doc, "big_m"),
        **values,
    )
    return NetworkInstance(
        nodes=tuple(nodes),
        routes=tuple(routes),
        horizon=T,
        sites_per_route=M,
        lengths=L,
        params=params,
        name=str(doc.get("name", "")),
        seed=None if seed is None else int(seed),
    )


def _opt_float(doc, key):
    v = doc.get(key)
    if v is None:
        return None
    try:
        return float(v)
    except (TypeError, ValueError):
        raise InstanceError("not a number", key) from None


def load_instance(path: str | os.PathLike, horizon: int | None = None) -> NetworkInstance:
    """Read and validate an instance file (``we`` defaults to 1 everywhere)."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise InstanceError(f"parse error in {path}: {exc}") from None
    return instance_from_dict(doc, horizon=horizon)


def _compact(arr: np.ndarray):
    """Smallest left-aligned value that broadcasts back to ``arr`` exactly."""
    a = np.asarray(arr, dtype=float)
    while a.ndim and a.shape[-1] and np.all(a == a[..., :1]):
        a = a[..., 0]
    for ax in range(a.ndim):
        if a.shape[ax] > 1:
            first = np.take(a, [0], axis=ax)
            if np.all(a == first):
                a = first
    if a.ndim == 0:
        return float(a)
    return a.tolist()


def _dump_param(arr: np.ndarray, keys: list[str]) -> dict:
    forms = [_compact(arr[k]) for k in range(arr.shape[0])]
    if forms and all(f == forms[0] for f in forms):
        return {"default": forms[0]}
    return {key: f for key, f in zip(keys, forms)}


def instance_to_dict(inst: NetworkInstance) -> dict:
    p = inst.params
    doc: dict[str, Any] = {"schema": SCHEMA_VERSION}
    if inst.name:
        doc["name"] = inst.name
    if inst.seed is not None:
        doc["seed"] = inst.seed
    doc.update(
        horizon=inst.horizon,
        sites_per_route=inst.sites_per_route,
        lengths=inst.lengths,
        ma=p.ma,
        nodes=list(inst.nodes),
        routes=[r.key for r in inst.routes],
    )
    if p.budget is not None:
        doc["budget"] = p.budget
    if p.big_m is not None:
        doc["big_m"] = p.big_m
    params = {}
    route_keys = [r.key for r in inst.routes]
    for name, axes in PARAM_AXES.items():
        arr = getattr(p, name)
        if arr is None or arr.shape[0] == 0:
            continue
        params[name] = _dump_param(arr, route_keys if axes[0] == "route" else list(inst.nodes))
    doc["params"] = params
    return doc


def atomic_write(path: str | os.PathLike, data: str | bytes) -> None:
    """Write via a temporary sibling file and rename into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_instance(inst: NetworkInstance) -> str:
    return tomli_w.dumps(instance_to_dict(inst))


def save_instance(inst: NetworkInstance, path: str | os.PathLike) -> None:
    atomic_write(path, dumps_instance(inst))


# ---------------------------------------------------------------------------
# derived data


def derive_weights(inst: NetworkInstance) -> NetworkInstance:
    """Fill inflow weights from hourly traffic (used raw; the inflow average
    divides by the weight sum so a common scale cancels).  Instances that
    already carry ``w`` are returned unchanged."""
    if inst.params.w is not None:
        return inst
    if inst.params.ahd is None:
        raise InstanceError("hourly traffic required to derive weights", "ahd")
    return inst.with_params(w=np.array(inst.params.ahd))


def weights(inst: NetworkInstance) -> np.ndarray:
    """Inflow weights (R, T), deriving them from ``ahd`` if needed."""
    return derive_weights(inst).params.w


@dataclass(frozen=True)
class TopologyReport:
    acyclic: bool
    order: tuple[str, ...] | None
    cycles: tuple[tuple[str, ...], ...]
    sources: tuple[str, ...]


def route_graph(inst: NetworkInstance) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(inst.nodes)
    g.add_edges_from((r.source, r.target) for r in inst.routes)
    return g


def topology_report(inst: NetworkInstance) -> TopologyReport:
    g = route_graph(inst)
    rank = {n: k for k, n in enumerate(inst.nodes)}
    sources = tuple(n for n in inst.nodes if g.in_degree(n) == 0)
    if nx.is_directed_acyclic_graph(g):
        order = tuple(nx.lexicographical_topological_sort(g, key=rank.__getitem__))
        return TopologyReport(True, order, (), sources)
    cycles = []
    for cyc in nx.simple_cycles(g):
        k = min(range(len(cyc)), key=lambda i: rank[cyc[i]])
        cycles.append(tuple(cyc[k:] + cyc[:k]))
    cycles.sort(key=lambda c: [rank[n] for n in c])
    return TopologyReport(False, None, tuple(cycles), sources)
