"""Network drawings: Graphviz DOT and a self-contained SVG.

Intersections are circles and routes are directed edges labelled with
their traffic weight.  Each route's candidate sites appear as a row of
boxes along the edge; a built site is filled and marked with its pad
length (S/M/L when there are three lengths).
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import networkx as nx
import numpy as np

from padplan.network import NetworkInstance, derive_weights

# hand-placed coordinates for the bundled eight-intersection network
FIXED_LAYOUTS = {
    ("1", "2", "3", "4", "5", "6", "7", "8"): {
        "1": (70, 210),
        "2": (230, 80),
        "3": (230, 340),
        "4": (410, 210),
        "5": (410, 80),
        "6": (590, 150),
        "7": (410, 340),
        "8": (760, 250),
    }
}


def length_mark(l: int, lengths: int) -> str:
    return "SML"[l] if lengths == 3 else str(l + 1)


def _selection(inst: NetworkInstance, x) -> dict[tuple[int, int], int]:
    """(route, site) -> chosen length index."""
    if x is None:
        return {}
    x = np.asarray(x)
    return {(int(r), int(m)): int(l) for r, m, l in np.argwhere(x >= 0.5)}


def _weight_labels(inst: NetworkInstance) -> list[str]:
    w = derive_weights(inst).params.w
    out = []
    for r in range(inst.num_routes):
        row = w[r]
        if np.all(row == row[0]):
            out.append(f"{row[0]:g}")
        else:
            out.append(f"{row.mean():.3g} avg")
    return out


def _dot_id(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_dot(inst: NetworkInstance, x=None, title: str | None = None) -> str:
    chosen = _selection(inst, x)
    labels = _weight_labels(inst)
    name = title or inst.name or "network"
    out = [
        f"digraph {_dot_id(name)} {{",
        "  graph [rankdir=LR, nodesep=0.4, ranksep=0.3, fontname=Helvetica];",
        "  node [fontname=Helvetica, fontsize=11];",
        "  edge [fontname=Helvetica, fontsize=10];",
    ]
    for v in inst.nodes:
        out.append(f"  {_dot_id('n' + v)} [shape=circle, label={_dot_id(v)}];")
    for r, route in enumerate(inst.routes):
        chain = [_dot_id("n" + route.source)]
        out.append(f"  subgraph {_dot_id(f'cluster_r{r + 1}')} {{")
        out.append(f"    label={_dot_id(route.key)}; style=dashed; color=gray60; fontsize=9;")
        for m in range(inst.sites_per_route):
            site = _dot_id(f"r{r + 1}s{m + 1}")
            chain.append(site)
            if (r, m) in chosen:
                mark = length_mark(chosen[(r, m)], inst.lengths)
                out.append(
                    f"    {site} [shape=box, width=0.3, height=0.2, style=filled, "
                    f"fillcolor=black, fontcolor=white, label={_dot_id(mark)}];"
                )
            else:
                out.append(f"    {site} [shape=box, width=0.3, height=0.2, label=\"\"];")
        out.append("  }")
        chain.append(_dot_id("n" + route.target))
        mid = len(chain) // 2 - 1
        for k in range(len(chain) - 1):
            attrs = []
            if k < len(chain) - 2:
                attrs.append("arrowhead=none")
            if k == mid:
                attrs.append(f"label={_dot_id('w=' + labels[r])}")
            tail = f" [{', '.join(attrs)}]" if attrs else ""
            out.append(f"  {chain[k]} -> {chain[k + 1]}{tail};")
    out.append("}")
    return "\n".join(out) + "\n"


def _layered_layout(inst: NetworkInstance) -> dict[str, tuple[float, float]]:
    g = nx.DiGraph()
    g.add_nodes_from(inst.nodes)
    g.add_edges_from((r.source, r.target) for r in inst.routes)
    if nx.is_directed_acyclic_graph(g):
        layers = [sorted(layer, key=inst.nodes.index) for layer in nx.topological_generations(g)]
        pos = {}
        for i, layer in enumerate(layers):
            for j, v in enumerate(layer):
                pos[v] = (70 + 170 * i, 80 + 130 * j + 65 * (i % 2))
        return pos
    n = len(inst.nodes)
    return {
        v: (380 + 280 * math.cos(2 * math.pi * k / n), 240 + 180 * math.sin(2 * math.pi * k / n))
        for k, v in enumerate(inst.nodes)
    }


def render_svg(inst: NetworkInstance, x=None, title: str | None = None) -> str:
    chosen = _selection(inst, x)
    labels = _weight_labels(inst)
    pos = FIXED_LAYOUTS.get(tuple(inst.nodes)) or _layered_layout(inst)
    width = int(max(p[0] for p in pos.values()) + 80)
    height = int(max(p[1] for p in pos.values()) + 80)
    radius = 18
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="Helvetica, Arial, sans-serif">',
        "<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" "
        "markerWidth=\"7\" markerHeight=\"7\" orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\"/></marker></defs>",
    ]
    if title or inst.name:
        out.append(f'<text x="10" y="20" font-size="13">{escape(title or inst.name)}</text>')
    for r, route in enumerate(inst.routes):
        (x0, y0), (x1, y1) = pos[route.source], pos[route.target]
        dx, dy = x1 - x0, y1 - y0
        dist = math.hypot(dx, dy) or 1.0
        ux, uy = dx / dist, dy / dist
        # shift antiparallel pairs apart
        off = 6 if any(o.source == route.target and o.target == route.source for o in inst.routes) else 0
        nx_, ny_ = -uy * off, ux * off
        sx, sy = x0 + ux * radius + nx_, y0 + uy * radius + ny_
        ex, ey = x1 - ux * radius + nx_, y1 - uy * radius + ny_
        out.append(
            f'<line x1="{sx:.1f}" y1="{sy:.1f}" x2="{ex:.1f}" y2="{ey:.1f}" '
            f'stroke="black" stroke-width="1.2" marker-end="url(#arrow)"/>'
        )
        angle = math.degrees(math.atan2(dy, dx))
        M = inst.sites_per_route
        for m in range(M):
            t = (m + 1) / (M + 1)
            cx, cy = sx + (ex - sx) * t, sy + (ey - sy) * t
            built = (r, m) in chosen
            fill = "black" if built else "white"
            out.append(
                f'<rect x="{cx - 7:.1f}" y="{cy - 5:.1f}" width="14" height="10" fill="{fill}" '
                f'stroke="black" transform="rotate({angle:.1f} {cx:.1f} {cy:.1f})"/>'
            )
            if built:
                mark = length_mark(chosen[(r, m)], inst.lengths)
                out.append(
                    f'<text x="{cx:.1f}" y="{cy + 3.5:.1f}" font-size="9" fill="white" '
                    f'text-anchor="middle">{mark}</text>'
                )
        lx, ly = (sx + ex) / 2 - uy * 14, (sy + ey) / 2 + ux * 14
        out.append(
            f'<text x="{lx:.1f}" y="{ly:.1f}" font-size="10" fill="#444" '
            f'text-anchor="middle">{escape(labels[r])}</text>'
        )
    for v in inst.nodes:
        cx, cy = pos[v]
        out.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="{radius}" fill="white" stroke="black"/>')
        out.append(
            f'<text x="{cx:.1f}" y="{cy + 4:.1f}" font-size="12" text-anchor="middle">{escape(v)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_network(inst: NetworkInstance, x=None, fmt: str = "dot", title: str | None = None) -> str:
    if fmt == "dot":
        return render_dot(inst, x, title)
    if fmt == "svg":
        return render_svg(inst, x, title)
    raise ValueError(f"unknown render format {fmt!r}")
