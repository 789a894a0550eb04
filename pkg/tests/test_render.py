import re

import numpy as np

from padplan.chargeflow import PadAssignment
from padplan.formulation import build_model
from padplan.network import load_instance
from padplan.render import render_dot, render_network, render_svg
from padplan.solver import SolverConfig, solve_milp


def _filled(dot):
    return re.findall(r"style=filled, fillcolor=black, fontcolor=white, label=\"(\w)\"", dot)


def test_instance_only_has_no_filled_sites(table3_short):
    dot = render_dot(table3_short)
    assert _filled(dot) == []
    assert dot.count("shape=circle") == 8
    assert dot.count("shape=box") == 30
    assert dot.count("subgraph") == 10


def test_single_large_pad_on_route_1_3(table3_short):
    a = PadAssignment.from_sites(table3_short, [("1->3", 1, 2)])
    dot = render_dot(table3_short, a.x)
    assert _filled(dot) == ["L"]
    assert '"r3s2" [shape=box' in dot and 'label="L"' in dot


def test_weights_labelled(table3_short):
    dot = render_dot(table3_short)
    assert 'label="w=7"' in dot and 'label="w=8"' in dot


def test_filled_count_equals_solution(table3_path):
    inst = load_instance(table3_path, horizon=3).with_params(ma=0.4)
    model, vmap = build_model(inst)
    res = solve_milp(model, SolverConfig())
    x = vmap.decode(res.values).x
    dot = render_dot(inst, x)
    assert len(_filled(dot)) == int(x.sum()) > 0
    svg = render_svg(inst, x)
    assert svg.count('fill="black"') == int(x.sum())


def test_render_is_deterministic(table3_short):
    x = np.zeros((10, 3, 3))
    x[2, 0, 1] = 1
    assert render_network(table3_short, x, "svg") == render_network(table3_short, x, "svg")
    assert render_network(table3_short, x, "dot") == render_network(table3_short, x, "dot")


def test_generic_layout_for_other_networks():
    from padplan.scenario import random_small_instance

    svg = render_svg(random_small_instance(3))
    assert svg.startswith("<svg") and svg.count("<circle") == 3
