import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import linearization_counterexamples
from padplan.chargeflow import PadAssignment, evaluate_charge_flow, evaluate_cost
from padplan.formulation import (
    FormulationOptions,
    apply_capacity,
    build_model,
    expected_row_count,
    linearize_product,
)
from padplan.model import MilpModel, ModelError
from padplan.network import load_instance
from padplan.scenario import random_small_instance
from padplan.solver import SolverConfig, solve_milp


def test_month_model_dimensions(table3_path):
    inst = load_instance(table3_path, horizon=720)
    model, vmap = build_model(inst)
    assert vmap.x.size == 90
    assert vmap.u.size == 7200
    assert vmap.p.size == 7200
    assert vmap.z.size == 21600
    assert model.num_vars == 90 + 7200 + 7200 + 21600
    assert model.num_constraints == expected_row_count(10, 3, 720) == 108030
    assert model.num_integer == 90 + 7200


def test_budget_row(table3_short):
    inst = table3_short.with_params(budget=25000.0)
    model, _ = build_model(inst, FormulationOptions(use_budget=True))
    assert model.num_constraints == expected_row_count(10, 3, 2, budget=True)
    assert model.row_names[-1] == "budget"
    with pytest.raises(ModelError):
        build_model(table3_short, FormulationOptions(use_budget=True))


def test_row_families_named(table3_short):
    model, _ = build_model(table3_short)
    names = model.row_names
    for family in ("flow(", "minchg(", "full(", "uniq(", ".le_expr", ".le_gate", ".ge_expr", ".nonneg"):
        assert any(family in n for n in names), family


@pytest.mark.parametrize("coefs", [[0.04], [0.04, 0.08], [0.04, 0.08, 0.12], [0.1] * 7])
def test_linearization_is_exact(coefs):
    assert linearization_counterexamples(coefs) == []


def test_loose_big_m_still_exact():
    assert linearization_counterexamples([0.04, 0.08, 0.12], big_m=50.0) == []


def test_big_m_below_expression_rejected():
    m = MilpModel()
    x = m.add_binary("x")
    g = m.add_binary("g")
    with pytest.raises(ModelError, match="big-M"):
        linearize_product(m, {x: 0.5}, 0.5, g, 0.1, "z")


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 100_000), data=st.data())
def test_encoded_assignment_is_feasible_and_priced(seed, data):
    """For any feasible placement, its encoding satisfies every model row
    and the model objective equals the direct cost evaluation."""
    inst = random_small_instance(seed).with_params(ma=0.0)
    R, M, L, T = inst.num_routes, inst.sites_per_route, inst.lengths, inst.horizon
    x = np.zeros((R, M, L), np.int8)
    for r in range(R):
        for m in range(M):
            k = data.draw(st.integers(0, L))
            if k:
                x[r, m, k - 1] = 1
    p = np.array(data.draw(st.lists(st.integers(0, 1), min_size=R * T, max_size=R * T))).reshape(R, T)
    a = PadAssignment(x, p)
    prof = evaluate_charge_flow(inst, a)
    model, vmap = build_model(inst)
    v = vmap.encode(inst, a, prof)
    top = prof.inflow + np.einsum("rmlt,rml->rt", inst.effective_wc(), x.astype(float)) * p
    if top.max() <= 1.0 and prof.u.min() >= 0.0:
        assert model.max_violation(v) <= 1e-9
    assert model.objective_value(v) == pytest.approx(evaluate_cost(inst, a), rel=1e-12, abs=1e-9)


@pytest.mark.parametrize("seed", range(8))
def test_big_m_choice_does_not_move_optimum(seed):
    inst = random_small_instance(seed, max_routes=2, max_horizon=2)
    cfg = SolverConfig(backend="native")
    tight = solve_milp(build_model(inst)[0], cfg)
    loose = solve_milp(build_model(inst, FormulationOptions(big_m=1.0))[0], cfg)
    assert tight.status == loose.status
    if tight.ok:
        assert tight.objective == pytest.approx(loose.objective, rel=1e-9)


def test_apply_capacity(table3_short):
    capped = apply_capacity(table3_short, 0.05, 0.05, 0.5)
    np.testing.assert_allclose(capped.params.wc[0, 0, :, 0], [0.04, 0.075, 0.075])
    same = apply_capacity(table3_short, 1.0, 0.0, 0.0)
    assert same.params == table3_short.params
    with pytest.raises(ValueError):
        apply_capacity(table3_short, 0.1, 0.1, 1.5)
    with pytest.raises(ValueError):
        apply_capacity(table3_short, -0.1, 0.1, 0.5)


def test_decode_switches_off_padless_routes(table3_short):
    model, vmap = build_model(table3_short)
    v = np.zeros(model.num_vars)
    v[vmap.p] = 1.0
    v[vmap.x[0, 0, 2]] = 1.0
    sol = vmap.decode(v)
    assert sol.p[0].tolist() == [1, 1]
    assert sol.p[1:].sum() == 0
    assert sol.pads_by_length().tolist() == [0, 0, 1]


def _one_route(M=1, L=1, T=1, ma=0.4):
    from padplan.network import instance_from_dict

    return instance_from_dict(
        {
            "schema": 1,
            "horizon": T,
            "sites_per_route": M,
            "lengths": L,
            "ma": ma,
            "nodes": ["a", "b"],
            "routes": ["a->b"],
            "params": {"cc": 0.05, "wo": 1.0, "uo": 0.5, "wc": [[0.04, 0.08][:L]] if L else [[0.04]],
                       "ccv": 1.0, "ccf": 1.0, "ccc": 10.0, "w": 1.0},
        }
    )


def test_single_route_structure():
    model, vmap = build_model(_one_route())
    # four product rows, then flow, minimum charge, overcharge, uniqueness
    assert model.num_constraints == 4 + 3 + 1
    assert (vmap.x.size, vmap.u.size, vmap.p.size, vmap.z.size) == (1, 1, 1, 1)


def test_no_sites_model():
    model, vmap = build_model(_one_route(M=0, ma=0.4))
    assert vmap.x.size == 0 and vmap.z.size == 0
    assert model.num_constraints == 3
    ok = solve_milp(model, SolverConfig(backend="native"))
    assert ok.status == "optimal" and ok.objective == pytest.approx(0.0)
    bad, _ = build_model(_one_route(M=0, ma=0.5))
    assert solve_milp(bad, SolverConfig(backend="native")).status == "infeasible"


def test_coverage_rows_are_implied(table3_short):
    plain, vmap = build_model(table3_short)
    covered, _ = build_model(table3_short, FormulationOptions(coverage_rows=True))
    extra = covered.num_constraints - plain.num_constraints
    assert extra > 0 and all(n.startswith("cover(") for n in covered.row_names[-extra:])
    # a plan that meets every minimum level satisfies every coverage row,
    # even when it breaks other rows (this one overcharges)
    a = PadAssignment(np.ones((10, 3, 3)) * (np.arange(3) == 2), np.ones((10, 2)))
    v = vmap.encode(table3_short, a, evaluate_charge_flow(table3_short, a))
    assert v[vmap.u].min() >= table3_short.params.ma
    A, _, rhs, *_ = covered.arrays()
    rows = np.arange(covered.num_constraints - extra, covered.num_constraints)
    assert np.all(A[rows] @ v >= rhs[rows] - 1e-9)
