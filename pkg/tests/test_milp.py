import itertools

import numpy as np
import pytest

from padplan.formulation import build_model
from padplan.model import MilpModel
from padplan.scenario import random_small_instance
from padplan.solver import Problem, SolverConfig, choose_backend, solve_milp
from padplan.solver.result import AUTO_NATIVE_MAX_INTEGERS

NATIVE = SolverConfig(backend="native")


def knapsack(values, weights, cap):
    m = MilpModel("knapsack")
    cols = [m.add_binary(f"x{k}", cost=-v) for k, v in enumerate(values)]
    m.add_constraint(dict(zip(cols, weights)), "<=", cap)
    return m


def knapsack_by_enumeration(values, weights, cap):
    best = 0
    for bits in itertools.product((0, 1), repeat=len(values)):
        if np.dot(bits, weights) <= cap:
            best = max(best, np.dot(bits, values))
    return -best


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("branching", ["most-fractional", "pseudo-cost"])
def test_knapsack_matches_enumeration(seed, branching):
    rng = np.random.default_rng(seed)
    n = 10
    values = rng.integers(1, 30, n).tolist()
    weights = rng.integers(1, 20, n).tolist()
    cap = int(sum(weights) * 0.4)
    res = solve_milp(knapsack(values, weights, cap), SolverConfig(backend="native", branching=branching))
    assert res.status == "optimal"
    assert res.objective == pytest.approx(knapsack_by_enumeration(values, weights, cap), abs=1e-9)


def test_general_integers():
    # max x + y; 2x + 2y <= 7, x - y <= 1.5, x, y integer in [0, 5] -> 3
    m = MilpModel()
    x = m.add_variable("x", 0, 5, integer=True, cost=-1)
    y = m.add_variable("y", 0, 5, integer=True, cost=-1)
    m.add_constraint({x: 2, y: 2}, "<=", 7)
    m.add_constraint({x: 1, y: -1}, "<=", 1.5)
    res = solve_milp(m, NATIVE)
    assert res.status == "optimal" and res.objective == pytest.approx(-3.0)
    assert res.values[x] == pytest.approx(round(res.values[x]))


def test_integer_infeasible_but_lp_feasible():
    m = MilpModel()
    x = m.add_variable("x", 0, 10, integer=True)
    m.add_constraint({x: 2}, "=", 3)
    assert solve_milp(m, NATIVE).status == "infeasible"


def test_objective_offset_carried():
    m = knapsack([3, 4], [1, 1], 1)
    m.obj_offset = 10.0
    assert solve_milp(m, NATIVE).objective == pytest.approx(6.0)


def test_node_limit_reports_incumbent_or_limit():
    rng = np.random.default_rng(3)
    values = rng.integers(10, 40, 30).tolist()
    weights = rng.integers(10, 40, 30).tolist()
    res = solve_milp(knapsack(values, weights, 200), SolverConfig(backend="native", node_limit=3))
    assert res.status in ("time-limit", "optimal")
    if res.values is not None:
        assert res.bound is None or res.bound <= res.objective + 1e-9


def test_backend_rule():
    small, _ = build_model(random_small_instance(1))
    assert choose_backend(Problem.from_model(small), SolverConfig()) == "native"
    big = MilpModel()
    for k in range(AUTO_NATIVE_MAX_INTEGERS + 1):
        big.add_binary(f"b{k}")
    assert choose_backend(Problem.from_model(big), SolverConfig()) == "highs"
    assert choose_backend(Problem.from_model(big), NATIVE) == "native"


@pytest.mark.parametrize("seed", range(12))
def test_backends_agree_on_small_instances(seed):
    inst = random_small_instance(seed)
    model, _ = build_model(inst)
    a = solve_milp(model, NATIVE)
    b = solve_milp(model, SolverConfig(backend="highs"))
    assert a.status == b.status
    if a.ok:
        assert a.objective == pytest.approx(b.objective, rel=1e-6)
        assert model.max_violation(a.values) <= 1e-7
        assert model.integrality_violation(a.values) <= 1e-6


@pytest.mark.parametrize("seed", range(6))
def test_decomposition_does_not_change_optimum(seed):
    inst = random_small_instance(100 + seed)
    model, _ = build_model(inst)
    a = solve_milp(model, NATIVE)
    b = solve_milp(model, SolverConfig(backend="native", decompose=False))
    assert a.status == b.status
    if a.ok:
        assert a.objective == pytest.approx(b.objective, rel=1e-9)


def test_config_validation_and_digest():
    with pytest.raises(ValueError):
        SolverConfig(gap=-1)
    with pytest.raises(ValueError):
        SolverConfig(backend="cplex")
    with pytest.raises(ValueError):
        SolverConfig(branching="random")
    assert SolverConfig().digest() == SolverConfig().digest()
    assert SolverConfig().digest() != SolverConfig(gap=1e-3).digest()


def test_bound_constrained_lp():
    from padplan.solver import solve_lp

    m = MilpModel()
    x = m.add_variable("x", cost=1.0)
    m.add_constraint({x: 1}, ">=", 3)
    m.add_constraint({x: 1}, "<=", 10)
    res = solve_lp(m)
    assert res.objective == pytest.approx(3.0) and res.values[x] == pytest.approx(3.0)


def test_continuous_model_matches_lp():
    from lp_cases import product_mix
    from padplan.solver import solve_lp

    assert solve_milp(product_mix(), NATIVE).objective == pytest.approx(solve_lp(product_mix()).objective)


@pytest.mark.parametrize("seed", range(10))
def test_relaxation_bounds_milp(seed):
    from padplan.solver import solve_lp

    model, _ = build_model(random_small_instance(seed))
    lp = solve_lp(model)
    ip = solve_milp(model, NATIVE)
    if ip.ok:
        assert lp.objective <= ip.objective + 1e-9
    elif lp.status == "optimal":
        assert ip.status == "infeasible"


def test_repeat_solves_are_identical():
    model, _ = build_model(random_small_instance(21))
    a = solve_milp(model, NATIVE)
    b = solve_milp(model, NATIVE)
    assert a.status == b.status and a.stats.nodes == b.stats.nodes
    if a.values is not None:
        np.testing.assert_array_equal(a.values, b.values)
