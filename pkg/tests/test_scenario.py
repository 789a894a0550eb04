import csv
import io

import numpy as np
import pytest

from padplan.network import dumps_instance
from padplan.scenario import (
    GeneratorSpec,
    SweepReport,
    default_capacities,
    generate_instance,
    random_small_instance,
    sweep_ma,
    sweep_solar,
)
from padplan.solver import SolverConfig


def test_generated_month(tmp_path):
    inst = generate_instance(GeneratorSpec(), horizon=720)
    assert inst.params.cc.shape == (10, 720)
    assert inst.params.cc.min() >= 0.06 and inst.params.cc.max() <= 0.12
    assert inst.seed == 2022


def test_generator_matches_bundled_file(table3):
    assert dumps_instance(generate_instance(GeneratorSpec(), 24)) == dumps_instance(table3)


def test_random_small_within_limits():
    for seed in range(50):
        inst = random_small_instance(seed)
        assert 1 <= inst.num_routes <= 3
        assert 1 <= inst.sites_per_route <= 2
        assert 1 <= inst.lengths <= 2
        assert 1 <= inst.horizon <= 3


def test_sweep_rows_in_input_order(table3_path):
    from padplan.network import load_instance

    inst = load_instance(table3_path, horizon=2)
    rep = sweep_ma(inst, [0.0, 0.3, 0.8], SolverConfig())
    assert [r.label for r in rep.rows] == ["MA=0", "MA=0.3", "MA=0.8"]
    zero, mid, top = rep.rows
    assert zero.status == "optimal" and zero.cost == 0.0 and sum(zero.pads) == 0
    assert mid.status == "optimal" and mid.cost > 0
    assert top.status == "infeasible" and top.cost is None
    with pytest.raises(ValueError, match="sorted"):
        sweep_ma(inst, [0.5, 0.3])


def test_sweep_csv_shape(table3_path):
    from padplan.network import load_instance

    inst = load_instance(table3_path, horizon=2)
    rep = sweep_ma(inst, [0.3, 0.8], SolverConfig())
    text = rep.to_csv()
    meta = [line for line in text.splitlines() if line.startswith("#")]
    assert any(line.startswith("# seed=2022") for line in meta)
    assert any(line.startswith("# horizon=2") for line in meta)
    assert any(line.startswith("# config_hash=") for line in meta)
    rows = list(csv.DictReader(io.StringIO("\n".join(l for l in text.splitlines() if not l.startswith("#")))))
    assert list(rows[0]) == ["label", "value", "status", "cost", "pads_small", "pads_medium",
                             "pads_large", "num_sites", "sites"]
    assert rows[1]["status"] == "infeasible" and rows[1]["cost"] == ""
    assert "MA=0.3" in rep.to_text()


def test_sweeps_parallel_equals_serial(table3_path):
    from padplan.network import load_instance

    inst = load_instance(table3_path, horizon=2)
    a = sweep_ma(inst, [0.2, 0.35, 0.45], SolverConfig(), workers=1)
    b = sweep_ma(inst, [0.2, 0.35, 0.45], SolverConfig(), workers=2)
    assert a.to_csv() == b.to_csv()


def test_solar_sweep_percentages(table3_path):
    from padplan.network import load_instance

    inst = load_instance(table3_path, horizon=2)
    rep = sweep_solar(inst, [0.0, 0.5, 1.0], None, None, SolverConfig(), ma=0.35)
    assert rep.rows[0].pct_decrease == 0.0
    costs = [r.cost for r in rep.rows]
    for r in rep.rows[1:]:
        assert r.pct_decrease == pytest.approx(100 * (costs[0] - r.cost) / costs[0])
    assert "pct_decrease" in rep.to_csv().splitlines()[len(rep.meta)]
    with pytest.raises(ValueError):
        sweep_solar(inst, [1.5], None, None, SolverConfig())


def test_non_binding_capacity_matches_plain_solve(table3_path):
    from padplan.network import load_instance

    inst = load_instance(table3_path, horizon=2)
    plain = sweep_ma(inst, [0.45], SolverConfig()).rows[0]
    capped = sweep_solar(inst, [0.0], 1.0, 0.0, SolverConfig(), ma=0.45).rows[0]
    assert capped.cost == pytest.approx(plain.cost, rel=1e-9)
    assert capped.pads == plain.pads


def test_default_capacities(table3):
    grid, solar = default_capacities(table3)
    assert grid == pytest.approx(0.9 * 0.12) and solar == pytest.approx(0.1 * 0.12)
