import numpy as np
import pytest

from oracles import random_model
from padplan.formulation import build_model
from padplan.model import MilpModel
from padplan.modelio import MpsError, export_model, read_mps, write_lp, write_mps
from padplan.scenario import random_small_instance
from padplan.solver import SolverConfig, solve_milp

NATIVE = SolverConfig(backend="native")


def _same_model(a: MilpModel, b: MilpModel):
    A1, s1, r1, c1, lo1, hi1, i1 = a.arrays()
    A2, s2, r2, c2, lo2, hi2, i2 = b.arrays()
    assert (A1 != A2).nnz == 0
    assert list(s1) == list(s2)
    np.testing.assert_array_equal(r1, r2)
    np.testing.assert_array_equal(c1, c2)
    np.testing.assert_array_equal(lo1, lo2)
    np.testing.assert_array_equal(hi1, hi2)
    np.testing.assert_array_equal(i1, i2)


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("fixed", [False, True])
def test_round_trip_is_exact(seed, fixed):
    model = random_model(seed)
    again = read_mps("mem", text=write_mps(model, fixed=fixed))
    _same_model(model, again)
    if not fixed:
        assert again.var_names == model.var_names
        assert again.row_names == model.row_names


@pytest.mark.parametrize("seed", range(10))
def test_round_trip_resolves_identically(seed):
    model = random_model(seed)
    again = read_mps("mem", text=write_mps(model))
    a, b = solve_milp(model, NATIVE), solve_milp(again, NATIVE)
    assert a.status == b.status
    if a.ok:
        assert abs(a.objective - b.objective) <= 1e-9


def test_planning_model_round_trip(tmp_path):
    model, _ = build_model(random_small_instance(4))
    path = tmp_path / "m.mps"
    export_model(model, "mps", path)
    _same_model(model, read_mps(path))


def test_hand_written_mps():
    text = """NAME          tiny
OBJSENSE
    MAX
ROWS
 N  obj
 L  c1
 G  c2
COLUMNS
    MARKER    'MARKER'    'INTORG'
    x    obj    1    c1    1
    MARKER    'MARKER'    'INTEND'
    y    obj    2    c1    1
    y    c2    1
RHS
    RHS    c1    4    c2    1
BOUNDS
 UP BND x 3
 MI BND y
 UP BND y 2
ENDATA
"""
    m = read_mps("mem", text=text)
    assert m.integer == [True, False]
    assert m.cost == [-1.0, -2.0]  # maximisation stored as a minimisation
    assert m.lower == [0.0, -np.inf] and m.upper == [3.0, 2.0]
    res = solve_milp(m, NATIVE)
    assert res.objective == pytest.approx(-6.0)


def test_ranges_rejected():
    text = "NAME t\nROWS\n N obj\n L c\nCOLUMNS\n x c 1\nRHS\n R c 1\nRANGES\n R c 2\nENDATA\n"
    with pytest.raises(MpsError, match="RANGES"):
        read_mps("mem", text=text)


def test_lp_text_sections():
    model = random_model(2)
    text = write_lp(model)
    for head in ("Minimize", "Subject To", "Bounds", "End"):
        assert head in text
    assert export_model(model, "lp") == text
    with pytest.raises(ValueError):
        export_model(model, "xml")
