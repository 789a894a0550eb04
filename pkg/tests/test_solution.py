import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from padplan.chargeflow import PadAssignment
from padplan.solution import (
    SolutionError,
    SolutionRecord,
    dumps_solution,
    load_solution,
    rle_decode,
    rle_encode,
    save_solution,
)


@given(st.lists(st.integers(0, 1), max_size=60))
def test_rle_round_trip(bits):
    assert rle_decode(rle_encode(bits)) == bits


def test_rle_format():
    assert rle_encode([1, 1, 0, 1]) == "1*2 0*1 1*1"
    for bad in ("2*3", "1*0", "x", "1*"):
        with pytest.raises(SolutionError):
            rle_decode(bad)


def test_file_round_trip(tmp_path, table3_short):
    a = PadAssignment.from_sites(
        table3_short, [("1->3", 0, 2), ("4->5", 2, 0)], p=np.array([[1, 0]] * 10)
    )
    rec = SolutionRecord("optimal", 123.5, a, {"config_hash": "abc", "ma": 0.4})
    path = tmp_path / "s.toml"
    save_solution(path, table3_short, rec)
    back = load_solution(path, table3_short)
    assert back.status == "optimal" and back.objective == 123.5
    assert back.assignment == a
    assert back.provenance["config_hash"] == "abc"
    assert "1->3" in path.read_text() and '"1*1 0*1"' in path.read_text()


def test_infeasible_record_has_no_assignment(tmp_path, table3_short):
    path = tmp_path / "s.toml"
    save_solution(path, table3_short, SolutionRecord("infeasible", None, None))
    back = load_solution(path, table3_short)
    assert back.status == "infeasible" and back.assignment is None and back.objective is None


def test_mismatched_horizon_rejected(tmp_path, table3_short, table3):
    path = tmp_path / "s.toml"
    save_solution(path, table3_short, SolutionRecord("optimal", 1.0, PadAssignment.empty(table3_short)))
    with pytest.raises(SolutionError, match="periods"):
        load_solution(path, table3)


def test_unknown_route_rejected(tmp_path, table3_short):
    text = dumps_solution(table3_short, SolutionRecord("optimal", 1.0, PadAssignment.empty(table3_short)))
    path = tmp_path / "s.toml"
    path.write_text(text.replace('"1->2"', '"9->9"'))
    with pytest.raises(SolutionError, match="route"):
        load_solution(path, table3_short)
