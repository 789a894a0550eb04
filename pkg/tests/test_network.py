import numpy as np
import pytest

from padplan.network import (
    InstanceError,
    Route,
    derive_weights,
    dumps_instance,
    instance_from_dict,
    load_instance,
    save_instance,
    topology_report,
)
from padplan.scenario import GeneratorSpec, generate_instance


def _doc(**over):
    doc = {
        "schema": 1,
        "name": "tiny",
        "horizon": 2,
        "sites_per_route": 1,
        "lengths": 2,
        "ma": 0.3,
        "nodes": ["a", "b", "c"],
        "routes": ["a->b", "b->c"],
        "params": {
            "cc": 0.05,
            "wo": 1.0,
            "uo": 0.5,
            "wc": [[0.04, 0.08]],
            "ccv": 1.0,
            "ccf": 2.0,
            "ccc": 100.0,
            "w": {"a->b": 2.0, "b->c": 3.0},
        },
    }
    doc.update(over)
    return doc


def test_table3_shape(table3):
    assert len(table3.nodes) == 8
    assert table3.num_routes == 10
    assert (table3.sites_per_route, table3.lengths, table3.horizon) == (3, 3, 24)
    assert table3.seed == 2022
    assert table3.params.ma == pytest.approx(0.4)


def test_table3_draws_in_range(table3):
    p = table3.params
    assert p.cc.min() >= 0.06 and p.cc.max() <= 0.12
    assert p.ccv.min() >= 10 and p.ccv.max() <= 14
    assert p.ccf.min() >= 100 and p.ccf.max() <= 110
    assert np.all(p.ccc == 10000.0)
    np.testing.assert_allclose(p.wc[0, 0, :, 0], [0.04, 0.08, 0.12])


def test_month_horizon_extends_day(table3_path, table3):
    month = load_instance(table3_path, horizon=720)
    assert month.params.cc.shape == (10, 720)
    # period-major draws: the first day is unchanged by a longer horizon
    np.testing.assert_array_equal(month.params.cc[:, :24], table3.params.cc)


def test_route_key_round_trip():
    r = Route.parse(" 3 -> 7 ")
    assert r == Route("3", "7") and r.key == "3->7"
    with pytest.raises(InstanceError):
        Route.parse("3-7")
    with pytest.raises(InstanceError):
        Route("1", "1")


@pytest.mark.parametrize(
    "change, where",
    [
        ({"routes": ["a->b", "a->b"]}, "routes"),
        ({"routes": ["a->z"]}, "routes"),
        ({"ma": 1.5}, "ma"),
        ({"horizon": 0}, "horizon"),
        ({"schema": 9}, "schema"),
    ],
)
def test_bad_documents_rejected(change, where):
    doc = _doc(**change)
    doc["params"]["w"] = 1.0
    with pytest.raises(InstanceError) as info:
        instance_from_dict(doc)
    assert where in str(info.value)


def test_bad_parameter_values():
    doc = _doc()
    doc["params"]["cc"] = 1.5
    with pytest.raises(InstanceError, match="cc"):
        instance_from_dict(doc)
    doc = _doc()
    doc["params"]["ccv"] = -1.0
    with pytest.raises(InstanceError, match="ccv"):
        instance_from_dict(doc)
    doc = _doc()
    doc["params"]["bogus"] = 1.0
    with pytest.raises(InstanceError, match="bogus"):
        instance_from_dict(doc)


def test_per_route_tables_and_defaults():
    doc = _doc()
    doc["params"]["cc"] = {"default": 0.05, "b->c": [0.07, 0.09]}
    inst = instance_from_dict(doc)
    np.testing.assert_allclose(inst.params.cc, [[0.05, 0.05], [0.07, 0.09]])


def test_save_load_round_trip(tmp_path, table3_short):
    path = tmp_path / "inst.toml"
    save_instance(table3_short, path)
    again = load_instance(path)
    assert again == table3_short
    assert dumps_instance(again) == dumps_instance(table3_short)


def test_weights_are_raw_traffic():
    doc = _doc()
    del doc["params"]["w"]
    doc["params"]["ahd"] = {"a->b": 0.5, "b->c": 0.25}
    inst = derive_weights(instance_from_dict(doc))
    # used unscaled: the inflow average divides by the weight sum anyway
    np.testing.assert_allclose(inst.params.w[:, 0], [0.5, 0.25])


def test_topology(table3):
    rep = topology_report(table3)
    assert rep.acyclic
    assert rep.order[0] == "1" and rep.order[-1] == "8"
    assert rep.sources == ("1",)
    assert rep == topology_report(table3)
    cyc = instance_from_dict(_doc(routes=["a->b", "b->a"], params={**_doc()["params"], "w": 1.0}))
    rep = topology_report(cyc)
    assert not rep.acyclic and rep.order is None
    assert rep.cycles == (("a", "b"),)


def test_single_node_topology():
    doc = _doc(nodes=["1"], routes=[])
    doc["params"] = {k: v for k, v in doc["params"].items() if k != "w"}
    rep = topology_report(instance_from_dict(doc))
    assert rep.order == ("1",) and rep.sources == ("1",)


def test_missing_efficiency_defaults_to_one(table3):
    assert np.all(table3.params.we == 1.0)


def test_generator_determinism():
    a = generate_instance(GeneratorSpec(seed=5), horizon=3)
    b = generate_instance(GeneratorSpec(seed=5), horizon=3)
    c = generate_instance(GeneratorSpec(seed=6), horizon=3)
    assert dumps_instance(a) == dumps_instance(b)
    assert dumps_instance(a) != dumps_instance(c)
    assert a.seed == 5


def test_generator_rejects_reversed_bounds():
    with pytest.raises(ValueError):
        GeneratorSpec(cc=(0.2, 0.1))
