import json

import pytest

from skyoff.domain import (
    CachedItem,
    ScenarioParseError,
    UavNode,
    scenario_from_json,
    scenario_to_json,
    validate_scenario,
)
from helpers import worked_example, worked_example_doc


def test_parse_worked_example():
    sc = worked_example()
    assert [u.id for u in sc.uavs] == [1, 2]
    assert sc.uav(1).position == (0.0, 0.0, 100.0)
    assert sc.task(1).compute_cycles == 1e9
    assert sc.task(1).content_id == "a"
    assert sc.split_granularity == 4  # default fills in
    assert sc.reuse_ttl == 60.0


def test_defaults_fill_in():
    sc = worked_example()
    u = sc.uav(1)
    assert u.energy_budget == 1e4
    assert u.tx_power == 0.5
    assert u.velocity == (0.0, 0.0, 0.0)
    assert sc.d2d_setup_latency == 0.1


def test_lookups_raise_on_unknown_id():
    sc = worked_example()
    with pytest.raises(KeyError):
        sc.uav(99)
    with pytest.raises(KeyError):
        sc.task(99)
    with pytest.raises(KeyError):
        sc.user(99)


def test_missing_required_field_names_it():
    doc = worked_example_doc()
    del doc["uavs"][0]["cpu_rate"]
    with pytest.raises(ScenarioParseError) as exc:
        scenario_from_json(json.dumps(doc))
    assert "cpu_rate" in str(exc.value)
    assert "uavs[0]" in str(exc.value)


def test_unknown_field_rejected():
    doc = worked_example_doc()
    doc["uavs"][0]["thrust"] = 1.0
    with pytest.raises(ScenarioParseError) as exc:
        scenario_from_json(json.dumps(doc))
    assert "thrust" in str(exc.value)


def test_zero_cpu_rate_locator():
    doc = worked_example_doc()
    doc["uavs"][0]["cpu_rate"] = 0
    with pytest.raises(ValueError) as exc:
        scenario_from_json(json.dumps(doc))
    assert "uavs[0].cpu_rate: must be > 0" in str(exc.value)


def test_validate_reports_multiple_violations():
    sc = worked_example()
    sc.uav(1).cpu_rate = -1.0
    sc.task(1).input_bits = -5.0
    msgs = validate_scenario(sc)
    assert any("uavs[0].cpu_rate" in m for m in msgs)
    assert any("input_bits" in m for m in msgs)


def test_duplicate_ids_rejected():
    doc = worked_example_doc()
    doc["uavs"].append(dict(doc["uavs"][0]))
    with pytest.raises(ValueError):
        scenario_from_json(json.dumps(doc))


def test_content_id_integer_coerced():
    doc = worked_example_doc()
    doc["tasks"][0]["content_id"] = 7
    sc = scenario_from_json(json.dumps(doc))
    assert sc.task(1).content_id == "7"


def test_bad_json_reports_line():
    with pytest.raises(ScenarioParseError):
        scenario_from_json("{not json")


def test_roundtrip_preserves_config():
    sc = worked_example()
    text = scenario_to_json(sc)
    again = scenario_from_json(text)
    assert scenario_to_json(again) == text


def test_roundtrip_drops_runtime_state():
    sc = worked_example()
    sc.uav(1).energy_spent = 3.0
    sc.uav(1).cache_contents.append(CachedItem("x", 100.0, 10.0))
    text = scenario_to_json(sc)
    again = scenario_from_json(text)
    assert again.uav(1).energy_spent == 0.0
    assert again.uav(1).cache_contents == []


def test_deadline_optional_roundtrip():
    doc = worked_example_doc()
    doc["tasks"][0]["deadline"] = 9.5
    sc = scenario_from_json(json.dumps(doc))
    assert sc.task(1).deadline == 9.5
    assert '"deadline": 9.5' in scenario_to_json(sc)
    del doc["tasks"][0]["deadline"]
    sc2 = scenario_from_json(json.dumps(doc))
    assert sc2.task(1).deadline is None
    assert "deadline" not in scenario_to_json(sc2)


def test_cached_bits_and_live_entry():
    u = UavNode(
        id=1,
        position=(0.0, 0.0, 100.0),
        velocity=(0.0, 0.0, 0.0),
        cpu_rate=1e9,
    )
    u.cache_contents.append(CachedItem("a", 1e6, expiry_time=50.0))
    u.cache_contents.append(CachedItem("b", 2e6, expiry_time=10.0))
    assert u.cached_bits() == 3e6
    assert u.live_cache_entry("a", at=49.0) is not None
    assert u.live_cache_entry("b", at=20.0) is None
    assert u.live_cache_entry("missing", at=0.0) is None


def test_cache_overflow_is_invalid():
    sc = worked_example()
    u = sc.uav(1)
    u.cache_capacity = 1e6
    u.cache_contents.append(CachedItem("a", 2e6, expiry_time=1e9))
    msgs = validate_scenario(sc)
    assert any("cache" in m for m in msgs)
