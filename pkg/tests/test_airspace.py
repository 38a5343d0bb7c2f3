import json
import math

import numpy as np
import pytest

from airtwin import airspace as asp
from helpers import minimal_scenario_doc


def test_minimal_document_loads_empty_scenario():
    sc = asp.scenario_from_document(minimal_scenario_doc())
    assert len(sc.flights) == 0
    assert len(sc.airspace.fixes) == 1
    assert "S1" in sc.airspace.sectors


def test_clearance_for_unknown_callsign_is_reference_error():
    doc = minimal_scenario_doc()
    doc["clearances"] = [{"id": "c1", "callsign": "GHOST", "issue_time": 12,
                          "kind": "level", "value": 300}]
    with pytest.raises(asp.ScenarioReferenceError, match="GHOST"):
        asp.scenario_from_document(doc)


def test_unknown_clearance_kind_is_typed_error():
    doc = minimal_scenario_doc()
    doc["flights"] = [{"callsign": "T1", "aircraft_type": "B738L",
                       "route": ["ONLY1", "ONLY1"], "requested_fl": 300, "entry_time": 0}]
    doc["clearances"] = [{"id": "c1", "callsign": "T1", "issue_time": 12,
                          "kind": "hold", "value": 1}]
    with pytest.raises(asp.ScenarioInvariantError, match="unsupported kind"):
        asp.scenario_from_document(doc)


def test_golden_fixture_loads_with_twelve_flights(golden_scenario):
    assert len(golden_scenario.flights) == 12
    for blips in golden_scenario.radar.values():
        assert all(b.time % golden_scenario.blip_seconds == 0 for b in blips)
    assert not golden_scenario.gap_log


def test_golden_fixture_passes_independent_schema_checker(golden_doc):
    jsonschema = pytest.importorskip("jsonschema")
    from conftest import DOCS
    schema = json.loads((DOCS / "scenario-schema.json").read_text())
    jsonschema.validate(golden_doc, schema)


def test_round_trip_is_byte_identical(golden_path, tmp_path):
    sc = asp.load_scenario(golden_path)
    p1 = tmp_path / "a.json"
    asp.save_scenario(sc, p1)
    p2 = tmp_path / "b.json"
    asp.save_scenario(asp.load_scenario(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_blip_off_grid_rejected():
    doc = minimal_scenario_doc()
    doc["flights"] = [{"callsign": "T1", "aircraft_type": "B738L",
                       "route": ["ONLY1", "ONLY1"], "requested_fl": 300, "entry_time": 0}]
    doc["radar"] = {"T1": [{"time": 5, "lat": 51.0, "lon": 0.5, "fl": 300,
                            "ground_speed": 450, "ground_track": 90}]}
    with pytest.raises(asp.ScenarioInvariantError, match="not on the 6 s grid"):
        asp.scenario_from_document(doc)


def test_documented_gap_recorded_on_load():
    doc = minimal_scenario_doc()
    doc["flights"] = [{"callsign": "T1", "aircraft_type": "B738L",
                       "route": ["ONLY1", "ONLY1"], "requested_fl": 300, "entry_time": 0}]
    doc["radar"] = {"T1": [
        {"time": 0, "lat": 51.0, "lon": 0.5, "fl": 300, "ground_speed": 450, "ground_track": 90},
        {"time": 18, "lat": 51.0, "lon": 0.52, "fl": 300, "ground_speed": 450, "ground_track": 90},
    ]}
    sc = asp.scenario_from_document(doc)
    assert sc.gap_log == (("T1", 0, 18),)


def test_issue_time_snaps_to_grid():
    doc = minimal_scenario_doc()
    doc["flights"] = [{"callsign": "T1", "aircraft_type": "B738L",
                       "route": ["ONLY1", "ONLY1"], "requested_fl": 300, "entry_time": 0}]
    doc["clearances"] = [
        {"id": "c1", "callsign": "T1", "issue_time": 61, "kind": "level", "value": 300},
        {"id": "c2", "callsign": "T1", "issue_time": 63, "kind": "level", "value": 310},
    ]
    sc = asp.scenario_from_document(doc)
    assert [c.issue_time for c in sc.clearances] == [60, 66]


def test_sector_invariants():
    with pytest.raises(asp.ScenarioInvariantError, match="self-intersecting"):
        asp.Sector("X", ((0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)), 195, 460)
    with pytest.raises(asp.ScenarioInvariantError, match="floor"):
        asp.Sector("X", ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0)), 400, 300)
    with pytest.raises(asp.ScenarioInvariantError, match="en-route"):
        asp.Sector("X", ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0)), 100, 460)
    # non-en-route sectors may span lower levels
    asp.Sector("Y", ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0)), 100, 460, en_route=False)


def test_fix_invariants():
    with pytest.raises(asp.ScenarioInvariantError):
        asp.Fix("", 0.0, 0.0)
    with pytest.raises(asp.ScenarioInvariantError):
        asp.Fix("A", 95.0, 0.0)
    with pytest.raises(asp.ScenarioInvariantError):
        asp.Fix("A", 0.0, 180.0)


def _square_sector():
    return asp.Sector("SQ", ((52.0, 0.0), (52.0, 1.0), (51.0, 1.0), (51.0, 0.0)), 195, 460)


def test_point_in_sector_basics():
    s = _square_sector()
    assert asp.point_in_sector((51.5, 0.5, 300.0), s)
    assert not asp.point_in_sector((51.5, 0.5, 194.0), s)  # floor - 1
    assert asp.point_in_sector((52.0, 0.5, 195.0), s)  # boundary inclusive
    assert not asp.point_in_sector((52.5, 0.5, 300.0), s)


def winding_number_inside(x, y, verts, eps=1e-12):
    """Angle-summation winding oracle; boundary treated as inside."""
    total = 0.0
    n = len(verts)
    for i in range(n):
        ax, ay = verts[i][0] - x, verts[i][1] - y
        bx, by = verts[(i + 1) % n][0] - x, verts[(i + 1) % n][1] - y
        cross = ax * by - ay * bx
        dot = ax * bx + ay * by
        if abs(cross) < eps and dot <= eps:
            return True  # on the edge
        total += math.atan2(cross, dot)
    return abs(total) > math.pi


def test_point_in_sector_against_winding_oracle():
    s = asp.Sector("PENT", ((52.2, -0.4), (52.3, 1.2), (51.4, 1.8), (50.8, 0.9),
                            (51.0, -0.2)), 195, 460)
    verts = [(lon, lat) for lat, lon in s.boundary]
    rng = np.random.default_rng(3)
    agree = 0
    for _ in range(1000):
        lat = rng.uniform(50.5, 52.6)
        lon = rng.uniform(-0.8, 2.2)
        got = asp.point_in_sector((lat, lon, 300.0), s)
        want = winding_number_inside(lon, lat, verts)
        assert got == want
        agree += 1
    assert agree == 1000
