import json

import httpx
import pytest

from airtwin.bench import (AdversarialStubProvider, BenchSpec, GridScenario,
                           GridScenarioError, HttpProvider, OracleStubProvider,
                           aircraft_on_route, count_interactions, count_route_intersections,
                           default_sweep, generate_sector, parse_response, place_aircraft,
                           provider_from_name, render_prompt, run_benchmark, run_task,
                           scenario_from_json, scenario_to_json, sector_document,
                           sensitivity_suite, solvable, verify)


def two_route_cross(width=9, height=9):
    """A horizontal and a vertical route crossing at (4, 4)."""
    horizontal = tuple((x, 4) for x in range(width))
    vertical = tuple((4, y) for y in range(height))
    return (horizontal, vertical)


def make_scenario(routes, entries, duration=12):
    aircraft = tuple(
        aircraft_on_route(duration, routes[ri], f"AC{i+1}", ri, e)
        for i, (ri, e) in enumerate(entries)
    )
    width = max(x for r in routes for x, _ in r) + 1
    height = max(y for r in routes for _, y in r) + 1
    return GridScenario(width, height, duration, tuple(routes), aircraft)


def test_far_apart_aircraft_never_interact():
    routes = two_route_cross()
    g = make_scenario(routes, [(0, 0), (1, 8)])  # arrive at the cross far apart
    n, episodes = count_interactions(g)
    assert n == 0 and episodes == []


def test_adjacent_episode_counted_once():
    # two aircraft in trail, one cell apart for several steps: one episode
    route = tuple((x, 2) for x in range(10))
    g = make_scenario((route,), [(0, 0), (0, 1)], duration=6)
    n, episodes = count_interactions(g)
    assert n == 1
    a, b, start, end = episodes[0]
    assert {a, b} == {"AC1", "AC2"}
    assert start == 1 and end == 5


def brute_force_interactions(g: GridScenario):
    """Per-step pair enumeration with independent episode bookkeeping."""
    episodes = 0
    for i in range(len(g.aircraft)):
        for j in range(i + 1, len(g.aircraft)):
            prev = False
            for step in range(g.duration):
                pa = g.aircraft[i].position_at(step)
                pb = g.aircraft[j].position_at(step)
                near = (pa is not None and pb is not None
                        and abs(pa[0] - pb[0]) <= 1 and abs(pa[1] - pb[1]) <= 1)
                if near and not prev:
                    episodes += 1
                prev = near
    return episodes


def test_interactions_match_enumeration_oracle(rng):
    for trial in range(10):
        n_routes = int(rng.integers(2, 7))
        max_cross = (n_routes // 2) * ((n_routes + 1) // 2)
        routes = generate_sector(n_routes, int(rng.integers(0, max_cross + 1)),
                                 seed=trial)
        entries = [(int(rng.integers(0, len(routes))), int(rng.integers(0, 12)))
                   for _ in range(int(rng.integers(2, 9)))]
        g = make_scenario(routes, entries)
        assert count_interactions(g)[0] == brute_force_interactions(g)


def test_interactions_symmetric_and_translation_invariant():
    routes = two_route_cross()
    g = make_scenario(routes, [(0, 2), (1, 3)])
    n1, _ = count_interactions(g)
    shifted_routes = tuple(tuple((x + 3, y + 2) for x, y in r) for r in routes)
    g2 = GridScenario(g.width + 3, g.height + 2, g.duration, shifted_routes,
                      tuple(aircraft_on_route(g.duration, shifted_routes[a.route_index],
                                              a.id, a.route_index, a.entry_step)
                            for a in g.aircraft))
    assert count_interactions(g2)[0] == n1
    g3 = make_scenario(routes, [(1, 3), (0, 2)])  # swapped aircraft order
    assert count_interactions(g3)[0] == n1


def test_verify_passing_scenario():
    routes = two_route_cross()
    g = make_scenario(routes, [(0, 0), (1, 8)])
    spec = BenchSpec(2, 12, 2, 1, 0)
    assert verify(g, spec).passed


def test_verify_diagnostics_name_each_deviation():
    routes = two_route_cross()
    g = make_scenario(routes, [(0, 2), (1, 3)])  # these two interact
    spec = BenchSpec(2, 12, 2, 1, 0)
    result = verify(g, spec)
    assert not result.passed
    assert any(d.startswith("interactions: expected 0, found 1") for d in result.diagnostics)
    assert any("pair AC1,AC2 at step" in d for d in result.diagnostics)


def test_verify_eight_aircraft_paper_shape():
    spec = BenchSpec(8, 12, 7, 7, 0)
    status, witness = solvable(spec, seed=2)
    assert status == "solvable"
    assert verify(witness, spec).passed
    assert count_interactions(witness)[0] == 0


def test_route_intersections_per_pair():
    routes = two_route_cross()
    g = make_scenario(routes, [(0, 0)])
    assert count_route_intersections(g) == 1
    # triple-shared cell counts once per route pair
    third = tuple((4, y) for y in range(9))  # duplicate of the vertical
    g2 = GridScenario(9, 9, 12, routes + (third,),
                      (aircraft_on_route(12, routes[0], "AC1", 0, 0),))
    assert count_route_intersections(g2) == 3


def test_solvable_one_aircraft_trivial():
    status, witness = solvable(BenchSpec(1, 6, 1, 0, 0), seed=0)
    assert status == "solvable"
    assert len(witness.aircraft) == 1


def test_solvable_interacting_pair_witnessed():
    spec = BenchSpec(2, 12, 2, 1, 1)
    status, witness = solvable(spec, seed=3)
    assert status == "solvable"
    n, episodes = count_interactions(witness)
    assert n == 1 and len(episodes) == 1


def test_unsolvable_by_pigeonhole():
    status, witness = solvable(BenchSpec(5, 2, 2, 0, 0), seed=0)
    assert status == "unsolvable"
    assert witness is None


def test_budget_exhaustion_reported_as_unknown():
    spec = BenchSpec(28, 12, 7, 7, 0)
    status, _ = solvable(spec, seed=1, node_budget=5)
    assert status == "unknown"


def test_grid_scenario_validation():
    route = tuple((x, 0) for x in range(5))
    with pytest.raises(GridScenarioError, match="entry step"):
        make_scenario((route,), [(0, 99)])
    with pytest.raises(GridScenarioError, match="route index"):
        from airtwin.bench import AircraftTrack
        GridScenario(5, 5, 5, (route,),
                     (AircraftTrack("AC1", 4, 0, (route[0],)),))
    with pytest.raises(GridScenarioError, match="one cell per step"):
        GridScenario(5, 5, 5, (((0, 0), (3, 3)),), ())


def test_wire_format_round_trip():
    routes = two_route_cross()
    g = make_scenario(routes, [(0, 0), (1, 8)])
    back = scenario_from_json(scenario_to_json(g))
    assert back == g


def test_parse_response_rejects_sloppy_output():
    with pytest.raises(GridScenarioError, match="exactly one fenced"):
        parse_response("here you go: {\"width\": 3}")
    with pytest.raises(GridScenarioError, match="exactly one fenced"):
        parse_response("```grid-scenario\n{}\n```\n```grid-scenario\n{}\n```")
    with pytest.raises(GridScenarioError):
        parse_response("```grid-scenario\nnot json\n```")


def test_oracle_stub_closes_the_loop():
    spec = BenchSpec(4, 12, 3, 2, 0)
    routes = generate_sector(3, 2, seed=9)
    doc = sector_document(routes, max(x for r in routes for x, _ in r) + 1,
                          max(y for r in routes for _, y in r) + 1)
    passed, passed_first, result, transcript = run_task(OracleStubProvider(), doc, spec)
    assert passed and passed_first
    assert transcript.feedback_rounds == 0


def test_adversarial_stub_needs_feedback():
    res = run_benchmark(AdversarialStubProvider(),
                        {"parameter": "n_aircraft", "values": [3],
                         "fixed": {"duration": 12, "n_routes": 3, "n_intersections": 2,
                                   "n_interactions": 0}},
                        n_sectors=3, max_feedback=1, seed=5)
    assert res.overall_pass_rate(with_feedback=True) == 1.0
    assert res.overall_pass_rate(with_feedback=False) == 0.0
    assert all(t.feedback_rounds == 1 for t in res.tasks)


def test_run_benchmark_deterministic_given_seed():
    sweep = {"parameter": "n_aircraft", "values": [2, 5],
             "fixed": {"duration": 12, "n_routes": 4, "n_intersections": 3,
                       "n_interactions": 0}}
    r1 = run_benchmark(OracleStubProvider(seed=1), sweep, n_sectors=2, seed=9)
    r2 = run_benchmark(OracleStubProvider(seed=1), sweep, n_sectors=2, seed=9)
    assert r1.rows() == r2.rows()
    assert [t.transcript.responses for t in r1.tasks] == \
        [t.transcript.responses for t in r2.tasks]


def test_default_sweep_is_paper_shaped():
    sweep = default_sweep()
    assert sweep["parameter"] == "n_aircraft"
    assert sweep["values"] == list(range(2, 31))
    assert sweep["fixed"] == {"duration": 12, "n_routes": 7, "n_intersections": 7,
                              "n_interactions": 0}


def test_sensitivity_suite_covers_templates():
    rates = sensitivity_suite(OracleStubProvider(), BenchSpec(4, 12, 4, 3, 0),
                              n_sectors=2, seed=3)
    assert set(rates) == {"default", "terse", "radio"}
    assert all(v == 1.0 for v in rates.values())


def test_http_provider_via_mock_transport():
    oracle = OracleStubProvider()

    def handler(request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content)
        return httpx.Response(200, json={"text": oracle.complete(body["messages"])})

    provider = HttpProvider("http://bench.local/v1/complete",
                            transport=httpx.MockTransport(handler))
    spec = BenchSpec(3, 12, 3, 2, 0)
    routes = generate_sector(3, 2, seed=4)
    doc = sector_document(routes, max(x for r in routes for x, _ in r) + 1,
                          max(y for r in routes for _, y in r) + 1)
    passed, _, _, _ = run_task(provider, doc, spec)
    assert passed


def test_http_provider_transport_error_is_failure():
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(500)

    provider = HttpProvider("http://bench.local/v1/complete", retries=1,
                            transport=httpx.MockTransport(handler))
    spec = BenchSpec(2, 12, 2, 1, 0)
    routes = generate_sector(2, 1, seed=4)
    doc = sector_document(routes, 12, 12)
    passed, _, result, transcript = run_task(provider, doc, spec)
    assert not passed
    assert any("provider error" in d for d in result.diagnostics)
    assert "<provider error" in transcript.responses[-1]


def test_provider_from_name():
    assert isinstance(provider_from_name("stub-oracle"), OracleStubProvider)
    assert isinstance(provider_from_name("stub-adversarial"), AdversarialStubProvider)
    with pytest.raises(Exception):
        provider_from_name("no-such-provider")


def test_prompt_contains_contract_and_blocks():
    spec = BenchSpec(4, 12, 3, 2, 0)
    routes = generate_sector(3, 2, seed=1)
    prompt = render_prompt(sector_document(routes, 12, 12), spec)
    assert "```sector" in prompt and "```spec" in prompt
    assert "grid-scenario" in prompt
    assert "20 NMI" in prompt
