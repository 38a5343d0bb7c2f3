"""Grid-world synthetic scenarios and their automated verification.

Scenarios live on a coarse cell grid (one cell = 20 NMI). Aircraft enter
at a route's first cell and advance exactly one cell per time step. An
interaction is an episode during which two aircraft occupy the same or
8-neighbouring cells at the same step; verification compares aircraft
count, duration, route count, route-pair intersections and interaction
count against the requested parameters.
"""

import json
from dataclasses import dataclass

GRID_CELL_NM = 20.0

SCENARIO_BLOCK = "grid-scenario"


class GridScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class AircraftTrack:
    id: str
    route_index: int
    entry_step: int
    positions: tuple[tuple[int, int], ...]  # cells from entry_step onwards

    def position_at(self, step: int):
        k = step - self.entry_step
        if 0 <= k < len(self.positions):
            return self.positions[k]
        return None


@dataclass(frozen=True)
class GridScenario:
    width: int
    height: int
    duration: int
    routes: tuple[tuple[tuple[int, int], ...], ...]
    aircraft: tuple[AircraftTrack, ...]

    def __post_init__(self):
        if self.duration < 1:
            raise GridScenarioError("duration must be >= 1")
        if self.width < 1 or self.height < 1:
            raise GridScenarioError("grid dimensions must be positive")
        for ri, route in enumerate(self.routes):
            if len(route) < 2:
                raise GridScenarioError(f"route {ri} shorter than 2 cells")
            for x, y in route:
                if not (0 <= x < self.width and 0 <= y < self.height):
                    raise GridScenarioError(f"route {ri} cell ({x},{y}) off the grid")
            for (ax, ay), (bx, by) in zip(route, route[1:]):
                if max(abs(ax - bx), abs(ay - by)) != 1:
                    raise GridScenarioError(f"route {ri} does not advance one cell per step")
        seen = set()
        for ac in self.aircraft:
            if ac.id in seen:
                raise GridScenarioError(f"duplicate aircraft id {ac.id!r}")
            seen.add(ac.id)
            if not 0 <= ac.route_index < len(self.routes):
                raise GridScenarioError(f"aircraft {ac.id}: route index {ac.route_index} unknown")
            if not 0 <= ac.entry_step < self.duration:
                raise GridScenarioError(f"aircraft {ac.id}: entry step {ac.entry_step} outside scenario")
            route = self.routes[ac.route_index]
            if not ac.positions:
                raise GridScenarioError(f"aircraft {ac.id}: no positions")
            if ac.positions != route[: len(ac.positions)]:
                raise GridScenarioError(
                    f"aircraft {ac.id}: positions do not follow route {ac.route_index} "
                    "one cell per step from its start"
                )


def aircraft_on_route(scenario_duration: int, route, ac_id: str, route_index: int,
                      entry_step: int) -> AircraftTrack:
    """Track for an aircraft entering a route at a step; positions are the
    route prefix that fits into the scenario."""
    n = min(len(route), max(0, scenario_duration - entry_step))
    return AircraftTrack(ac_id, route_index, entry_step, tuple(route[:n]))


def adjacent(a: tuple[int, int], b: tuple[int, int]) -> bool:
    """Same or 8-neighbouring cells (Chebyshev distance <= 1)."""
    return max(abs(a[0] - b[0]), abs(a[1] - b[1])) <= 1


def count_interactions(g: GridScenario) -> tuple[int, list[tuple[str, str, int, int]]]:
    """Interaction episodes: (id_a, id_b, first_step, last_step) per episode.

    A pair in continuous adjacency over several steps counts once.
    """
    episodes = []
    n = len(g.aircraft)
    for i in range(n):
        for j in range(i + 1, n):
            a, b = g.aircraft[i], g.aircraft[j]
            in_episode = False
            start = 0
            for step in range(g.duration):
                pa, pb = a.position_at(step), b.position_at(step)
                near = pa is not None and pb is not None and adjacent(pa, pb)
                if near and not in_episode:
                    in_episode = True
                    start = step
                elif not near and in_episode:
                    episodes.append((a.id, b.id, start, step - 1))
                    in_episode = False
            if in_episode:
                episodes.append((a.id, b.id, start, g.duration - 1))
    return len(episodes), episodes


def count_route_intersections(g: GridScenario) -> int:
    """Unordered route pairs sharing at least one cell (a triple-shared
    cell therefore counts once per pair it joins)."""
    sets = [set(r) for r in g.routes]
    count = 0
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            if sets[i] & sets[j]:
                count += 1
    return count


@dataclass(frozen=True)
class BenchSpec:
    """Prompt parameters a generated scenario must satisfy."""

    n_aircraft: int
    duration: int
    n_routes: int
    n_intersections: int
    n_interactions: int = 0

    def __post_init__(self):
        for name in ("n_aircraft", "duration", "n_routes", "n_intersections", "n_interactions"):
            if getattr(self, name) < 0:
                raise GridScenarioError(f"{name} must be >= 0")
        if self.n_aircraft >= 1 and self.duration < 1:
            raise GridScenarioError("non-empty scenarios need duration >= 1")

    def to_dict(self) -> dict:
        return {"n_aircraft": self.n_aircraft, "duration": self.duration,
                "n_routes": self.n_routes, "n_intersections": self.n_intersections,
                "n_interactions": self.n_interactions}

    @classmethod
    def from_dict(cls, d: dict) -> "BenchSpec":
        return cls(int(d["n_aircraft"]), int(d["duration"]), int(d["n_routes"]),
                   int(d["n_intersections"]), int(d.get("n_interactions", 0)))


@dataclass(frozen=True)
class VerifyResult:
    passed: bool
    diagnostics: tuple[str, ...] = ()


def verify(g: GridScenario, spec: BenchSpec) -> VerifyResult:
    """Compare a scenario against the prompt parameters; diagnostics are
    written to be both machine-matchable and usable as feedback prompts."""
    diags = []
    if len(g.aircraft) != spec.n_aircraft:
        diags.append(f"aircraft: expected {spec.n_aircraft}, found {len(g.aircraft)}")
    if g.duration != spec.duration:
        diags.append(f"duration: expected {spec.duration}, found {g.duration}")
    if len(g.routes) != spec.n_routes:
        diags.append(f"routes: expected {spec.n_routes}, found {len(g.routes)}")
    inters = count_route_intersections(g)
    if inters != spec.n_intersections:
        diags.append(f"route intersections: expected {spec.n_intersections}, found {inters}")
    n_inter, episodes = count_interactions(g)
    if n_inter != spec.n_interactions:
        where = "; ".join(f"(pair {a},{b} at step {s0})" for a, b, s0, _ in episodes[:5])
        diags.append(
            f"interactions: expected {spec.n_interactions}, found {n_inter}"
            + (f" {where}" if where else "")
        )
    return VerifyResult(not diags, tuple(diags))


# --- wire format ------------------------------------------------------------


def scenario_to_document(g: GridScenario) -> dict:
    return {
        "width": g.width, "height": g.height, "duration": g.duration,
        "routes": [[[x, y] for x, y in r] for r in g.routes],
        "aircraft": [
            {"id": a.id, "route": a.route_index, "entry_step": a.entry_step}
            for a in g.aircraft
        ],
    }


def scenario_from_document(doc: dict) -> GridScenario:
    try:
        routes = tuple(tuple((int(x), int(y)) for x, y in r) for r in doc["routes"])
        duration = int(doc["duration"])
        aircraft = []
        for a in doc["aircraft"]:
            ri = int(a["route"])
            if not 0 <= ri < len(routes):
                raise GridScenarioError(f"aircraft {a.get('id')}: route index {ri} unknown")
            if "positions" in a:
                positions = tuple((int(x), int(y)) for x, y in a["positions"])
                aircraft.append(AircraftTrack(str(a["id"]), ri, int(a["entry_step"]), positions))
            else:
                aircraft.append(aircraft_on_route(duration, routes[ri], str(a["id"]),
                                                  ri, int(a["entry_step"])))
        return GridScenario(int(doc["width"]), int(doc["height"]), duration,
                            routes, tuple(aircraft))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, GridScenarioError):
            raise
        raise GridScenarioError(f"malformed grid-scenario document: {exc}") from exc


def scenario_to_json(g: GridScenario) -> str:
    return json.dumps(scenario_to_document(g), sort_keys=True)


def scenario_from_json(text: str) -> GridScenario:
    try:
        return scenario_from_document(json.loads(text))
    except json.JSONDecodeError as exc:
        raise GridScenarioError(f"grid-scenario block is not valid JSON: {exc}") from exc
