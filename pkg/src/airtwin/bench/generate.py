"""Synthetic sector construction and constructive solvability search.

Sectors are families of straight grid routes (horizontal rows plus
vertical columns whose vertical extents control the exact number of
route-pair crossings). Aircraft placement is a backtracking search over
(route, entry step) assignments that realises the requested interaction
count exactly; a found witness certifies the benchmark parameters as
solvable.
"""

import random
from dataclasses import dataclass

from .grid import (AircraftTrack, BenchSpec, GridScenario, GridScenarioError,
                   adjacent, aircraft_on_route, count_interactions, verify)


class SectorGenerationError(ValueError):
    pass


def generate_sector(n_routes: int, n_intersections: int, seed: int = 0,
                    width: int | None = None, height: int | None = None
                    ) -> tuple[tuple[tuple[int, int], ...], ...]:
    """Routes on a grid realising exactly the requested pair crossings.

    Horizontal routes sit on rows two cells apart; each vertical route's
    extent selects how many rows it crosses. Columns clear of every row
    hold the zero-crossing verticals.
    """
    if n_routes < 1:
        raise SectorGenerationError("need at least one route")
    if n_routes == 1 and n_intersections > 0:
        raise SectorGenerationError("one route cannot intersect")
    rng = random.Random(seed)
    split = None
    for n_h in range(1, n_routes + 1):
        n_v = n_routes - n_h
        if n_intersections <= n_h * n_v or (n_intersections == 0 and n_v == 0):
            split = (n_h, n_v)
            break
    if split is None:
        raise SectorGenerationError(
            f"{n_routes} routes cannot realise {n_intersections} crossings"
        )
    n_h, n_v = split
    # crossing budget per vertical, greedy
    crossings = []
    remaining = n_intersections
    for _ in range(n_v):
        c = min(remaining, n_h)
        crossings.append(c)
        remaining -= c
    if remaining:
        raise SectorGenerationError("crossing budget not realisable")  # unreachable by split choice
    rng.shuffle(crossings)

    if height is None:
        height = max(12, 2 * n_h + 4)
    if width is None:
        width = max(12, 2 * n_v + 6)
    rows = [2 + 2 * i for i in range(n_h)]
    cols = [2 + 2 * i for i in range(n_v)]
    if rows and rows[-1] >= height:
        raise SectorGenerationError("grid too short for the requested routes")
    if cols and cols[-1] >= width:
        raise SectorGenerationError("grid too narrow for the requested routes")

    routes: list[tuple[tuple[int, int], ...]] = []
    for r in rows:
        cells = [(x, r) for x in range(width)]
        if rng.random() < 0.5:
            cells.reverse()
        routes.append(tuple(cells))
    free_top = (rows[-1] + 2) if rows else 0
    for ci, n_cross in zip(cols, crossings):
        if n_cross > 0:
            y0 = max(0, rows[0] - 1)
            y1 = min(height - 1, rows[n_cross - 1] + 1)
        else:
            if free_top + 1 >= height:
                raise SectorGenerationError("no row-free space for a zero-crossing route")
            y0, y1 = free_top, height - 1
        cells = [(ci, y) for y in range(y0, y1 + 1)]
        if rng.random() < 0.5:
            cells.reverse()
        routes.append(tuple(cells))
    rng.shuffle(routes)
    return tuple(routes)


@dataclass
class _SearchState:
    nodes: int = 0


def place_aircraft(routes, spec: BenchSpec, seed: int = 0, node_budget: int = 200_000,
                   width: int | None = None, height: int | None = None
                   ) -> GridScenario | None:
    """Backtracking placement of aircraft realising the interaction count.

    Interactions are staged as crossing-cell meetings between dedicated
    pairs; every other co-timed adjacency is forbidden during search. The
    returned scenario is re-checked with count_interactions before being
    accepted. None means the budget ran out or no assignment exists.
    """
    if width is None:
        width = max(x for r in routes for x, _ in r) + 1
    if height is None:
        height = max(y for r in routes for _, y in r) + 1
    rng = random.Random(seed)
    duration = spec.duration

    # stage interacting pairs on route crossings
    pair_plans = []
    if spec.n_interactions > 0:
        crossings = []
        for i in range(len(routes)):
            for j in range(i + 1, len(routes)):
                shared = set(routes[i]) & set(routes[j])
                for cell in shared:
                    crossings.append((i, j, routes[i].index(cell), routes[j].index(cell)))
        rng.shuffle(crossings)
        if len(crossings) < spec.n_interactions:
            return None
        if 2 * spec.n_interactions > spec.n_aircraft:
            return None
        pair_plans = crossings[: spec.n_interactions]

    occupancy: dict[int, list[tuple[tuple[int, int], int]]] = {}

    def track_cells(track: AircraftTrack):
        for k, cell in enumerate(track.positions):
            yield track.entry_step + k, cell

    def conflicts(track: AircraftTrack, placed: list[AircraftTrack], allowed: set[frozenset]):
        for step, cell in track_cells(track):
            if step >= duration:
                break
            for other_cell, other_idx in occupancy.get(step, ()):
                if adjacent(cell, other_cell):
                    pair = frozenset({len(placed), other_idx})
                    if pair not in allowed:
                        return True
        return False

    def add_occ(track: AircraftTrack, idx: int):
        for step, cell in track_cells(track):
            if step < duration:
                occupancy.setdefault(step, []).append((cell, idx))

    def pop_occ(track: AircraftTrack, idx: int):
        for step, cell in track_cells(track):
            if step < duration:
                occupancy[step].remove((cell, idx))

    placed: list[AircraftTrack] = []
    allowed_pairs: set[frozenset] = set()
    state = _SearchState()

    # fixed meeting schedule for the interacting pairs: aircraft A reaches
    # the crossing one step before aircraft B, giving one adjacency episode
    def place_pairs(k: int) -> bool:
        if k == len(pair_plans):
            return place_rest(len(placed))
        ri, rj, ii, jj = pair_plans[k]
        meet_times = list(range(1, duration))
        rng.shuffle(meet_times)
        for t in meet_times:
            ea, eb = t - ii, t + 1 - jj
            if not (0 <= ea < duration and 0 <= eb < duration):
                continue
            a = aircraft_on_route(duration, routes[ri], f"AC{len(placed) + 1}", ri, ea)
            b = aircraft_on_route(duration, routes[rj], f"AC{len(placed) + 2}", rj, eb)
            if len(a.positions) < 2 or len(b.positions) < 2:
                continue
            state.nodes += 1
            if state.nodes > node_budget:
                return False
            pair = frozenset({len(placed), len(placed) + 1})
            allowed_pairs.add(pair)
            if not conflicts(a, placed, allowed_pairs):
                placed.append(a)
                add_occ(a, len(placed) - 1)
                if not conflicts(b, placed, allowed_pairs):
                    placed.append(b)
                    add_occ(b, len(placed) - 1)
                    if place_pairs(k + 1):
                        return True
                    pop_occ(b, len(placed) - 1)
                    placed.pop()
                pop_occ(a, len(placed) - 1)
                placed.pop()
            allowed_pairs.discard(pair)
        return False

    # prefer routes with few crossings: they admit dense in-trail streams,
    # leaving the contested crossing routes for the backtracker
    route_sets = [set(r) for r in routes]
    cross_count = [
        sum(1 for j in range(len(routes)) if j != i and route_sets[i] & route_sets[j])
        for i in range(len(routes))
    ]
    candidates = sorted(
        ((ri, e) for ri in range(len(routes)) for e in range(duration)),
        key=lambda c: (cross_count[c[0]], c[1] + rng.random()),
    )

    def place_rest(count: int) -> bool:
        if len(placed) == spec.n_aircraft:
            return True
        for ri, entry in candidates:
            state.nodes += 1
            if state.nodes > node_budget:
                return False
            track = aircraft_on_route(duration, routes[ri], f"AC{len(placed) + 1}", ri, entry)
            if len(track.positions) < 1:
                continue
            if conflicts(track, placed, allowed_pairs):
                continue
            placed.append(track)
            add_occ(track, len(placed) - 1)
            if place_rest(count + 1):
                return True
            pop_occ(track, len(placed) - 1)
            placed.pop()
        return False

    ok = place_pairs(0)
    if not ok:
        return None
    g = GridScenario(width, height, duration, tuple(routes), tuple(placed))
    n_inter, _ = count_interactions(g)
    if n_inter != spec.n_interactions:
        return None
    return g


def solvable(spec: BenchSpec, grid_dims: tuple[int, int] | None = None, seed: int = 0,
             node_budget: int = 200_000) -> tuple[str, GridScenario | None]:
    """Constructive solvability check: ('solvable'|'unsolvable'|'unknown', witness).

    'unknown' (budget exhausted) is reported distinctly from a proven
    'unsolvable' so benchmark failures are never blamed on unreachable
    parameters without evidence.
    """
    if spec.n_aircraft == 0:
        routes = generate_sector(spec.n_routes, spec.n_intersections, seed) \
            if spec.n_routes >= 1 else ()
        return "solvable", GridScenario(12, 12, max(1, spec.duration), routes, ())
    # pigeonhole: entries on one route must sit >= 2 steps apart to avoid
    # in-trail adjacency, so each route offers ceil(duration / 2) slots
    if spec.n_interactions == 0 and spec.n_routes >= 1:
        capacity = spec.n_routes * ((spec.duration + 1) // 2)
        if spec.n_aircraft > capacity:
            return "unsolvable", None
    width, height = grid_dims if grid_dims else (None, None)
    try:
        routes = generate_sector(spec.n_routes, spec.n_intersections, seed,
                                 width=width, height=height)
    except SectorGenerationError:
        return "unsolvable", None
    for attempt in range(4):
        witness = place_aircraft(routes, spec, seed=seed + 101 * attempt,
                                 node_budget=node_budget)
        if witness is not None:
            check = verify(witness, spec)
            if not check.passed:
                raise GridScenarioError(
                    f"internal: witness failed its own verification: {check.diagnostics}"
                )
            return "solvable", witness
    return "unknown", None
