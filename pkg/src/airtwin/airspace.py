"""Domain types for the virtual airspace and the scenario interchange format.

A Scenario bundles the airspace geometry, flight plans, clearances, radar
blip series, wind field and sector coordinations read from one JSON
document (schema in docs/scenario-schema.md). All types are immutable
after construction; loading validates every cross-reference and structural
invariant and names the offending record in errors.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .geo import point_in_polygon, polygon_is_simple
from .units import DEFAULT_BLIP_SECONDS

FORMAT_NAME = "airtwin-scenario"
FORMAT_VERSION = 1

CLEARANCE_KINDS = ("level", "heading", "speed", "direct_to", "rate")
CLEARANCE_CONDITIONS = ("now", "when_ready")
SPEED_QUALIFIERS = ("equals", "greater_than", "less_than")

EN_ROUTE_FLOOR_FL = 195
EN_ROUTE_CEILING_FL = 660


class ScenarioParseError(ValueError):
    """Malformed scenario document."""


class ScenarioReferenceError(ValueError):
    """A record references an unknown fix or callsign."""


class ScenarioInvariantError(ValueError):
    """A structural invariant of a scenario record is violated."""


@dataclass(frozen=True)
class Fix:
    id: str
    lat: float
    lon: float

    def __post_init__(self):
        if not self.id:
            raise ScenarioInvariantError("fix with empty id")
        if not -90.0 <= self.lat <= 90.0:
            raise ScenarioInvariantError(f"fix {self.id}: lat {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon < 180.0:
            raise ScenarioInvariantError(f"fix {self.id}: lon {self.lon} outside [-180, 180)")


@dataclass(frozen=True)
class Sector:
    id: str
    boundary: tuple[tuple[float, float], ...]  # (lat, lon) ring, not repeated
    floor: int
    ceiling: int
    en_route: bool = True

    def __post_init__(self):
        if len(self.boundary) < 3:
            raise ScenarioInvariantError(f"sector {self.id}: boundary needs >= 3 vertices")
        if not polygon_is_simple([(lon, lat) for lat, lon in self.boundary]):
            raise ScenarioInvariantError(f"sector {self.id}: boundary is self-intersecting")
        if self.floor >= self.ceiling:
            raise ScenarioInvariantError(
                f"sector {self.id}: floor {self.floor} not below ceiling {self.ceiling}"
            )
        if self.en_route and (self.floor < EN_ROUTE_FLOOR_FL or self.ceiling > EN_ROUTE_CEILING_FL):
            raise ScenarioInvariantError(
                f"sector {self.id}: en-route sectors lie within FL{EN_ROUTE_FLOOR_FL}"
                f"-FL{EN_ROUTE_CEILING_FL}, got {self.floor}-{self.ceiling}"
            )


@dataclass(frozen=True)
class FlightPlan:
    callsign: str
    aircraft_type: str
    route: tuple[str, ...]
    requested_fl: int
    entry_time: int

    def __post_init__(self):
        if len(self.route) < 2:
            raise ScenarioInvariantError(f"flight {self.callsign}: route shorter than 2 fixes")


@dataclass(frozen=True)
class Clearance:
    id: str
    callsign: str
    issue_time: int
    kind: str
    value: float | str
    condition: str = "now"
    qualifier: str = "equals"  # speed clearances only; gt/lt collapse to equals

    def __post_init__(self):
        if self.kind not in CLEARANCE_KINDS:
            raise ScenarioInvariantError(
                f"clearance {self.id}: unsupported kind {self.kind!r} "
                f"(supported: {', '.join(CLEARANCE_KINDS)})"
            )
        if self.condition not in CLEARANCE_CONDITIONS:
            raise ScenarioInvariantError(f"clearance {self.id}: bad condition {self.condition!r}")
        if self.qualifier not in SPEED_QUALIFIERS:
            raise ScenarioInvariantError(f"clearance {self.id}: bad qualifier {self.qualifier!r}")
        if self.kind == "level":
            if not EN_ROUTE_FLOOR_FL <= float(self.value) <= EN_ROUTE_CEILING_FL:
                raise ScenarioInvariantError(
                    f"clearance {self.id}: level {self.value} outside "
                    f"FL{EN_ROUTE_FLOOR_FL}-FL{EN_ROUTE_CEILING_FL}"
                )
        elif self.kind == "heading":
            if not 0.0 <= float(self.value) < 360.0:
                raise ScenarioInvariantError(f"clearance {self.id}: heading {self.value} outside [0, 360)")
        elif self.kind == "speed":
            if not 0.0 < float(self.value) <= 800.0:
                raise ScenarioInvariantError(f"clearance {self.id}: speed {self.value} outside (0, 800]")
        elif self.kind == "rate":
            if not 0.0 < float(self.value) <= 8000.0:
                raise ScenarioInvariantError(f"clearance {self.id}: rate {self.value} outside (0, 8000]")
        elif self.kind == "direct_to":
            if not isinstance(self.value, str) or not self.value:
                raise ScenarioInvariantError(f"clearance {self.id}: direct_to needs a fix id")


@dataclass(frozen=True)
class RadarBlip:
    callsign: str
    time: int
    lat: float
    lon: float
    fl: float
    ground_speed: float
    ground_track: float
    selected_fl: int | None = None


@dataclass(frozen=True)
class WindField:
    """Regular (lat, lon, flight level) lattice of wind and dT values."""

    lats: tuple[float, ...]
    lons: tuple[float, ...]
    levels: tuple[float, ...]
    u: np.ndarray              # kn, shape (|lats|, |lons|, |levels|)
    v: np.ndarray
    temperature_offset: np.ndarray  # K
    valid_time: int = 0
    max_wind_kn: float = 400.0

    def __post_init__(self):
        for name, axis in (("lats", self.lats), ("lons", self.lons), ("levels", self.levels)):
            if len(axis) < 1 or any(b <= a for a, b in zip(axis, axis[1:])):
                raise ScenarioInvariantError(f"wind lattice axis {name} not strictly increasing")
        shape = (len(self.lats), len(self.lons), len(self.levels))
        for name, arr in (("u", self.u), ("v", self.v),
                          ("temperature_offset", self.temperature_offset)):
            if arr.shape != shape:
                raise ScenarioInvariantError(
                    f"wind component {name} shape {arr.shape} != lattice {shape}"
                )
            arr.setflags(write=False)
        if np.abs(self.u).max(initial=0.0) > self.max_wind_kn or \
           np.abs(self.v).max(initial=0.0) > self.max_wind_kn:
            raise ScenarioInvariantError(f"wind component exceeds {self.max_wind_kn} kn sanity bound")

    @classmethod
    def calm(cls) -> "WindField":
        z = np.zeros((2, 2, 2))
        return cls((-89.0, 89.0), (-179.0, 179.0), (0.0, 660.0), z, z.copy(), z.copy())


@dataclass(frozen=True)
class Airspace:
    fixes: Mapping[str, Fix]
    sectors: Mapping[str, Sector]
    routes: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        for rid, route in self.routes.items():
            for fx in route:
                if fx not in self.fixes:
                    raise ScenarioReferenceError(f"route {rid}: unknown fix {fx!r}")


@dataclass(frozen=True)
class Coordination:
    callsign: str
    exit_fix: str
    exit_fl: int


@dataclass(frozen=True)
class Scenario:
    airspace: Airspace
    flights: Mapping[str, FlightPlan]
    clearances: tuple[Clearance, ...]
    radar: Mapping[str, tuple[RadarBlip, ...]]
    wind: WindField
    coordinations: tuple[Coordination, ...]
    blip_seconds: int = DEFAULT_BLIP_SECONDS
    gap_log: tuple[tuple[str, int, int], ...] = ()  # (callsign, after_time, gap_s)
    provenance: Mapping[str, str] = field(default_factory=dict)

    def clearances_for(self, callsign: str) -> list[Clearance]:
        return [c for c in self.clearances if c.callsign == callsign]

    def blip_at(self, callsign: str, time: int) -> RadarBlip | None:
        for b in self.radar.get(callsign, ()):
            if b.time == time:
                return b
        return None

    def time_span(self) -> tuple[int, int]:
        times = [b.time for blips in self.radar.values() for b in blips]
        if not times:
            return 0, 0
        return min(times), max(times)


def point_in_sector(p: tuple[float, float, float], s: Sector) -> bool:
    """True iff (lat, lon, fl) is horizontally inside the boundary polygon
    (boundary counts as inside) and floor <= fl <= ceiling."""
    lat, lon, fl = p
    if not s.floor <= fl <= s.ceiling:
        return False
    return point_in_polygon(lon, lat, [(v[1], v[0]) for v in s.boundary])


# --- interchange format ----------------------------------------------------


def load_scenario(path: str | Path) -> Scenario:
    """Read and validate one scenario document."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioParseError(f"{path}: cannot parse scenario document: {exc}") from exc
    return scenario_from_document(doc, source=str(path))


def scenario_from_document(doc: dict, source: str = "<memory>") -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioParseError(f"{source}: top level must be an object")
    if doc.get("format", FORMAT_NAME) != FORMAT_NAME:
        raise ScenarioParseError(f"{source}: unknown format {doc.get('format')!r}")
    if int(doc.get("version", FORMAT_VERSION)) != FORMAT_VERSION:
        raise ScenarioParseError(f"{source}: unsupported version {doc.get('version')!r}")
    blip_s = int(doc.get("blip_seconds", DEFAULT_BLIP_SECONDS))
    if blip_s < 1:
        raise ScenarioParseError(f"{source}: blip_seconds must be >= 1")

    try:
        asp_doc = doc.get("airspace", {})
        fixes = {f["id"]: Fix(f["id"], float(f["lat"]), float(f["lon"]))
                 for f in asp_doc.get("fixes", [])}
        if len(fixes) != len(asp_doc.get("fixes", [])):
            raise ScenarioInvariantError("duplicate fix id in airspace")
        sectors = {}
        for s in asp_doc.get("sectors", []):
            boundary = tuple((float(a), float(b)) for a, b in s["boundary"])
            if len(boundary) > 1 and boundary[0] == boundary[-1]:
                boundary = boundary[:-1]  # accept explicitly closed rings
            sectors[s["id"]] = Sector(s["id"], boundary, int(s["floor"]), int(s["ceiling"]),
                                      bool(s.get("en_route", True)))
        routes = {rid: tuple(r) for rid, r in asp_doc.get("routes", {}).items()}
        airspace = Airspace(fixes, sectors, routes)
    except KeyError as exc:
        raise ScenarioParseError(f"{source}: airspace record missing key {exc}") from exc

    flights: dict[str, FlightPlan] = {}
    for f in doc.get("flights", []):
        try:
            fp = FlightPlan(f["callsign"], f["aircraft_type"], tuple(f["route"]),
                            int(f["requested_fl"]), int(f["entry_time"]))
        except KeyError as exc:
            raise ScenarioParseError(f"{source}: flight record missing key {exc}") from exc
        if fp.callsign in flights:
            raise ScenarioInvariantError(f"duplicate flight callsign {fp.callsign}")
        for fx in fp.route:
            if fx not in airspace.fixes:
                raise ScenarioReferenceError(f"flight {fp.callsign}: unknown fix {fx!r}")
        flights[fp.callsign] = fp

    clearances: list[Clearance] = []
    last_time: dict[str, int] = {}
    for c in doc.get("clearances", []):
        try:
            cl = Clearance(
                c["id"], c["callsign"], _snap(int(c["issue_time"]), blip_s), c["kind"],
                c["value"], c.get("condition", "now"), c.get("qualifier", "equals"),
            )
        except KeyError as exc:
            raise ScenarioParseError(f"{source}: clearance record missing key {exc}") from exc
        if cl.callsign not in flights:
            raise ScenarioReferenceError(f"clearance {cl.id}: unknown callsign {cl.callsign!r}")
        if cl.kind == "direct_to" and cl.value not in airspace.fixes:
            raise ScenarioReferenceError(f"clearance {cl.id}: unknown fix {cl.value!r}")
        if cl.callsign in last_time and cl.issue_time < last_time[cl.callsign]:
            raise ScenarioInvariantError(
                f"clearance {cl.id}: out of chronological order for {cl.callsign}"
            )
        last_time[cl.callsign] = cl.issue_time
        clearances.append(cl)

    radar: dict[str, tuple[RadarBlip, ...]] = {}
    gap_log: list[tuple[str, int, int]] = []
    for callsign, series in doc.get("radar", {}).items():
        if callsign not in flights:
            raise ScenarioReferenceError(f"radar track for unknown callsign {callsign!r}")
        blips = []
        for b in series:
            t = int(b["time"])
            if t % blip_s != 0:
                raise ScenarioInvariantError(
                    f"radar {callsign}: blip time {t} not on the {blip_s} s grid"
                )
            blips.append(RadarBlip(
                callsign, t, float(b["lat"]), float(b["lon"]), float(b["fl"]),
                float(b["ground_speed"]), float(b["ground_track"]),
                None if b.get("selected_fl") is None else int(b["selected_fl"]),
            ))
        for a, b in zip(blips, blips[1:]):
            dt = b.time - a.time
            if dt <= 0 or dt % blip_s != 0:
                raise ScenarioInvariantError(
                    f"radar {callsign}: blip spacing {dt} s at t={a.time} is not a "
                    f"positive multiple of {blip_s} s"
                )
            if dt > blip_s:
                gap_log.append((callsign, a.time, dt))  # documented gap
        radar[callsign] = tuple(blips)

    wind_doc = doc.get("wind")
    if wind_doc:
        wind = WindField(
            tuple(float(x) for x in wind_doc["lats"]),
            tuple(float(x) for x in wind_doc["lons"]),
            tuple(float(x) for x in wind_doc["levels"]),
            np.asarray(wind_doc["u"], dtype=float),
            np.asarray(wind_doc["v"], dtype=float),
            np.asarray(wind_doc["temperature_offset"], dtype=float),
            int(wind_doc.get("valid_time", 0)),
        )
    else:
        wind = WindField.calm()

    coordinations = []
    for co in doc.get("coordinations", []):
        if co["callsign"] not in flights:
            raise ScenarioReferenceError(f"coordination for unknown callsign {co['callsign']!r}")
        if co["exit_fix"] not in airspace.fixes:
            raise ScenarioReferenceError(
                f"coordination {co['callsign']}: unknown exit fix {co['exit_fix']!r}"
            )
        coordinations.append(Coordination(co["callsign"], co["exit_fix"], int(co["exit_fl"])))

    return Scenario(
        airspace=airspace,
        flights=flights,
        clearances=tuple(clearances),
        radar=radar,
        wind=wind,
        coordinations=tuple(coordinations),
        blip_seconds=blip_s,
        gap_log=tuple(gap_log),
        provenance=dict(doc.get("provenance", {})),
    )


def scenario_to_document(sc: Scenario) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "blip_seconds": sc.blip_seconds,
        "airspace": {
            "fixes": [{"id": f.id, "lat": f.lat, "lon": f.lon}
                      for f in sorted(sc.airspace.fixes.values(), key=lambda f: f.id)],
            "sectors": [
                {"id": s.id, "boundary": [[lat, lon] for lat, lon in s.boundary],
                 "floor": s.floor, "ceiling": s.ceiling, "en_route": s.en_route}
                for s in sorted(sc.airspace.sectors.values(), key=lambda s: s.id)
            ],
            "routes": {rid: list(r) for rid, r in sorted(sc.airspace.routes.items())},
        },
        "flights": [
            {"callsign": f.callsign, "aircraft_type": f.aircraft_type, "route": list(f.route),
             "requested_fl": f.requested_fl, "entry_time": f.entry_time}
            for f in sorted(sc.flights.values(), key=lambda f: f.callsign)
        ],
        "clearances": [
            {"id": c.id, "callsign": c.callsign, "issue_time": c.issue_time, "kind": c.kind,
             "value": c.value, "condition": c.condition, "qualifier": c.qualifier}
            for c in sc.clearances
        ],
        "radar": {
            cs: [
                {"time": b.time, "lat": b.lat, "lon": b.lon, "fl": b.fl,
                 "ground_speed": b.ground_speed, "ground_track": b.ground_track,
                 "selected_fl": b.selected_fl}
                for b in blips
            ]
            for cs, blips in sorted(sc.radar.items())
        },
        "wind": {
            "lats": list(sc.wind.lats), "lons": list(sc.wind.lons),
            "levels": list(sc.wind.levels),
            "u": sc.wind.u.tolist(), "v": sc.wind.v.tolist(),
            "temperature_offset": sc.wind.temperature_offset.tolist(),
            "valid_time": sc.wind.valid_time,
        },
        "coordinations": [
            {"callsign": c.callsign, "exit_fix": c.exit_fix, "exit_fl": c.exit_fl}
            for c in sc.coordinations
        ],
        "provenance": dict(sc.provenance),
    }


def save_scenario(sc: Scenario, path: str | Path) -> None:
    """Canonical serialisation: sorted keys, 2-space indent, UTF-8."""
    Path(path).write_text(
        json.dumps(scenario_to_document(sc), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


def _snap(t: int, step: int) -> int:
    """Snap a timestamp onto the radar grid (nearest node, half rounds up)."""
    return int(math.floor((t + step / 2.0) / step)) * step
