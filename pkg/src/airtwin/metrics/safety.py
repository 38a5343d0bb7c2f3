"""Safety and efficiency metrics over simulation snapshots and trajectories.

Separation minima: 5 NM horizontally and 1,000 ft vertically; a pair is in
conflict only when strictly inside both minima simultaneously (a pair at
exactly 5.0 NM or exactly 1,000 ft is legal).
"""

import math
from dataclasses import dataclass

import numpy as np

from ..airspace import Scenario, point_in_sector
from ..engine import (DEFAULT_CONFIG, EngineConfig, ModelSet, Trajectory,
                      TrajectoryEnsemble, predict)
from ..geo import great_circle_distance_m
from ..units import metres_to_nm, nm_to_metres
from .result import MetricError, MetricResult

SEPARATION_NM = 5.0
SEPARATION_FT = 1000.0
SEPARATION_FL = SEPARATION_FT / 100.0


@dataclass(frozen=True)
class AircraftPoint:
    callsign: str
    lat: float
    lon: float
    fl: float


def _as_points(snapshot) -> list[AircraftPoint]:
    pts = []
    for s in snapshot:
        if isinstance(s, AircraftPoint):
            pts.append(s)
        elif isinstance(s, dict):
            pts.append(AircraftPoint(s["callsign"], s["lat"], s["lon"], s["fl"]))
        else:
            cs, lat, lon, fl = s
            pts.append(AircraftPoint(cs, lat, lon, fl))
    return pts


def loss_of_separation(snapshot) -> list[tuple[str, str]]:
    """Conflicting pairs in one simultaneous snapshot of aircraft states.

    Vectorised haversine over all pairs; identical by contract to the
    brute-force O(n^2) scalar check (property-tested).
    """
    pts = _as_points(snapshot)
    n = len(pts)
    if n < 2:
        return []
    lat = np.radians([p.lat for p in pts])
    lon = np.radians([p.lon for p in pts])
    fl = np.array([p.fl for p in pts])
    dphi = lat[:, None] - lat[None, :]
    dlmb = lon[:, None] - lon[None, :]
    a = np.sin(dphi / 2.0) ** 2 + np.cos(lat[:, None]) * np.cos(lat[None, :]) * np.sin(dlmb / 2.0) ** 2
    dist_m = 2.0 * 6_371_000.0 * np.arcsin(np.minimum(1.0, np.sqrt(a)))
    horiz = dist_m < nm_to_metres(SEPARATION_NM)
    vert = np.abs(fl[:, None] - fl[None, :]) < SEPARATION_FL
    conflict = horiz & vert
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            if conflict[i, j]:
                out.append((pts[i].callsign, pts[j].callsign))
    return out


def pair_conflicts(p: AircraftPoint, q: AircraftPoint) -> bool:
    """Scalar conflict test for one pair (strict inequalities)."""
    d_nm = metres_to_nm(great_circle_distance_m(p.lat, p.lon, q.lat, q.lon))
    return d_nm < SEPARATION_NM and abs(p.fl - q.fl) * 100.0 < SEPARATION_FT


def technical_safety(scenario: Scenario, from_time: int, models: ModelSet, horizon_s: int,
                     n_ensemble: int = 10, seed: int = 0,
                     config: EngineConfig = DEFAULT_CONFIG) -> dict:
    """Uncertainty-expanded conflict-detection rollout.

    Rolls a probabilistic ensemble for every aircraft present at
    `from_time` and declares the situation safe only when no member pair
    of any aircraft pair conflicts anywhere in the horizon. The margin is
    the smallest horizontal distance among vertically-coupled member
    pairs (infinite when no pair is ever vertically coupled).
    """
    callsigns = sorted(cs for cs in scenario.radar if scenario.blip_at(cs, from_time))
    ensembles: dict[str, TrajectoryEnsemble] = {}
    for i, cs in enumerate(callsigns):
        ens = predict(scenario, cs, from_time, horizon_s, "probabilistic", models,
                      n_ensemble=n_ensemble, seed=seed + i, config=config)
        ensembles[cs] = ens
    if len(callsigns) < 2:
        return {"safe": True, "min_margin_nm": math.inf, "conflicts": [],
                "population": len(callsigns)}

    def tracks(ens: TrajectoryEnsemble):
        lat = np.array([[b.lat for b in m.blips] for m in ens.members])
        lon = np.array([[b.lon for b in m.blips] for m in ens.members])
        fl = np.array([[b.fl for b in m.blips] for m in ens.members])
        return np.radians(lat), np.radians(lon), fl

    data = {cs: tracks(ens) for cs, ens in ensembles.items()}
    min_margin = math.inf
    conflicts = []
    for ai in range(len(callsigns)):
        for bi in range(ai + 1, len(callsigns)):
            a_cs, b_cs = callsigns[ai], callsigns[bi]
            alat, alon, afl = data[a_cs]
            blat, blon, bfl = data[b_cs]
            steps = min(alat.shape[1], blat.shape[1])
            # member x member at each step
            for t in range(steps):
                dphi = alat[:, t][:, None] - blat[:, t][None, :]
                dlmb = alon[:, t][:, None] - blon[:, t][None, :]
                h = np.sin(dphi / 2.0) ** 2 + \
                    np.cos(alat[:, t][:, None]) * np.cos(blat[:, t][None, :]) * np.sin(dlmb / 2.0) ** 2
                d_nm = metres_to_nm(2.0 * 6_371_000.0 * np.arcsin(np.minimum(1.0, np.sqrt(h))))
                coupled = np.abs(afl[:, t][:, None] - bfl[:, t][None, :]) * 100.0 < SEPARATION_FT
                if coupled.any():
                    min_margin = min(min_margin, float(d_nm[coupled].min()))
                    if (d_nm[coupled] < SEPARATION_NM).any():
                        conflicts.append((a_cs, b_cs, t))
    return {
        "safe": not conflicts,
        "min_margin_nm": min_margin,
        "conflicts": conflicts,
        "population": len(callsigns),
    }


def efficiency_metrics(trajs, scenario: Scenario, sector_id: str | None = None,
                       models: ModelSet | None = None, exit_tolerance_nm: float = 2.0,
                       window_s: int = 600, stride_s: int = 60) -> list[MetricResult]:
    """Coordination compliance, airspace excursion time, fuel burn and
    traffic load for a set of trajectories in one sector."""
    trajs = list(trajs)
    if sector_id is None:
        if len(scenario.airspace.sectors) != 1:
            raise MetricError("sector_id required when the airspace has several sectors")
        sector_id = next(iter(scenario.airspace.sectors))
    sector = scenario.airspace.sectors[sector_id]
    coords = {c.callsign: c for c in scenario.coordinations}
    results: list[MetricResult] = []

    compliant, assessed, excluded = 0, 0, []
    total_excursion_s = 0.0
    for traj in trajs:
        co = coords.get(traj.callsign)
        inside = [point_in_sector((b.lat, b.lon, b.fl), sector) for b in traj.blips]
        if co is None:
            excluded.append(traj.callsign)
        else:
            assessed += 1
            exit_blip = traj.blips[-1]
            for k in range(len(traj.blips) - 1, -1, -1):
                if inside[k]:
                    exit_blip = traj.blips[k]
                    break
            fix = scenario.airspace.fixes[co.exit_fix]
            d_nm = metres_to_nm(great_circle_distance_m(exit_blip.lat, exit_blip.lon,
                                                        fix.lat, fix.lon))
            if d_nm <= exit_tolerance_nm and int(round(exit_blip.fl)) == co.exit_fl:
                compliant += 1
        # excursion: time spent outside the sector before the final exit
        last_inside = max((k for k, v in enumerate(inside) if v), default=None)
        if last_inside is not None:
            outside_before = sum(1 for k in range(last_inside) if not inside[k])
            total_excursion_s += outside_before * scenario.blip_seconds

    if assessed:
        results.append(MetricResult(
            "efficiency.coordination_compliance.fraction", compliant / assessed, "1", assessed,
            grouping={"sector": sector_id, "excluded": ",".join(excluded)},
        ))
    results.append(MetricResult(
        "efficiency.excursion_time_s.total", total_excursion_s, "s", max(1, len(trajs)),
        grouping={"sector": sector_id},
    ))

    if models is not None:
        total_fuel = 0.0
        for traj in trajs:
            total_fuel += fuel_burn_kg(traj, scenario, models)
        results.append(MetricResult(
            "efficiency.fuel_burn_kg.total", total_fuel, "kg", max(1, len(trajs)),
            grouping={"sector": sector_id},
        ))

    t0, t1 = scenario.time_span()
    loads = []
    present: dict[int, int] = {}
    for traj in trajs:
        for b in traj.blips:
            present[b.time] = present.get(b.time, 0) + 1
    for w_start in range(t0, max(t0 + 1, t1 - window_s + 1), stride_s):
        blips_in = sum(c for t, c in present.items() if w_start <= t < w_start + window_s)
        loads.append(blips_in * scenario.blip_seconds / 60.0)  # aircraft-minutes
    if loads:
        results.append(MetricResult(
            "efficiency.traffic_load.peak", float(max(loads)), "aircraft_min",
            len(loads), grouping={"sector": sector_id, "window_s": str(window_s)},
        ))
        results.append(MetricResult(
            "efficiency.traffic_load.mean", float(np.mean(loads)), "aircraft_min",
            len(loads), grouping={"sector": sector_id, "window_s": str(window_s)},
        ))
    return results


def fuel_burn_kg(traj: Trajectory, scenario: Scenario, models: ModelSet) -> float:
    """Integrated thrust-specific fuel flow along one trajectory.

    flow = cf1 * (1 + tas_kn / cf2) * thrust_N, with thrust the climb
    force curve in climbs, the idle table in descents, and drag balance in
    cruise; TAS is approximated by recorded ground speed.
    """
    fp = scenario.flights.get(traj.callsign)
    if fp is None:
        raise MetricError(f"unknown flight {traj.callsign!r}")
    total = 0.0
    for a, b in zip(traj.blips, traj.blips[1:]):
        dt = b.time - a.time
        dfl = b.fl - a.fl
        if dfl > 0.5:
            pm = models.get(fp.aircraft_type, "climb")
            thrust = float(np.interp(a.fl, pm.fl_grid, pm.table_force))
        elif dfl < -0.5:
            pm = models.get(fp.aircraft_type, "descent")
            thrust = float(np.interp(a.fl, pm.fl_grid, pm.opposing_force))
        else:
            # level: thrust balances drag
            try:
                pm = models.get(fp.aircraft_type, "descent")
                thrust = float(np.interp(a.fl, pm.fl_grid, pm.table_force))
            except Exception:
                pm = models.get(fp.aircraft_type, "climb")
                thrust = float(np.interp(a.fl, pm.fl_grid, pm.opposing_force))
        cf1 = pm.fuel_coeffs["cf1"]
        cf2 = pm.fuel_coeffs["cf2"]
        total += cf1 * (1.0 + a.ground_speed / cf2) * thrust * dt
    return total
