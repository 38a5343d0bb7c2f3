"""Trajectory accuracy metrics: look-ahead track errors, replay error
sources against curated continuous-time data, and predictor comparison.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..airspace import Scenario
from ..atmosphere import tas_to_cas, wind_at
from ..engine import Trajectory
from ..geo import great_circle_distance_m, track_errors
from ..units import KNOT_TO_MS, metres_to_nm, ms_to_knots
from .result import MetricError, MetricResult


def mae_track_errors(preds, truth: Trajectory, lookahead: str = "blip_6s"
                     ) -> tuple[float, float, float]:
    """Mean absolute (along NM, cross NM, vertical FL) error at checkpoints.

    `preds` is either one Trajectory scored against truth at every shared
    blip time, or a sequence of re-predicted trajectories (state reset to
    truth at each look-ahead boundary upstream), each scored at its final
    blip. Truth must cover every scored time.
    """
    if isinstance(preds, Trajectory):
        if preds.callsign != truth.callsign:
            raise MetricError("callsign mismatch between prediction and truth")
        truth_at = {b.time: b for b in truth.blips}
        checkpoints = [(b, truth_at[b.time]) for b in preds.blips[1:] if b.time in truth_at]
        if not checkpoints and len(preds.blips) == 1:
            b = preds.blips[0]
            if b.time in truth_at:
                checkpoints = [(b, truth_at[b.time])]
    else:
        truth_at = {b.time: b for b in truth.blips}
        checkpoints = []
        for traj in preds:
            if traj.callsign != truth.callsign:
                raise MetricError("callsign mismatch between prediction and truth")
            last = traj.blips[-1]
            if last.time in truth_at:
                checkpoints.append((last, truth_at[last.time]))
    if not checkpoints:
        raise MetricError("prediction and truth share no checkpoint times")
    rows = [
        track_errors((p.lat, p.lon, p.fl), t.lat, t.lon, t.ground_track, t.fl)
        for p, t in checkpoints
    ]
    arr = np.abs(np.asarray(rows))
    along, cross, vert = arr.mean(axis=0)
    return float(along), float(cross), float(vert)


@dataclass(frozen=True)
class CuratedSample:
    """Continuous-time track sample from the curated (pre-discretisation) data."""

    callsign: str
    time: float
    lat: float
    lon: float
    fl: float
    ias: float | None = None         # kn, when carried by the source
    heading: float | None = None     # deg true
    aircraft_type: str | None = None


def load_curated(path: str | Path) -> list[CuratedSample]:
    """Read curated samples from JSON-lines (one sample per line)."""
    samples = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        samples.append(CuratedSample(
            d["callsign"], float(d["time"]), float(d["lat"]), float(d["lon"]), float(d["fl"]),
            d.get("ias"), d.get("heading"), d.get("aircraft_type"),
        ))
    return samples


def discretisation_error(replay_traj: Trajectory, curated) -> dict[str, np.ndarray]:
    """Linear-interpolation residual of the blip grid at curated timestamps.

    Returns per-dimension error samples {lat, lon, fl} (replay minus
    curated). Curated samples must fall inside the replay time span.
    """
    blips = replay_traj.blips
    times = np.array([b.time for b in blips], dtype=float)
    curated = [c for c in curated if c.callsign == replay_traj.callsign]
    if not curated:
        raise MetricError("no curated samples for this callsign")
    lats = np.array([b.lat for b in blips])
    lons = np.array([b.lon for b in blips])
    fls = np.array([b.fl for b in blips])
    err = {"lat": [], "lon": [], "fl": []}
    for c in curated:
        if not times[0] <= c.time <= times[-1]:
            raise MetricError(
                f"curated sample at t={c.time} outside replay span "
                f"[{times[0]:.0f}, {times[-1]:.0f}]"
            )
        err["lat"].append(np.interp(c.time, times, lats) - c.lat)
        err["lon"].append(np.interp(c.time, times, lons) - c.lon)
        err["fl"].append(np.interp(c.time, times, fls) - c.fl)
    return {k: np.asarray(v) for k, v in err.items()}


def replay_error_report(scenario: Scenario, curated, callsign: str) -> list[MetricResult]:
    """PC-style replay error sources for one flight.

    - initial-condition error: great-circle distance replay vs curated at
      the first blip time (plus flight-level offset);
    - wind-vector error: residual between the CAS derived from replayed
      ground speed through the wind field and the recorded IAS
      (an IAS -> ground-speed conversion residual);
    - attribute mismatch: count of curated attributes that disagree with
      the virtual flight record;
    - action-intent error: count of vertical clearances whose selected
      flight level never matches the instruction.
    """
    blips = scenario.radar.get(callsign)
    if not blips:
        raise MetricError(f"no radar for callsign {callsign!r}")
    mine = sorted((c for c in curated if c.callsign == callsign), key=lambda c: c.time)
    if not mine:
        raise MetricError(f"no curated samples for callsign {callsign!r}")
    results = []
    prov = {"scenario": "radar", "curated": "curated"}

    first = blips[0]
    nearest = min(mine, key=lambda c: abs(c.time - first.time))
    init_err_nm = metres_to_nm(great_circle_distance_m(first.lat, first.lon,
                                                       nearest.lat, nearest.lon))
    results.append(MetricResult(
        f"replay.initial_condition_error_nm.{callsign}", init_err_nm, "NM", 1,
        grouping={"callsign": callsign}, provenance=prov,
    ))

    ias_samples = [c for c in mine if c.ias is not None]
    if ias_samples:
        residuals = []
        by_time = {b.time: b for b in blips}
        for c in ias_samples:
            t = round(c.time / scenario.blip_seconds) * scenario.blip_seconds
            b = by_time.get(t)
            if b is None:
                continue
            u, v, dt_k, _ = wind_at(scenario.wind, (b.lat, b.lon, b.fl))
            tr = math.radians(b.ground_track)
            along = (u * math.sin(tr) + v * math.cos(tr)) * KNOT_TO_MS
            cross = (u * math.cos(tr) - v * math.sin(tr)) * KNOT_TO_MS
            gs_ms = b.ground_speed * KNOT_TO_MS
            tas_kn = ms_to_knots(math.sqrt((gs_ms - along) ** 2 + cross ** 2))
            cas = tas_to_cas(tas_kn, b.fl, dt_k)
            residuals.append(abs(cas - c.ias))
        if residuals:
            results.append(MetricResult(
                f"replay.wind_cas_residual_kn.{callsign}", float(np.mean(residuals)), "kn",
                len(residuals), grouping={"callsign": callsign}, provenance=prov,
            ))

    fp = scenario.flights[callsign]
    mismatches = 0
    typed = [c for c in mine if c.aircraft_type is not None]
    if typed and typed[0].aircraft_type != fp.aircraft_type:
        mismatches += 1
    results.append(MetricResult(
        f"replay.attribute_mismatch.{callsign}", float(mismatches), "count", max(1, len(typed)),
        grouping={"callsign": callsign}, provenance=prov,
    ))

    level_clearances = [c for c in scenario.clearances_for(callsign) if c.kind == "level"]
    intent_errors = 0
    for cl in level_clearances:
        later = [b for b in blips if b.time >= cl.issue_time and b.selected_fl is not None]
        if later and not any(b.selected_fl == int(cl.value) for b in later):
            intent_errors += 1
    if level_clearances:
        results.append(MetricResult(
            f"replay.action_intent_error.{callsign}", float(intent_errors), "count",
            len(level_clearances), grouping={"callsign": callsign}, provenance=prov,
        ))
    return results


def compare_predictors(a_errors, b_errors, n_boot: int = 10_000, seed: int = 0,
                       ci: float = 0.95) -> dict:
    """Paired bootstrap comparison of two predictors' error samples.

    Positive mean difference means `a` has smaller errors. `better` is
    'a' or 'b' only when the CI on mean(b - a) excludes zero.
    """
    a = np.asarray(a_errors, dtype=float)
    b = np.asarray(b_errors, dtype=float)
    if a.shape != b.shape:
        raise MetricError("paired samples must have equal length")
    if a.size < 10:
        raise MetricError("need >= 10 paired samples")
    diff = b - a
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, a.size, size=(n_boot, a.size))
    boot_means = diff[idx].mean(axis=1)
    alpha = (1.0 - ci) / 2.0
    lo, hi = np.quantile(boot_means, [alpha, 1.0 - alpha])
    mean_diff = float(diff.mean())
    if lo > 0.0:
        better = "a"
    elif hi < 0.0:
        better = "b"
    else:
        better = "neither"
    return {"mean_difference": mean_diff, "ci": (float(lo), float(hi)), "better": better}
