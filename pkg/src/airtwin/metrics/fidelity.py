"""Distributional fidelity evidence: generated vs reference descent
populations compared measure by measure with KS and Wasserstein distances,
split by the Mach/CAS transition point.
"""

import math
from dataclasses import replace

import numpy as np

from ..airspace import Scenario
from ..atmosphere import mach_to_tas, tas_to_cas, wind_at
from ..engine import (DEFAULT_CONFIG, DescentProfile, EngineConfig,
                      sample_descent_profiles)
from ..perf import PerformanceModel
from ..units import KNOT_TO_MS, ms_to_knots
from .distance import ks_distance, wasserstein1
from .result import MetricError, MetricResult

MEASURES = ("cas_above", "cas_below", "rod_above", "rod_below", "ttb")
MEASURE_UNITS = {"cas_above": "kn", "cas_below": "kn",
                 "rod_above": "ft/min", "rod_below": "ft/min", "ttb": "s"}
MEASURE_LABELS = {
    "cas_above": ("Calibrated Airspeed", "above"),
    "cas_below": ("Calibrated Airspeed", "below"),
    "rod_above": ("Rate of Descent", "above"),
    "rod_below": ("Rate of Descent", "below"),
    "ttb": ("Time to Bottom of Descent", "-"),
}


def profile_measures(profiles) -> dict[str, np.ndarray]:
    """Pool the five measure sample sets from a set of descent profiles."""
    out: dict[str, list] = {m: [] for m in MEASURES}
    for p in profiles:
        moving = np.abs(p.rocd_fpm) > 1.0  # drop the level endpoints
        above = p.fls > p.transition_fl
        out["cas_above"].extend(p.cas_kn[moving & above])
        out["cas_below"].extend(p.cas_kn[moving & ~above])
        out["rod_above"].extend(np.abs(p.rocd_fpm[moving & above]))
        out["rod_below"].extend(np.abs(p.rocd_fpm[moving & ~above]))
        if not math.isnan(p.time_to_bottom):
            out["ttb"].append(p.time_to_bottom)
    return {m: np.asarray(v) for m, v in out.items()}


def distribution_report(model: PerformanceModel, test_profiles, seed: int = 0,
                        min_population: int = 30, top_fl: float | None = None,
                        bottom_fl: float | None = None,
                        config: EngineConfig = DEFAULT_CONFIG
                        ) -> tuple[list[dict], list[MetricResult]]:
    """Generate a model population matched to the test set and compare.

    Returns (table rows, MetricResults). Rows carry measure, transition
    split, KS and Wasserstein distances; thresholds are deliberately not
    applied here (they live in the assurance case document).
    """
    test_profiles = list(test_profiles)
    if len(test_profiles) < min_population:
        raise MetricError(
            f"insufficient data: {len(test_profiles)} descent profiles < floor {min_population}"
        )
    grid = model.fl_grid
    if top_fl is None or bottom_fl is None:
        # mirror each test profile's descent span so the populations differ
        # only in the quantities under test, not in geometry
        spans = [
            (min(float(p.fls.max()), float(grid[-1])),
             max(min(float(p.fls.min()), float(p.fls.max()) - 20.0), float(grid[0])))
            for p in test_profiles
        ]
    else:
        top_fl = min(top_fl, float(grid[-1]))
        bottom_fl = max(bottom_fl, float(grid[0]))
        spans = [(top_fl, bottom_fl)]
    generated, rejected = sample_descent_profiles(
        model, len(test_profiles), spans[0][0], spans[0][1], seed, config, spans=spans
    )
    # one labeling rule for both populations: the transition estimated from
    # the model schedule and each profile's own top-of-descent Mach
    test_profiles = [relabel_transition(model, p) for p in test_profiles]
    generated = [relabel_transition(model, p) for p in generated]
    test_m = profile_measures(test_profiles)
    gen_m = profile_measures(generated)
    rows: list[dict] = []
    metrics: list[MetricResult] = []
    for m in MEASURES:
        a, b = test_m[m], gen_m[m]
        if a.size == 0 or b.size == 0:
            continue
        ks = ks_distance(a, b)
        w1 = wasserstein1(a, b)
        measure, transition = MEASURE_LABELS[m]
        rows.append({"measure": measure, "transition": transition,
                     "ks_distance": ks, "wasserstein_distance": w1,
                     "units": MEASURE_UNITS[m], "n_test": int(a.size), "n_generated": int(b.size)})
        grouping = {"aircraft_type": model.aircraft_type, "phase": model.phase,
                    "transition": transition}
        metrics.append(MetricResult(f"fidelity.{m}.ks", ks, "1",
                                    min(a.size, b.size), grouping=grouping))
        metrics.append(MetricResult(f"fidelity.{m}.w1", w1, MEASURE_UNITS[m],
                                    min(a.size, b.size), grouping=grouping))
    metrics.append(MetricResult(
        "fidelity.generation.rejection_rate", rejected / max(1, rejected + len(generated)), "1",
        len(generated), grouping={"aircraft_type": model.aircraft_type},
    ))
    return rows, metrics


def relabel_transition(pm: PerformanceModel, profile: DescentProfile) -> DescentProfile:
    """Assign the transition level from observables only (top CAS + model
    mean schedule), identically for reference and generated profiles."""
    from ..atmosphere import mach_number
    cas_top = float(profile.cas_kn[0])
    fl_top = float(profile.fls[0])
    try:
        tas_top = cas_to_tas_kn(cas_top, fl_top)
        mach_top = mach_number(tas_top, fl_top)
    except ValueError:
        return profile
    return replace(profile, transition_fl=transition_fl_estimate(pm, mach_top))


def cas_to_tas_kn(cas_kn: float, fl: float) -> float:
    from ..atmosphere import cas_to_tas
    return cas_to_tas(cas_kn, fl)


def transition_fl_estimate(pm: PerformanceModel, mach_top: float) -> float:
    """Crossover of the model's mean CAS schedule with a given Mach.

    Scans the grid from the top: the transition is the highest level where
    the constant-Mach CAS meets or exceeds the schedule CAS.
    """
    schedule = pm.cas_basis.reconstruct(np.zeros(pm.cas_basis.n_components)
                                        if pm.weights.dim == 0 else
                                        pm.split_weights(pm.weights.mean)[1])
    for fl in np.linspace(pm.fl_grid[-1], pm.fl_grid[0], 200):
        cas_from_mach = tas_to_cas(mach_to_tas(mach_top, fl), fl)
        if cas_from_mach >= schedule(fl):
            return float(fl)
    return float(pm.fl_grid[0])


def profiles_from_scenario(scenario: Scenario, model: PerformanceModel,
                           min_drop_fl: float = 20.0) -> list[DescentProfile]:
    """Extract descent profiles from replayed radar for the model's type.

    Takes the longest monotone-descending blip run per flight; CAS is
    derived from ground speed through the wind field; the transition split
    uses the model schedule and the observed top-of-descent Mach.
    """
    profiles = []
    for callsign, blips in sorted(scenario.radar.items()):
        fp = scenario.flights[callsign]
        if fp.aircraft_type != model.aircraft_type:
            continue
        run = _longest_descent_run(blips)
        if run is None or run[0].fl - run[-1].fl < min_drop_fl:
            continue
        times, fls, cas, rocd = [], [], [], []
        for a, b in zip(run, run[1:]):
            u, v, dt_k, _ = wind_at(scenario.wind, (a.lat, a.lon, a.fl))
            tr = math.radians(a.ground_track)
            along = (u * math.sin(tr) + v * math.cos(tr)) * KNOT_TO_MS
            cross = (u * math.cos(tr) - v * math.sin(tr)) * KNOT_TO_MS
            gs_ms = a.ground_speed * KNOT_TO_MS
            tas_kn = ms_to_knots(math.sqrt((gs_ms - along) ** 2 + cross ** 2))
            times.append(a.time - run[0].time)
            fls.append(a.fl)
            cas.append(tas_to_cas(tas_kn, a.fl, dt_k))
            rocd.append((b.fl - a.fl) * 100.0 / (b.time - a.time) * 60.0)
        if not times:
            continue
        ttb = float(run[-1].time - run[0].time)
        # drop partial intervals at both ends (manoeuvre onset and level
        # capture average a fraction of a blip and skew the rate pool)
        rates = np.abs(np.asarray(rocd))
        floor_fpm = 0.5 * float(np.median(rates))
        cut = len(rocd)
        while cut > 1 and rates[cut - 1] < floor_fpm:
            cut -= 1
        start = 0
        while start < cut - 1 and rates[start] < floor_fpm:
            start += 1
        profiles.append(DescentProfile(
            np.asarray(times[start:cut], dtype=float), np.asarray(fls[start:cut]),
            np.asarray(cas[start:cut]), np.asarray(rocd[start:cut]),
            float(run[-1].fl), ttb,
        ))
    return profiles


def _longest_descent_run(blips):
    best, cur = [], []
    for a, b in zip(blips, blips[1:]):
        if b.fl < a.fl - 1e-9:
            if not cur:
                cur = [a]
            cur.append(b)
        else:
            if len(cur) > len(best):
                best = cur
            cur = []
    if len(cur) > len(best):
        best = cur
    return best if len(best) >= 2 else None
