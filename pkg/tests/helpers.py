"""Builders for small in-memory scenarios and models used across tests."""

import numpy as np

from airtwin.airspace import (Airspace, Clearance, Fix, FlightPlan, RadarBlip, Scenario,
                              Sector, WindField)
from airtwin.perf import FpcaBasis, PerformanceModel, WeightDistribution


def flat_model(phase="descent", force=44_000.0, opposing=4_000.0, cas_kn=285.0,
               mass=62_000.0, esf_cas=0.55, esf_mach=0.0, aircraft_type="TESTAC",
               grid=None, cov=None, n_components=0) -> PerformanceModel:
    """Model with constant curves; optional identity-shape components."""
    grid = np.arange(100.0, 401.0, 10.0) if grid is None else np.asarray(grid, dtype=float)
    n = grid.size
    if n_components:
        from airtwin.perf import trapezoid_weights
        w = trapezoid_weights(grid)
        shape = np.ones(n) / np.sqrt(float(np.sum(w)))
        comps = shape.reshape(1, n)
        dims = 2 * n_components
    else:
        comps = np.zeros((0, n))
        dims = 0
    basis_f = FpcaBasis(grid, np.full(n, float(force)), comps.copy())
    basis_c = FpcaBasis(grid, np.full(n, float(cas_kn)), comps.copy())
    cov_m = np.zeros((dims, dims)) if cov is None else np.asarray(cov, dtype=float)
    weights = WeightDistribution(np.zeros(dims), cov_m)
    return PerformanceModel(
        aircraft_type=aircraft_type, phase=phase,
        force_basis=basis_f, cas_basis=basis_c, weights=weights,
        cruise_pmf={("mach", 0.78): 1.0}, mass=mass,
        esf_params={"constant_cas": esf_cas, "constant_mach": esf_mach},
        fuel_coeffs={"cf1": 1.3e-5, "cf2": 1500.0},
        opposing_force=np.full(n, float(opposing)),
        table_force=np.full(n, float(force)),
        table_cas=np.full(n, float(cas_kn)),
    )


def zero_cov_models(descent_model, climb_model):
    """Copies of the shipped models with the weight covariance zeroed."""
    out = []
    for pm in (descent_model, climb_model):
        dist = WeightDistribution(pm.weights.mean.copy(),
                                  np.zeros_like(pm.weights.covariance))
        out.append(pm.with_weights(dist))
    return out


def single_flight_scenario(seed=0, aircraft_type="B738L", blip_s=6,
                           with_clearance=True, calm=False) -> Scenario:
    """One-aircraft scenario with a single initial radar blip; enough for
    predictive integration from that state."""
    rng = np.random.default_rng(seed)
    lat0 = 50.5 + rng.uniform(0.0, 1.8)
    lon0 = -0.4 + rng.uniform(0.0, 1.6)
    fl0 = float(rng.integers(33, 40) * 10)
    target = int(rng.integers(24, 31) * 10)
    track = float(rng.uniform(0.0, 360.0))
    gs = float(rng.uniform(430.0, 480.0))
    t0 = int(rng.integers(0, 10)) * blip_s
    fixes = {
        "ENTRY": Fix("ENTRY", lat0, lon0),
        "EXITX": Fix("EXITX", min(89.0, lat0 + 0.9), lon0 + 0.9),
    }
    sector = Sector("SECT1", ((lat0 + 1.9, lon0 - 1.4), (lat0 + 1.9, lon0 + 1.9),
                              (lat0 - 1.4, lon0 + 1.9), (lat0 - 1.4, lon0 - 1.4)),
                    200, 460)
    if calm:
        wind = WindField.calm()
    else:
        shape = (2, 2, 2)
        wind = WindField(
            (lat0 - 2.0, lat0 + 2.0), (lon0 - 2.0, lon0 + 2.0), (150.0, 450.0),
            np.full(shape, float(rng.uniform(-30, 30))),
            np.full(shape, float(rng.uniform(-20, 20))),
            np.full(shape, float(rng.uniform(-3, 3))),
        )
    callsign = f"TST{seed:03d}"
    blip = RadarBlip(callsign, t0, lat0, lon0, fl0, gs, track, selected_fl=int(fl0))
    clearances = []
    if with_clearance:
        clearances.append(Clearance(f"{callsign}-c1", callsign,
                                    t0 + 5 * blip_s * int(rng.integers(1, 4)),
                                    "level", target,
                                    "when_ready" if rng.random() < 0.3 else "now"))
    flight = FlightPlan(callsign, aircraft_type, ("ENTRY", "EXITX"), int(fl0), t0)
    return Scenario(
        airspace=Airspace(fixes, {"SECT1": sector}),
        flights={callsign: flight},
        clearances=tuple(clearances),
        radar={callsign: (blip,)},
        wind=wind,
        coordinations=(),
        blip_seconds=blip_s,
    )


def minimal_scenario_doc() -> dict:
    """Degenerate but well-formed interchange document."""
    return {
        "format": "airtwin-scenario",
        "version": 1,
        "airspace": {
            "fixes": [{"id": "ONLY1", "lat": 51.0, "lon": 0.5}],
            "sectors": [{"id": "S1", "boundary": [[52.0, 0.0], [52.0, 1.0], [50.0, 1.0],
                                                  [50.0, 0.0]],
                         "floor": 195, "ceiling": 460}],
            "routes": {},
        },
        "flights": [],
        "clearances": [],
        "radar": {},
        "wind": None,
        "coordinations": [],
    }
