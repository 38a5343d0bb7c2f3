"""Trajectory engine: replay, the energy-balance integrator, clearance
actioning, and the deterministic / mean-mode / probabilistic predictors.

Prediction integrates the rate-of-climb/descent equation with fixed-step
RK4 (1 s sub-steps inside each radar interval) through the selected kernel
backend; replay copies recorded blips verbatim. Probabilistic predictions
draw one weight vector per ensemble member at instantiation and reject-and-
resample members that violate the plausibility constraints (minimum descent
rate, longitudinal acceleration bound).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .airspace import Clearance, RadarBlip, Scenario
from .atmosphere import ISA, AtmosphereParams, cas_to_tas, mach_to_tas, tas_to_cas, wind_at
from .geo import destination_point, initial_bearing_deg
from .perf import CurveOnGrid, PerformanceModel, cruise_mode
from .units import KNOT_TO_MS, fpm_to_ms, knots_to_ms, ms_to_fpm, ms_to_knots

PREDICTION_MODES = ("deterministic", "mean_mode", "probabilistic")
SOURCES = ("replay",) + PREDICTION_MODES


class GridSpanError(ValueError):
    """Aircraft left the performance model's flight-level grid."""


class MissingRadarError(LookupError):
    """Replay or initialisation needs a blip that the scenario lacks."""


class ModelMissingError(LookupError):
    """No performance model registered for an (aircraft type, phase)."""


class PlausibilityError(RuntimeError):
    """Resampling budget exhausted without a plausible member."""


@dataclass(frozen=True)
class EngineConfig:
    sub_step_s: float = 1.0
    pilot_delay_s: int = 30            # 'when ready' actioning delay
    min_descent_rocd_fpm: float = 500.0
    max_longitudinal_accel_ms2: float = 2.0
    plausibility_enabled: bool = True
    max_resample_attempts: int = 50
    level_capture_tol_fl: float = 0.5


DEFAULT_CONFIG = EngineConfig()


@dataclass
class AircraftState:
    callsign: str
    lat: float
    lon: float
    fl: float
    cas: float                     # kn
    mach: float
    ground_speed: float            # kn
    ground_track: float            # deg true
    phase: str                     # climb | cruise | descent
    speed_regime: str              # constant_cas | constant_mach
    target_fl: float | None = None
    transition_fl: float | None = None  # Mach/CAS crossover of the active plan
    cruise_mach: float = 0.0       # Mach held in constant_mach segments
    cruise_cas: float = 0.0        # kn held when cruising in constant_cas
    commanded_cas: float | None = None
    commanded_rocd: float | None = None
    direct_to: str | None = None
    active_clearances: list = field(default_factory=list)
    pending_actions: list = field(default_factory=list)   # (effective_time, Clearance)
    sampled_weights: np.ndarray | None = None

    def as_dict(self) -> dict:
        return {
            "callsign": self.callsign, "lat": self.lat, "lon": self.lon, "fl": self.fl,
            "cas": self.cas, "mach": self.mach, "ground_speed": self.ground_speed,
            "ground_track": self.ground_track, "phase": self.phase,
            "speed_regime": self.speed_regime,
            "target_fl": self.target_fl,
        }


@dataclass(frozen=True)
class Trajectory:
    callsign: str
    blips: tuple[RadarBlip, ...]
    source: str
    weights_used: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        for a, b in zip(self.blips, self.blips[1:]):
            if b.time <= a.time:
                raise ValueError(f"trajectory {self.callsign}: blips not strictly increasing")


@dataclass(frozen=True)
class TrajectoryEnsemble:
    callsign: str
    members: tuple[Trajectory, ...]
    seed: int
    rejected: int = 0

    @property
    def n(self) -> int:
        return len(self.members)


class ModelSet:
    """Registry of performance models keyed by (aircraft type, phase)."""

    def __init__(self, models=()):
        self._models: dict[tuple[str, str], PerformanceModel] = {}
        for pm in models:
            self.add(pm)

    def add(self, pm: PerformanceModel) -> None:
        self._models[(pm.aircraft_type, pm.phase)] = pm

    def get(self, aircraft_type: str, phase: str) -> PerformanceModel:
        try:
            return self._models[(aircraft_type, phase)]
        except KeyError:
            raise ModelMissingError(
                f"no performance model for type {aircraft_type!r} phase {phase!r}"
            ) from None

    def any_for(self, aircraft_type: str) -> PerformanceModel:
        for (t, _), pm in self._models.items():
            if t == aircraft_type:
                return pm
        raise ModelMissingError(f"no performance model for type {aircraft_type!r}")

    def types(self) -> set[str]:
        return {t for t, _ in self._models}


def rocd(state: AircraftState, pm: PerformanceModel, atmo: AtmosphereParams = ISA,
         wind: tuple[float, float, float] = (0.0, 0.0, 0.0)) -> float:
    """Instantaneous rate of climb/descent, ft/min (negative descending).

    Direct evaluation of the energy-balance equation at the aircraft's
    current state; the RK4 kernels evaluate the same expression internally.
    """
    grid = pm.fl_grid
    if not grid[0] <= state.fl <= grid[-1]:
        raise GridSpanError(f"FL{state.fl:.0f} outside model grid FL{grid[0]:.0f}-FL{grid[-1]:.0f}")
    delta_t = wind[2]
    if state.speed_regime == "constant_mach":
        tas_kn = mach_to_tas(state.mach, state.fl, delta_t, atmo)
    else:
        tas_kn = cas_to_tas(state.cas, state.fl, delta_t, atmo)
    if tas_kn <= 0:
        raise ValueError("V_TAS must be positive")
    weights = state.sampled_weights if state.sampled_weights is not None else pm.mean_weights()
    force = pm.force_curve(weights)(state.fl)
    opposing = float(np.interp(state.fl, grid, pm.opposing_force))
    thrust, drag = (force, opposing) if pm.phase == "climb" else (opposing, force)
    mach = state.mach if state.speed_regime == "constant_mach" else _mach_of(tas_kn, state.fl, delta_t, atmo)
    c = pm.esf_coefficient("mach" if state.speed_regime == "constant_mach" else "cas")
    esf = 1.0 / (1.0 + c * mach * mach)
    from .atmosphere import isa_temperature
    from .units import fl_to_metres
    t_isa = isa_temperature(fl_to_metres(state.fl), atmo)
    rocd_ms = ((t_isa - delta_t) / t_isa) * ((thrust - drag) * knots_to_ms(tas_kn)
                                             / (pm.mass * atmo.g0)) * esf
    return ms_to_fpm(rocd_ms)


def _mach_of(tas_kn: float, fl: float, delta_t: float, atmo: AtmosphereParams) -> float:
    from .atmosphere import speed_of_sound
    from .units import fl_to_metres
    return knots_to_ms(tas_kn) / speed_of_sound(fl_to_metres(fl), delta_t, atmo)


def _wind_components(u_kn: float, v_kn: float, track_deg: float) -> tuple[float, float]:
    """(along, cross) wind in m/s relative to a ground track; cross positive
    from the left (adds to the right-hand drift the crab must cancel)."""
    t = math.radians(track_deg)
    along = (u_kn * math.sin(t) + v_kn * math.cos(t)) * KNOT_TO_MS
    cross = (u_kn * math.cos(t) - v_kn * math.sin(t)) * KNOT_TO_MS
    return along, cross


def crossover_level(cas_schedule, cruise_mach: float, grid,
                    atmo: AtmosphereParams = ISA) -> float | None:
    """Flight level where a constant-Mach profile meets a CAS schedule.

    Returns None when the Mach segment never reaches the schedule inside
    the grid span (the whole span is constant-Mach); returns the grid top
    when the schedule already dominates there (all constant-CAS).
    """
    if cruise_mach <= 0.0:
        return None

    def gap(fl: float) -> float:
        return tas_to_cas(mach_to_tas(cruise_mach, fl, 0.0, atmo), fl, 0.0, atmo) \
            - cas_schedule(fl)

    lo, hi = float(grid[0]), float(grid[-1])
    if gap(hi) >= 0.0:
        return hi
    if gap(lo) <= 0.0:
        return None
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if gap(mid) <= 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


class FlightSim:
    """Single-aircraft predictive integrator with clearance actioning."""

    def __init__(self, scenario: Scenario, blip0: RadarBlip, mode: str, models: ModelSet,
                 weights: np.ndarray | None = None, config: EngineConfig = DEFAULT_CONFIG,
                 clearances=None, atmo: AtmosphereParams = ISA):
        if mode not in PREDICTION_MODES:
            raise ValueError(f"mode must be one of {PREDICTION_MODES}")
        self.scenario = scenario
        self.mode = mode
        self.models = models
        self.config = config
        self.atmo = atmo
        self.clock = blip0.time
        self.warnings: list[str] = []
        self.min_descent_rocd_fpm = math.inf
        self.max_accel_ms2 = 0.0
        self.entered_descent = False
        fp = scenario.flights[blip0.callsign]
        self.aircraft_type = fp.aircraft_type
        self._integrators: dict[str, object] = {}
        self.weights = weights
        self.state = self._initial_state(blip0, fp)
        pending = []
        for cl in (clearances if clearances is not None else scenario.clearances_for(blip0.callsign)):
            if cl.issue_time >= blip0.time:
                eff = cl.issue_time + (config.pilot_delay_s if cl.condition == "when_ready" else 0)
                pending.append((eff, cl))
        self.state.pending_actions = sorted(pending, key=lambda p: (p[0], p[1].issue_time))

    # --- construction -----------------------------------------------------

    def _initial_state(self, blip: RadarBlip, fp) -> AircraftState:
        u, v, delta_t, _ = wind_at(self.scenario.wind, (blip.lat, blip.lon, blip.fl))
        along, cross = _wind_components(u, v, blip.ground_track)
        gs_ms = knots_to_ms(blip.ground_speed)
        tas_ms = math.sqrt((gs_ms - along) ** 2 + cross ** 2)
        tas_kn = ms_to_knots(tas_ms)
        cas_kn = tas_to_cas(tas_kn, blip.fl, delta_t, self.atmo)
        mach = _mach_of(tas_kn, blip.fl, delta_t, self.atmo)
        target = float(blip.selected_fl) if blip.selected_fl is not None else float(fp.requested_fl)
        tol = self.config.level_capture_tol_fl
        if target > blip.fl + tol:
            phase = "climb"
        elif target < blip.fl - tol:
            phase = "descent"
        else:
            phase = "cruise"
        state = AircraftState(
            callsign=blip.callsign, lat=blip.lat, lon=blip.lon, fl=blip.fl,
            cas=cas_kn, mach=mach, ground_speed=blip.ground_speed,
            ground_track=blip.ground_track, phase=phase, speed_regime="constant_cas",
            target_fl=target, sampled_weights=self.weights,
        )
        self._configure_speed_plan(state)
        if phase == "cruise":
            state.cruise_cas = cas_kn
        return state

    def _configure_speed_plan(self, state: AircraftState) -> None:
        """Fix the Mach/CAS segment structure when a vertical phase starts.

        The crossover level is computed once per plan so the integrator can
        split sub-steps at a fixed altitude (refinement then converges)."""
        if state.phase == "descent":
            pm = self.models.get(self.aircraft_type, "descent")
            state.cruise_mach = state.mach
            state.transition_fl = crossover_level(self._cas_schedule(pm), state.cruise_mach,
                                                  pm.fl_grid, self.atmo)
            if state.transition_fl is not None and state.fl > state.transition_fl:
                state.speed_regime = "constant_mach"
            elif state.transition_fl is None:
                state.speed_regime = "constant_mach"
            else:
                state.speed_regime = "constant_cas"
            self.entered_descent = True
        elif state.phase == "climb":
            pm = self.models.get(self.aircraft_type, "climb")
            regime, value = cruise_mode(pm) if pm.cruise_pmf else ("cas", state.cas)
            state.cruise_mach = value if regime == "mach" else 0.0
            state.transition_fl = crossover_level(self._cas_schedule(pm), state.cruise_mach,
                                                  pm.fl_grid, self.atmo)
            if state.transition_fl is not None and state.fl > state.transition_fl:
                state.speed_regime = "constant_mach"
            else:
                state.speed_regime = "constant_cas"
        else:
            state.transition_fl = None
            state.speed_regime = "constant_mach" if state.mach > 0 and state.cruise_mach > 0 \
                else "constant_cas"

    def _model_for_phase(self, phase: str) -> PerformanceModel:
        return self.models.get(self.aircraft_type, phase)

    def _cas_schedule(self, pm: PerformanceModel) -> CurveOnGrid:
        if self.mode == "deterministic":
            return CurveOnGrid(pm.fl_grid, pm.table_cas)
        w = self.weights if self.weights is not None else pm.mean_weights()
        return pm.cas_curve(w)

    def _integrator(self, phase: str):
        if phase in self._integrators:
            return self._integrators[phase]
        atmo = self.atmo
        if phase == "cruise":
            # force curves are never evaluated while level; reuse any model
            # of the type for mass/ESF constants, or a neutral stub
            try:
                pm = self.models.any_for(self.aircraft_type)
            except ModelMissingError:
                pm = None
            grid = pm.fl_grid if pm is not None else np.array([0.0, 660.0])
            zeros = np.zeros_like(grid)
            integ = kernels.BlipIntegrator(
                grid, zeros, zeros,
                zeros if pm is None else knots_to_ms(1.0) * pm.table_cas,
                pm.mass if pm is not None else 60000.0,
                pm.esf_coefficient("cas") if pm is not None else 0.0,
                pm.esf_coefficient("mach") if pm is not None else 0.0,
                atmo.sea_level_temp, atmo.sea_level_pressure, atmo.lapse_rate,
                atmo.tropopause_alt, atmo.gas_constant, atmo.gamma, atmo.g0,
            )
        else:
            pm = self._model_for_phase(phase)
            if self.mode == "deterministic":
                force_vals, cas_vals = pm.table_force, pm.table_cas
            else:
                w = self.weights if self.weights is not None else pm.mean_weights()
                force_vals = pm.force_curve(w).values
                cas_vals = pm.cas_curve(w).values
            integ = kernels.BlipIntegrator(
                pm.fl_grid, force_vals, pm.opposing_force,
                knots_to_ms(1.0) * cas_vals, pm.mass,  # kernel speeds are m/s
                pm.esf_coefficient("cas"), pm.esf_coefficient("mach"),
                atmo.sea_level_temp, atmo.sea_level_pressure, atmo.lapse_rate,
                atmo.tropopause_alt, atmo.gas_constant, atmo.gamma, atmo.g0,
            )
        self._integrators[phase] = integ
        return integ

    # --- clearance actioning ----------------------------------------------

    def issue(self, cl: Clearance) -> None:
        eff = cl.issue_time + (self.config.pilot_delay_s if cl.condition == "when_ready" else 0)
        self.state.pending_actions.append((eff, cl))
        self.state.pending_actions.sort(key=lambda p: (p[0], p[1].issue_time))

    def _apply_due(self) -> None:
        state = self.state
        due = [p for p in state.pending_actions if p[0] <= self.clock]
        state.pending_actions = [p for p in state.pending_actions if p[0] > self.clock]
        for _, cl in due:
            state.active_clearances.append(cl)
            if cl.kind == "level":
                target = float(cl.value)
                state.target_fl = target
                tol = self.config.level_capture_tol_fl
                if target > state.fl + tol:
                    state.phase = "climb"
                elif target < state.fl - tol:
                    state.phase = "descent"
                else:
                    state.phase = "cruise"
                    state.cruise_cas = state.cas
                self._configure_speed_plan(state)
            elif cl.kind == "heading":
                state.ground_track = float(cl.value)
                state.direct_to = None
            elif cl.kind == "speed":
                if cl.qualifier != "equals":
                    self.warnings.append(
                        f"clearance {cl.id}: speed qualifier '{cl.qualifier}' interpreted as "
                        f"'speed equals {cl.value}'"
                    )
                state.commanded_cas = float(cl.value)
            elif cl.kind == "direct_to":
                state.direct_to = str(cl.value)
            elif cl.kind == "rate":
                state.commanded_rocd = float(cl.value)

    # --- stepping -----------------------------------------------------------

    def advance_blip(self) -> RadarBlip:
        state = self.state
        cfg = self.config
        blip_s = self.scenario.blip_seconds
        self._apply_due()
        if state.direct_to is not None:
            fix = self.scenario.airspace.fixes[state.direct_to]
            from .geo import great_circle_distance_m
            if great_circle_distance_m(state.lat, state.lon, fix.lat, fix.lon) < 3704.0:
                state.direct_to = None  # captured within 2 NM; hold present track
            else:
                state.ground_track = initial_bearing_deg(state.lat, state.lon, fix.lat, fix.lon)
        phase_sign = {"climb": 1, "cruise": 0, "descent": -1}[state.phase]
        if phase_sign != 0:
            pm = self._model_for_phase(state.phase)
            if not pm.fl_grid[0] <= state.fl <= pm.fl_grid[-1]:
                raise GridSpanError(
                    f"{state.callsign}: FL{state.fl:.1f} left model grid "
                    f"FL{pm.fl_grid[0]:.0f}-FL{pm.fl_grid[-1]:.0f}"
                )
        u, v, delta_t, _ = wind_at(self.scenario.wind, (state.lat, state.lon, state.fl))
        along, cross = _wind_components(u, v, state.ground_track)
        integ = self._integrator(state.phase)
        n_sub = max(1, round(blip_s / cfg.sub_step_s))
        was_descent = state.phase == "descent"
        (fl, dist_m, regime_mach, levelled, cas_ms, tas_ms, mach, _rocd_ms,
         min_abs_rocd_ms, max_accel) = integ.run(
            state.fl, phase_sign, 1 if state.speed_regime == "constant_mach" else 0,
            state.cruise_mach, knots_to_ms(state.cruise_cas),
            knots_to_ms(state.commanded_cas) if state.commanded_cas is not None else 0.0,
            fpm_to_ms(state.commanded_rocd) if state.commanded_rocd is not None else 0.0,
            state.target_fl, state.transition_fl, delta_t, along, cross, float(blip_s), n_sub,
        )
        lat, lon = destination_point(state.lat, state.lon, state.ground_track, dist_m)
        state.lat, state.lon, state.fl = lat, lon, fl
        state.speed_regime = "constant_mach" if regime_mach else "constant_cas"
        state.cas = ms_to_knots(cas_ms)
        state.mach = mach
        state.ground_speed = ms_to_knots(dist_m / blip_s)
        if was_descent and min_abs_rocd_ms < 1e29:
            self.min_descent_rocd_fpm = min(self.min_descent_rocd_fpm, ms_to_fpm(min_abs_rocd_ms))
        self.max_accel_ms2 = max(self.max_accel_ms2, max_accel)
        if levelled:
            state.phase = "cruise"
            state.commanded_rocd = None
            if regime_mach:
                state.cruise_mach = mach
            else:
                state.cruise_cas = state.commanded_cas if state.commanded_cas is not None \
                    else state.cas
        self.clock += blip_s
        return RadarBlip(
            callsign=state.callsign, time=self.clock, lat=lat, lon=lon, fl=fl,
            ground_speed=state.ground_speed, ground_track=state.ground_track,
            selected_fl=int(round(state.target_fl)) if state.target_fl is not None else None,
        )

    def diagnostics(self) -> dict:
        return {
            "min_descent_rocd_fpm": self.min_descent_rocd_fpm,
            "max_accel_ms2": self.max_accel_ms2,
            "entered_descent": self.entered_descent,
            "warnings": list(self.warnings),
        }


def replay(scenario: Scenario, callsign: str) -> Trajectory:
    """Replay is the identity on recorded radar data."""
    blips = scenario.radar.get(callsign)
    if not blips:
        raise MissingRadarError(f"no radar for callsign {callsign!r}")
    return Trajectory(callsign, tuple(blips), "replay")


def _member_is_plausible(sim: FlightSim, cfg: EngineConfig) -> bool:
    if not cfg.plausibility_enabled:
        return True
    if sim.entered_descent and sim.min_descent_rocd_fpm < cfg.min_descent_rocd_fpm:
        return False
    if sim.max_accel_ms2 > cfg.max_longitudinal_accel_ms2:
        return False
    return True


def _integrate_once(scenario: Scenario, blip0: RadarBlip, n_blips: int, mode: str,
                    models: ModelSet, weights, config: EngineConfig,
                    source: str) -> tuple[Trajectory, FlightSim]:
    sim = FlightSim(scenario, blip0, mode, models, weights, config)
    blips = [blip0]
    for _ in range(n_blips):
        blips.append(sim.advance_blip())
    traj = Trajectory(blip0.callsign, tuple(blips), source,
                      None if weights is None else np.asarray(weights, dtype=float),
                      sim.diagnostics())
    return traj, sim


def predict(scenario: Scenario, callsign: str, from_time: int, horizon_s: int, mode: str,
            models: ModelSet, n_ensemble: int = 1, seed: int = 0,
            config: EngineConfig = DEFAULT_CONFIG):
    """Trajectory (deterministic, mean_mode) or TrajectoryEnsemble
    (probabilistic) from the replay state at `from_time`."""
    if mode not in PREDICTION_MODES:
        raise ValueError(f"mode must be one of {PREDICTION_MODES}")
    if n_ensemble < 1:
        raise ValueError("n_ensemble must be >= 1")
    blip0 = scenario.blip_at(callsign, from_time)
    if blip0 is None:
        raise MissingRadarError(f"{callsign}: no radar blip at t={from_time}")
    n_blips = int(horizon_s) // scenario.blip_seconds

    if mode == "deterministic":
        traj, _ = _integrate_once(scenario, blip0, n_blips, mode, models, None, config, mode)
        return traj
    fp = scenario.flights[callsign]
    ref_model = models.any_for(fp.aircraft_type)
    if mode == "mean_mode":
        traj, _ = _integrate_once(scenario, blip0, n_blips, mode, models,
                                  ref_model.weights.mean.copy(), config, mode)
        return traj

    rng = np.random.default_rng(seed)
    sampler = ref_model.weights.sampling_matrix()
    members: list[Trajectory] = []
    rejected = 0
    attempts_left = config.max_resample_attempts * n_ensemble + n_ensemble
    while len(members) < n_ensemble:
        if attempts_left <= 0:
            raise PlausibilityError(
                f"{callsign}: exceeded resampling budget with {rejected} rejections"
            )
        attempts_left -= 1
        w = ref_model.weights.mean + sampler @ rng.standard_normal(ref_model.weights.dim)
        traj, sim = _integrate_once(scenario, blip0, n_blips, mode, models, w, config,
                                    "probabilistic")
        if _member_is_plausible(sim, config):
            members.append(traj)
        else:
            rejected += 1
    return TrajectoryEnsemble(callsign, tuple(members), seed, rejected)


def rolling_predictions(scenario: Scenario, callsign: str, mode: str, models: ModelSet,
                        lookahead: str, seed: int = 0,
                        config: EngineConfig = DEFAULT_CONFIG) -> list[Trajectory]:
    """Fresh prediction from truth at every look-ahead boundary.

    lookahead 'blip_6s': one radar interval per window; 'clearance_to_clearance':
    windows run between consecutive clearance issue times.
    """
    blips = scenario.radar.get(callsign)
    if not blips:
        raise MissingRadarError(f"no radar for callsign {callsign!r}")
    step = scenario.blip_seconds
    if lookahead == "blip_6s":
        bounds = [b.time for b in blips]
    elif lookahead == "clearance_to_clearance":
        cl_times = sorted({c.issue_time for c in scenario.clearances_for(callsign)})
        bounds = [blips[0].time] + [t for t in cl_times if blips[0].time < t < blips[-1].time] \
            + [blips[-1].time]
    else:
        raise ValueError("lookahead must be 'blip_6s' or 'clearance_to_clearance'")
    out = []
    for start, end in zip(bounds, bounds[1:]):
        if scenario.blip_at(callsign, start) is None:
            continue
        horizon = end - start
        if horizon < step:
            continue
        result = predict(scenario, callsign, start, horizon, mode, models,
                         n_ensemble=1, seed=seed, config=config)
        traj = result.members[0] if isinstance(result, TrajectoryEnsemble) else result
        out.append(traj)
    return out


# --- whole-scenario simulation (service backend) ---------------------------


class ScenarioSim:
    """All aircraft of one scenario advanced blip by blip in one mode."""

    def __init__(self, scenario: Scenario, mode: str, models: ModelSet | None = None,
                 seed: int = 0, config: EngineConfig = DEFAULT_CONFIG):
        if mode != "replay" and mode not in PREDICTION_MODES:
            raise ValueError(f"unknown mode {mode!r}")
        if mode != "replay" and models is None:
            raise ModelMissingError("predictive modes need a model set")
        self.scenario = scenario
        self.mode = mode
        self.models = models
        self.seed = seed
        self.config = config
        self.clock = scenario.time_span()[0]
        self.flights: dict[str, FlightSim] = {}
        self.done: set[str] = set()
        self.extra_clearances: list[Clearance] = []
        self.warnings: list[str] = []
        self._instantiate_due()

    def _entry_time(self, callsign: str) -> int | None:
        blips = self.scenario.radar.get(callsign)
        return blips[0].time if blips else None

    def _instantiate_due(self) -> None:
        if self.mode == "replay":
            return
        for callsign in self.scenario.flights:
            if callsign in self.flights or callsign in self.done:
                continue
            t0 = self._entry_time(callsign)
            if t0 is not None and t0 <= self.clock:
                blip0 = self.scenario.blip_at(callsign, t0)
                weights = None
                if self.mode == "mean_mode" or self.mode == "probabilistic":
                    pm = self.models.any_for(self.scenario.flights[callsign].aircraft_type)
                    if self.mode == "mean_mode":
                        weights = pm.weights.mean.copy()
                    else:
                        member_rng = np.random.default_rng(
                            np.random.SeedSequence([self.seed, _stable_hash(callsign)])
                        )
                        weights = pm.weights.mean + pm.weights.sampling_matrix() @ \
                            member_rng.standard_normal(pm.weights.dim)
                self.flights[callsign] = FlightSim(
                    self.scenario, blip0, self.mode, self.models, weights, self.config
                )

    def issue(self, cl: Clearance) -> None:
        if cl.callsign not in self.scenario.flights:
            raise MissingRadarError(f"unknown callsign {cl.callsign!r}")
        self.extra_clearances.append(cl)
        if cl.callsign in self.flights:
            self.flights[cl.callsign].issue(cl)

    def step(self) -> int:
        """Advance the whole simulation one radar interval."""
        blip_s = self.scenario.blip_seconds
        next_clock = self.clock + blip_s
        if self.mode == "replay":
            for callsign, series in self.scenario.radar.items():
                if callsign in self.done:
                    continue
                if any(b.time == next_clock for b in series):
                    continue
                if series and series[-1].time > next_clock and series[0].time <= next_clock:
                    raise MissingRadarError(
                        f"{callsign}: no radar blip at t={next_clock} (undocumented gap)"
                    )
                if series and series[-1].time <= next_clock:
                    self.done.add(callsign)
        else:
            for callsign, sim in list(self.flights.items()):
                if callsign in self.done:
                    continue
                sim.advance_blip()
                self.warnings.extend(w for w in sim.warnings if w not in self.warnings)
        self.clock = next_clock
        self._instantiate_due()
        return self.clock

    def snapshot(self) -> list[dict]:
        """Per-aircraft state records at the current clock."""
        out = []
        if self.mode == "replay":
            for callsign, series in sorted(self.scenario.radar.items()):
                for b in series:
                    if b.time == self.clock:
                        out.append({
                            "callsign": callsign, "lat": b.lat, "lon": b.lon, "fl": b.fl,
                            "cas": None, "mach": None, "ground_speed": b.ground_speed,
                            "ground_track": b.ground_track, "phase": None,
                            "speed_regime": None, "target_fl": b.selected_fl,
                        })
        else:
            for callsign in sorted(self.flights):
                if callsign in self.done:
                    continue
                out.append(self.flights[callsign].state.as_dict())
        return out


def _stable_hash(text: str) -> int:
    """Deterministic 32-bit hash (process-independent, unlike hash())."""
    h = 2166136261
    for ch in text.encode("utf-8"):
        h = ((h ^ ch) * 16777619) & 0xFFFFFFFF
    return h


# --- vertical profile generation (distribution evidence) -------------------


@dataclass(frozen=True)
class DescentProfile:
    """Per-blip vertical/speed history of one descent realisation."""

    times: np.ndarray          # s from top of descent
    fls: np.ndarray
    cas_kn: np.ndarray
    rocd_fpm: np.ndarray       # signed, negative while descending
    transition_fl: float       # samples above are constant-Mach
    time_to_bottom: float      # s; nan when the bottom was not reached

    def split_masks(self) -> tuple[np.ndarray, np.ndarray]:
        above = self.fls > self.transition_fl
        return above, ~above


def descent_profile(pm: PerformanceModel, weights, top_fl: float, bottom_fl: float,
                    cruise: tuple[str, float], blip_s: int = 6,
                    config: EngineConfig = DEFAULT_CONFIG, max_steps: int = 2000,
                    atmo: AtmosphereParams = ISA) -> DescentProfile:
    """Integrate one descent from top_fl to bottom_fl in still air.

    cruise is the (regime, value) speed held at top of descent; descending
    at constant Mach transitions onto the CAS schedule at the crossover.
    """
    if pm.phase != "descent":
        raise ValueError("descent_profile needs a descent-phase model")
    grid = pm.fl_grid
    if not (grid[0] <= bottom_fl < top_fl <= grid[-1]):
        raise GridSpanError("descent span must lie inside the model grid")
    w = np.asarray(weights, dtype=float)
    force_vals = pm.force_curve(w).values
    cas_vals = pm.cas_curve(w).values
    integ = kernels.BlipIntegrator(
        grid, force_vals, pm.opposing_force, knots_to_ms(1.0) * cas_vals, pm.mass,
        pm.esf_coefficient("cas"), pm.esf_coefficient("mach"),
        atmo.sea_level_temp, atmo.sea_level_pressure, atmo.lapse_rate,
        atmo.tropopause_alt, atmo.gas_constant, atmo.gamma, atmo.g0,
    )
    regime, value = cruise
    if regime == "mach":
        cruise_mach = float(value)
        fl_c = crossover_level(pm.cas_curve(w), cruise_mach, grid, atmo)
        regime_mach = 1 if (fl_c is None or top_fl > fl_c) else 0
    else:
        cruise_mach = 0.0
        fl_c = float(top_fl)  # constant CAS from the start
        regime_mach = 0
    if fl_c is None:
        transition_fl = float(bottom_fl)  # never crosses: everything above
        fl_c_arg = None
    else:
        transition_fl = min(max(float(fl_c), float(bottom_fl)), float(top_fl))
        fl_c_arg = float(fl_c)
    n_sub = max(1, round(blip_s / config.sub_step_s))
    fl = float(top_fl)
    t = 0.0
    times, fls, cas_list, rocd_list = [0.0], [fl], [], []
    if regime == "cas":
        cas0 = float(value)
    else:
        from .atmosphere import mach_to_tas as m2t
        cas0 = tas_to_cas(m2t(cruise_mach, fl), fl)
    cas_list.append(cas0)
    rocd_list.append(0.0)
    ttb = float("nan")
    for _ in range(max_steps):
        (fl_new, _dist, regime_mach_new, levelled, cas_ms, _tas, _mach, rocd_ms,
         _min_r, _max_a) = integ.run(
            fl, -1, regime_mach, cruise_mach, 0.0, 0.0, 0.0, float(bottom_fl),
            fl_c_arg, 0.0, 0.0, 0.0, float(blip_s), n_sub,
        )
        regime_mach = regime_mach_new
        t += blip_s
        fl = fl_new
        times.append(t)
        fls.append(fl)
        cas_list.append(ms_to_knots(cas_ms))
        rocd_list.append(ms_to_fpm(rocd_ms))
        if levelled:
            ttb = t
            break
    return DescentProfile(
        np.asarray(times), np.asarray(fls), np.asarray(cas_list), np.asarray(rocd_list),
        transition_fl, ttb,
    )


def sample_descent_profiles(pm: PerformanceModel, n: int, top_fl: float, bottom_fl: float,
                            seed: int, config: EngineConfig = DEFAULT_CONFIG,
                            blip_s: int = 6, spans=None) -> tuple[list[DescentProfile], int]:
    """n plausibility-screened descent realisations; returns (profiles, rejected).

    `spans` optionally assigns profile i the (top_fl, bottom_fl) of
    spans[i % len(spans)] so a generated population can mirror the descent
    spans of a reference set.
    """
    rng = np.random.default_rng(seed)
    sampler = pm.weights.sampling_matrix()
    profiles: list[DescentProfile] = []
    rejected = 0
    attempts_left = config.max_resample_attempts * n + n
    pmf_entries = sorted(pm.cruise_pmf.items(), key=lambda kv: (kv[0][0], kv[0][1]))
    while len(profiles) < n:
        if attempts_left <= 0:
            raise PlausibilityError(f"exceeded resampling budget with {rejected} rejections")
        attempts_left -= 1
        w = pm.weights.mean + sampler @ rng.standard_normal(pm.weights.dim)
        cruise = _draw_pmf(pmf_entries, rng.random()) if pmf_entries else ("cas", 290.0)
        if spans is not None:
            top_fl, bottom_fl = spans[len(profiles) % len(spans)]
        prof = descent_profile(pm, w, top_fl, bottom_fl, cruise, blip_s, config)
        interior = prof.rocd_fpm[1:-1] if prof.rocd_fpm.size > 2 else prof.rocd_fpm
        if config.plausibility_enabled and interior.size and \
                np.min(np.abs(interior[interior != 0.0])) < config.min_descent_rocd_fpm:
            rejected += 1
            continue
        profiles.append(prof)
    return profiles, rejected


def _draw_pmf(entries, u: float) -> tuple[str, float]:
    acc = 0.0
    for (regime, value), p in entries:
        acc += p
        if u < acc:
            return regime, float(value)
    return entries[-1][0][0], float(entries[-1][0][1])
