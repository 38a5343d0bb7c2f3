"""Standard-atmosphere kinematics and wind-field lookup.

Implements the ISA pressure/temperature profile and the compressible-flow
CAS/TAS/Mach conversions used throughout the twin. Temperature offsets
(dT relative to ISA) shift temperature but not pressure altitude.
"""

import math
from dataclasses import dataclass

from .units import fl_to_metres, knots_to_ms, ms_to_knots


class SpeedDomainError(ValueError):
    """Conversion left the subsonic validity region (implied Mach > 1)."""


@dataclass(frozen=True)
class AtmosphereParams:
    """ISA constants; override only for sensitivity studies."""

    sea_level_temp: float = 288.15       # K
    sea_level_pressure: float = 101_325.0  # Pa
    lapse_rate: float = 0.0065           # K/m, troposphere
    tropopause_alt: float = 11_000.0     # m
    gas_constant: float = 287.05287      # J/(kg K)
    gamma: float = 1.4
    g0: float = 9.80665                  # m/s^2

    def __post_init__(self):
        for name in ("sea_level_temp", "sea_level_pressure", "lapse_rate",
                     "tropopause_alt", "gas_constant", "gamma", "g0"):
            if getattr(self, name) <= 0:
                raise ValueError(f"AtmosphereParams.{name} must be positive")


ISA = AtmosphereParams()


def isa_temperature(h_m: float, atmo: AtmosphereParams = ISA) -> float:
    """ISA temperature (K) at geopotential altitude h (m)."""
    h_eff = min(h_m, atmo.tropopause_alt)
    return atmo.sea_level_temp - atmo.lapse_rate * h_eff


def isa_pressure(h_m: float, atmo: AtmosphereParams = ISA) -> float:
    """ISA pressure (Pa) at altitude h (m)."""
    t0, p0, lr = atmo.sea_level_temp, atmo.sea_level_pressure, atmo.lapse_rate
    expo = atmo.g0 / (lr * atmo.gas_constant)
    if h_m <= atmo.tropopause_alt:
        return p0 * (1.0 - lr * h_m / t0) ** expo
    t_trop = t0 - lr * atmo.tropopause_alt
    p_trop = p0 * (t_trop / t0) ** expo
    return p_trop * math.exp(-atmo.g0 * (h_m - atmo.tropopause_alt) / (atmo.gas_constant * t_trop))


def air_density(h_m: float, delta_t: float = 0.0, atmo: AtmosphereParams = ISA) -> float:
    t = isa_temperature(h_m, atmo) + delta_t
    return isa_pressure(h_m, atmo) / (atmo.gas_constant * t)


def speed_of_sound(h_m: float, delta_t: float = 0.0, atmo: AtmosphereParams = ISA) -> float:
    t = isa_temperature(h_m, atmo) + delta_t
    return math.sqrt(atmo.gamma * atmo.gas_constant * t)


def cas_to_tas_ms(cas_ms: float, h_m: float, delta_t: float = 0.0,
                  atmo: AtmosphereParams = ISA) -> float:
    """Compressible CAS -> TAS, both m/s, at pressure altitude h."""
    mu = (atmo.gamma - 1.0) / atmo.gamma
    p0 = atmo.sea_level_pressure
    rho0 = p0 / (atmo.gas_constant * atmo.sea_level_temp)
    p = isa_pressure(h_m, atmo)
    rho = p / (atmo.gas_constant * (isa_temperature(h_m, atmo) + delta_t))
    inner = (1.0 + 0.5 * mu * rho0 / p0 * cas_ms * cas_ms) ** (1.0 / mu) - 1.0
    tas = math.sqrt((2.0 / mu) * (p / rho) * ((1.0 + (p0 / p) * inner) ** mu - 1.0))
    if tas > speed_of_sound(h_m, delta_t, atmo):
        raise SpeedDomainError(
            f"CAS {ms_to_knots(cas_ms):.1f} kn at {h_m:.0f} m implies Mach > 1"
        )
    return tas


def tas_to_cas_ms(tas_ms: float, h_m: float, delta_t: float = 0.0,
                  atmo: AtmosphereParams = ISA) -> float:
    """Compressible TAS -> CAS, both m/s; exact inverse of cas_to_tas_ms."""
    mu = (atmo.gamma - 1.0) / atmo.gamma
    p0 = atmo.sea_level_pressure
    rho0 = p0 / (atmo.gas_constant * atmo.sea_level_temp)
    p = isa_pressure(h_m, atmo)
    rho = p / (atmo.gas_constant * (isa_temperature(h_m, atmo) + delta_t))
    inner = (1.0 + 0.5 * mu * rho / p * tas_ms * tas_ms) ** (1.0 / mu) - 1.0
    return math.sqrt((2.0 / mu) * (p0 / rho0) * ((1.0 + (p / p0) * inner) ** mu - 1.0))


def cas_to_tas(cas_kn: float, fl: float, delta_t: float = 0.0,
               atmo: AtmosphereParams = ISA) -> float:
    """CAS (kn) to TAS (kn) at a flight level. Raises SpeedDomainError above Mach 1."""
    if cas_kn < 0:
        raise ValueError("CAS must be non-negative")
    if not 0 <= fl <= 660:
        raise ValueError(f"flight level {fl} outside FL0..FL660")
    return ms_to_knots(cas_to_tas_ms(knots_to_ms(cas_kn), fl_to_metres(fl), delta_t, atmo))


def tas_to_cas(tas_kn: float, fl: float, delta_t: float = 0.0,
               atmo: AtmosphereParams = ISA) -> float:
    """TAS (kn) to CAS (kn) at a flight level."""
    if tas_kn < 0:
        raise ValueError("TAS must be non-negative")
    if not 0 <= fl <= 660:
        raise ValueError(f"flight level {fl} outside FL0..FL660")
    return ms_to_knots(tas_to_cas_ms(knots_to_ms(tas_kn), fl_to_metres(fl), delta_t, atmo))


def mach_number(tas_kn: float, fl: float, delta_t: float = 0.0,
                atmo: AtmosphereParams = ISA) -> float:
    return knots_to_ms(tas_kn) / speed_of_sound(fl_to_metres(fl), delta_t, atmo)


def mach_to_tas(mach: float, fl: float, delta_t: float = 0.0,
                atmo: AtmosphereParams = ISA) -> float:
    return ms_to_knots(mach * speed_of_sound(fl_to_metres(fl), delta_t, atmo))


def crossover_fl(cas_kn: float, mach: float, lo_fl: float = 0.0, hi_fl: float = 660.0,
                 atmo: AtmosphereParams = ISA) -> float:
    """Flight level where the constant-CAS and constant-Mach schedules meet.

    Below the crossover the CAS schedule gives the lower Mach; above it the
    Mach schedule gives the lower CAS. Bisection on the TAS difference.
    """
    def gap(fl: float) -> float:
        try:
            return cas_to_tas(cas_kn, fl, 0.0, atmo) - mach_to_tas(mach, fl, 0.0, atmo)
        except SpeedDomainError:
            return math.inf  # CAS schedule unreachable: definitely above crossover

    lo, hi = lo_fl, hi_fl
    if gap(lo) >= 0.0:
        return lo
    if gap(hi) <= 0.0:
        return hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def wind_at(wind, p: tuple[float, float, float], t: int | None = None
            ) -> tuple[float, float, float, bool]:
    """Nearest-lattice-node wind lookup.

    Returns (u kn, v kn, delta_t K, extrapolated). Nearest in each axis
    independently; ties break toward the lower lattice index. Queries
    outside the lattice clamp to the boundary and set the flag.
    """
    lat, lon, fl = p
    extrapolated = (
        not wind.lats[0] <= lat <= wind.lats[-1]
        or not wind.lons[0] <= lon <= wind.lons[-1]
        or not wind.levels[0] <= fl <= wind.levels[-1]
    )
    i = _nearest_index(wind.lats, lat)
    j = _nearest_index(wind.lons, lon)
    k = _nearest_index(wind.levels, fl)
    return (
        float(wind.u[i][j][k]),
        float(wind.v[i][j][k]),
        float(wind.temperature_offset[i][j][k]),
        extrapolated,
    )


def _nearest_index(axis, value: float) -> int:
    """Index of the axis node nearest to value; lower index wins ties."""
    best, best_d = 0, abs(axis[0] - value)
    for idx in range(1, len(axis)):
        d = abs(axis[idx] - value)
        if d < best_d:  # strict: earlier index kept on ties
            best, best_d = idx, d
    return best
