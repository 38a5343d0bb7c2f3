"""Unit conversions and physical constants shared across the package.

Conventions: flight levels are integers of hundreds of feet, angles are
decimal degrees, speeds are knots on external surfaces and m/s internally,
times are integer seconds since scenario epoch.
"""

METRES_PER_FOOT = 0.3048
METRES_PER_NM = 1852.0
FEET_PER_FL = 100.0
SECONDS_PER_MINUTE = 60.0

KNOT_TO_MS = METRES_PER_NM / 3600.0  # exact: 1852 m per NM
EARTH_RADIUS_M = 6_371_000.0  # spherical earth model

# Default radar sampling interval; scenarios may override (see Scenario).
DEFAULT_BLIP_SECONDS = 6


def fl_to_metres(fl: float) -> float:
    return fl * FEET_PER_FL * METRES_PER_FOOT


def metres_to_fl(h: float) -> float:
    return h / (FEET_PER_FL * METRES_PER_FOOT)


def knots_to_ms(v: float) -> float:
    return v * KNOT_TO_MS


def ms_to_knots(v: float) -> float:
    return v / KNOT_TO_MS


def ms_to_fpm(v: float) -> float:
    """Vertical speed m/s -> feet per minute."""
    return v / METRES_PER_FOOT * SECONDS_PER_MINUTE


def fpm_to_ms(v: float) -> float:
    return v * METRES_PER_FOOT / SECONDS_PER_MINUTE


def nm_to_metres(d: float) -> float:
    return d * METRES_PER_NM


def metres_to_nm(d: float) -> float:
    return d / METRES_PER_NM
