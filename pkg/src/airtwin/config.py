"""Configuration: one optional TOML file with environment overrides.

Environment variables AIRTWIN_<SECTION>_<KEY> override file values, which
override the defaults below.
"""

import os
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .engine import EngineConfig

DEFAULTS = {
    "engine": {
        "sub_step_s": 1.0,
        "pilot_delay_s": 30,
        "min_descent_rocd_fpm": 500.0,
        "max_longitudinal_accel_ms2": 2.0,
        "plausibility_enabled": True,
        "max_resample_attempts": 50,
    },
    "service": {
        "host": "127.0.0.1",
        "port": 8080,
        "token": "",
        "digest_algorithm": "sha256",
    },
    "validate": {
        "min_profiles": 30,
        "seed": 0,
    },
    "quality": {
        "freshness_threshold_s": 6,
        "consistency_tolerance_fl": 10.0,
    },
    "bench": {
        "n_sectors": 10,
        "max_feedback": 2,
    },
}


def load_config(path: str | Path | None = None, env: dict | None = None) -> dict:
    """Merged configuration: defaults <- file <- environment."""
    cfg = {section: dict(values) for section, values in DEFAULTS.items()}
    if path is not None:
        with open(path, "rb") as fh:
            file_cfg = tomllib.load(fh)
        for section, values in file_cfg.items():
            cfg.setdefault(section, {}).update(values)
    env = os.environ if env is None else env
    for section, values in cfg.items():
        for key in list(values):
            var = f"AIRTWIN_{section.upper()}_{key.upper()}"
            if var in env:
                values[key] = _coerce(env[var], values[key])
    return cfg


def engine_config(cfg: dict) -> EngineConfig:
    e = cfg.get("engine", {})
    return EngineConfig(
        sub_step_s=float(e.get("sub_step_s", 1.0)),
        pilot_delay_s=int(e.get("pilot_delay_s", 30)),
        min_descent_rocd_fpm=float(e.get("min_descent_rocd_fpm", 500.0)),
        max_longitudinal_accel_ms2=float(e.get("max_longitudinal_accel_ms2", 2.0)),
        plausibility_enabled=bool(e.get("plausibility_enabled", True)),
        max_resample_attempts=int(e.get("max_resample_attempts", 50)),
    )


def _coerce(raw: str, like) -> object:
    if isinstance(like, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    return raw
