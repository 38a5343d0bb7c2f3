"""Validation and assurance metrics: accuracy, distributional fidelity,
calibration, safety and efficiency, all emitted as MetricResults."""

from .accuracy import (CuratedSample, compare_predictors, discretisation_error,
                       load_curated, mae_track_errors, replay_error_report)
from .distance import calibration, crps, ks_distance, wasserstein1
from .fidelity import (distribution_report, profile_measures, profiles_from_scenario,
                       transition_fl_estimate)
from .result import (CSV_COLUMNS, CalibrationCurve, MetricError, MetricResult,
                     MetricStore, digest_of)
from .safety import (AircraftPoint, efficiency_metrics, fuel_burn_kg, loss_of_separation,
                     pair_conflicts, technical_safety)

__all__ = [
    "AircraftPoint", "CSV_COLUMNS", "CalibrationCurve", "CuratedSample", "MetricError",
    "MetricResult", "MetricStore", "calibration", "compare_predictors", "crps",
    "digest_of", "discretisation_error", "distribution_report", "efficiency_metrics",
    "fuel_burn_kg", "ks_distance", "load_curated", "loss_of_separation",
    "mae_track_errors", "pair_conflicts", "profile_measures", "profiles_from_scenario",
    "replay_error_report", "technical_safety", "transition_fl_estimate", "wasserstein1",
]
