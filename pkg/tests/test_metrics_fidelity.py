import numpy as np
import pytest

from airtwin.engine import sample_descent_profiles
from airtwin.metrics import MetricError, distribution_report, profiles_from_scenario
from airtwin.metrics.fidelity import MEASURES, profile_measures, relabel_transition
from airtwin.perf import WeightDistribution


def test_requires_population_floor(descent_model):
    profiles, _ = sample_descent_profiles(descent_model, 5, 360.0, 260.0, seed=0)
    with pytest.raises(MetricError, match="insufficient data"):
        distribution_report(descent_model, profiles, min_population=30)


def test_self_consistency_small(descent_model):
    """Model compared against its own draws: small distances everywhere."""
    test, _ = sample_descent_profiles(descent_model, 400, 360.0, 250.0, seed=10)
    rows, metrics = distribution_report(descent_model, test, seed=11, min_population=30)
    by_name = {m.name: m.value for m in metrics}
    for m in MEASURES:
        if f"fidelity.{m}.ks" in by_name:
            assert by_name[f"fidelity.{m}.ks"] < 0.12, m
    assert by_name["fidelity.generation.rejection_rate"] < 0.05


def test_zero_variance_model_against_its_own_mean(descent_model):
    pm = descent_model.with_weights(
        WeightDistribution(descent_model.weights.mean.copy(),
                           np.zeros_like(descent_model.weights.covariance)))
    # single-entry PMF so the cruise Mach cannot vary either
    object.__setattr__(pm, "cruise_pmf", {("mach", 0.78): 1.0})
    test, _ = sample_descent_profiles(pm, 40, 360.0, 250.0, seed=3)
    rows, metrics = distribution_report(pm, test, seed=4, min_population=10)
    for row in rows:
        assert row["ks_distance"] == pytest.approx(0.0, abs=1e-12)
        assert row["wasserstein_distance"] == pytest.approx(0.0, abs=1e-9)


def test_rows_shape_matches_measure_table(descent_model):
    test, _ = sample_descent_profiles(descent_model, 60, 370.0, 245.0, seed=7)
    rows, _ = distribution_report(descent_model, test, seed=8, min_population=10)
    assert {(r["measure"], r["transition"]) for r in rows} == {
        ("Calibrated Airspeed", "above"), ("Calibrated Airspeed", "below"),
        ("Rate of Descent", "above"), ("Rate of Descent", "below"),
        ("Time to Bottom of Descent", "-"),
    }
    for r in rows:
        assert 0.0 <= r["ks_distance"] <= 1.0
        assert r["wasserstein_distance"] >= 0.0


def test_profiles_from_scenario_extracts_descents(golden_scenario, descent_model):
    profiles = profiles_from_scenario(golden_scenario, descent_model)
    assert len(profiles) == 12
    for p in profiles:
        assert p.fls[0] > p.fls[-1] + 15.0
        assert np.all(np.abs(p.rocd_fpm) > 100.0)
        assert p.time_to_bottom > 0


def test_relabel_transition_consistent_between_populations(descent_model):
    gen, _ = sample_descent_profiles(descent_model, 10, 360.0, 250.0, seed=2)
    relabelled = [relabel_transition(descent_model, p) for p in gen]
    for p in relabelled:
        assert 100.0 <= p.transition_fl <= 400.0


def test_profile_measures_split_by_transition(descent_model):
    gen, _ = sample_descent_profiles(descent_model, 30, 360.0, 250.0, seed=9)
    pools = profile_measures(gen)
    assert pools["cas_above"].size > 0
    assert pools["cas_below"].size > 0
    assert pools["ttb"].size == 30
    # above-transition CAS derives from cruise Mach: lower than schedule CAS
    assert pools["cas_above"].mean() < pools["cas_below"].mean()
