import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from airtwin.metrics import CalibrationCurve, MetricError, calibration, crps, ks_distance, wasserstein1


# --- brute-force oracles ------------------------------------------------------


def ks_oracle(a, b):
    """Evaluate both ECDFs at every sample point, track the largest gap."""
    best = 0.0
    for x in list(a) + list(b):
        fa = sum(1 for v in a if v <= x) / len(a)
        fb = sum(1 for v in b if v <= x) / len(b)
        best = max(best, abs(fa - fb))
    return best


def w1_oracle(a, b):
    """Stepwise integration of |ECDF difference| over pooled breakpoints."""
    pts = sorted(list(a) + list(b))
    total = 0.0
    for x0, x1 in zip(pts, pts[1:]):
        fa = sum(1 for v in a if v <= x0) / len(a)
        fb = sum(1 for v in b if v <= x0) / len(b)
        total += abs(fa - fb) * (x1 - x0)
    return total


def crps_oracle(ensemble, truth):
    n = len(ensemble)
    t1 = sum(abs(x - truth) for x in ensemble) / n
    t2 = sum(abs(x - y) for x in ensemble for y in ensemble) / (2.0 * n * n)
    return t1 - t2


# --- ks ------------------------------------------------------------------


def test_ks_identical_samples_is_zero():
    assert ks_distance([1.0, 2.0, 5.0], [1.0, 2.0, 5.0]) == 0.0


def test_ks_spec_value():
    assert ks_distance([1, 2, 3], [1, 2, 4]) == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_ks_disjoint_supports():
    assert ks_distance([0.0, 1.0], [5.0, 6.0]) == 1.0


def test_ks_empty_rejected():
    with pytest.raises(MetricError):
        ks_distance([], [1.0])


def test_ks_matches_oracle_on_random_pairs(rng):
    for _ in range(300):
        a = rng.normal(0, 1, rng.integers(1, 40))
        b = rng.normal(rng.uniform(-1, 1), 1, rng.integers(1, 40))
        assert ks_distance(a, b) == pytest.approx(ks_oracle(a, b), abs=1e-9)


def test_ks_symmetric_and_bounded(rng):
    a = rng.normal(0, 1, 25)
    b = rng.normal(0.5, 2, 31)
    d = ks_distance(a, b)
    assert 0.0 <= d <= 1.0
    assert d == ks_distance(b, a)


# --- wasserstein ---------------------------------------------------------


def test_w1_identical_is_zero():
    assert wasserstein1([3.0, 1.0], [1.0, 3.0]) == 0.0


def test_w1_spec_value():
    assert wasserstein1([0.0, 1.0], [1.0, 2.0]) == pytest.approx(1.0, abs=1e-12)


def test_w1_equal_sizes_sorted_difference(rng):
    for _ in range(100):
        n = rng.integers(1, 30)
        a, b = rng.normal(0, 2, n), rng.normal(1, 1, n)
        oracle = np.mean(np.abs(np.sort(a) - np.sort(b)))
        assert wasserstein1(a, b) == pytest.approx(oracle, rel=1e-9)


def test_w1_matches_oracle_unequal_sizes(rng):
    for _ in range(200):
        a = rng.normal(0, 1, rng.integers(1, 40))
        b = rng.normal(0.3, 1.5, rng.integers(1, 40))
        assert wasserstein1(a, b) == pytest.approx(w1_oracle(a, b), abs=1e-9)


@given(st.lists(st.floats(-1e4, 1e4), min_size=1, max_size=30),
       st.floats(-1e3, 1e3))
@settings(max_examples=100, deadline=None)
def test_w1_translation_property(a, c):
    shifted = [x + c for x in a]
    assert wasserstein1(a, shifted) == pytest.approx(abs(c), abs=1e-7)


def test_w1_triangle_inequality_spot_check(rng):
    for _ in range(50):
        a, b, c = (rng.normal(rng.uniform(-2, 2), 1, 20) for _ in range(3))
        assert wasserstein1(a, c) <= wasserstein1(a, b) + wasserstein1(b, c) + 1e-9


# --- crps ------------------------------------------------------------------


def test_crps_single_member_reduces_to_mae():
    assert crps([4.0], 1.5) == pytest.approx(2.5, abs=1e-12)


def test_crps_spec_value():
    assert crps([0.0, 2.0], 1.0) == pytest.approx(0.5, abs=1e-12)


def test_crps_zero_when_all_members_equal_truth():
    assert crps([2.0, 2.0, 2.0], 2.0) == 0.0


def test_crps_non_negative_and_matches_oracle(rng):
    for _ in range(200):
        ens = rng.normal(0, 1, rng.integers(1, 50))
        truth = rng.normal(0, 1)
        got = crps(ens, truth)
        assert got >= -1e-12
        assert got == pytest.approx(crps_oracle(list(ens), truth), rel=1e-9, abs=1e-12)


def test_crps_empty_rejected():
    with pytest.raises(MetricError):
        crps([], 0.0)


# --- calibration ------------------------------------------------------------


def test_calibration_well_specified_coverage(rng):
    pairs = []
    for _ in range(4000):
        mu, sigma = rng.uniform(-5, 5), rng.uniform(0.5, 2.0)
        ens = rng.normal(mu, sigma, 120)
        truth = rng.normal(mu, sigma)
        pairs.append((ens, truth))
    curve = calibration(pairs, (0.025, 0.5, 0.975))
    for nominal, empirical in zip(curve.nominal_quantiles, curve.empirical_coverage):
        assert abs(empirical - nominal) < 0.03


def test_calibration_collapsed_ensembles_cover_nothing(rng):
    pairs = [(np.zeros(10), 1.0) for _ in range(50)]
    curve = calibration(pairs, (0.025, 0.5, 0.975))
    assert curve.empirical_coverage == (0.0, 0.0, 0.0)
    assert curve.miscalibration() == 0.975


def test_calibration_input_validation():
    with pytest.raises(MetricError):
        calibration([])
    with pytest.raises(MetricError):
        calibration([([1.0], 0.0)], (0.5, 0.4))
    with pytest.raises(MetricError):
        calibration([([1.0], 0.0)], (0.0, 0.5))


def test_calibration_curve_invariants():
    with pytest.raises(MetricError):
        CalibrationCurve((0.1, 0.9), (0.5, 0.2))  # not monotone
    c = CalibrationCurve((0.1, 0.9), (0.15, 0.8))
    assert c.miscalibration() == pytest.approx(0.1, abs=1e-12)
