"""Statistical distances and probabilistic scores over empirical samples.

All functions are pure, operate on 1-D samples and support unequal sizes
where meaningful (Wasserstein via the ECDF integral).
"""

import numpy as np

from .result import CalibrationCurve, MetricError


def ks_distance(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov distance: sup-norm of the ECDF gap."""
    a = _samples(a, "a")
    b = _samples(b, "b")
    pooled = np.concatenate([a, b])
    pooled.sort(kind="mergesort")
    cdf_a = np.searchsorted(np.sort(a), pooled, side="right") / a.size
    cdf_b = np.searchsorted(np.sort(b), pooled, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def wasserstein1(a, b) -> float:
    """1-D earth-mover distance: integral of |ECDF_a - ECDF_b|.

    Computed over the pooled breakpoints so unequal sample sizes are
    supported; for equal sizes this equals mean |sorted(a) - sorted(b)|.
    """
    a = _samples(a, "a")
    b = _samples(b, "b")
    pooled = np.concatenate([a, b])
    pooled.sort(kind="mergesort")
    deltas = np.diff(pooled)
    cdf_a = np.searchsorted(np.sort(a), pooled[:-1], side="right") / a.size
    cdf_b = np.searchsorted(np.sort(b), pooled[:-1], side="right") / b.size
    return float(np.sum(np.abs(cdf_a - cdf_b) * deltas))


def crps(ensemble, truth: float) -> float:
    """Empirical continuous ranked probability score.

    crps = mean|x_i - y| - 0.5 * mean_{i,j}|x_i - x_j| (classic estimator,
    i=j terms included); reduces to |x - y| for a single member.
    """
    x = _samples(ensemble, "ensemble")
    term1 = float(np.mean(np.abs(x - truth)))
    xs = np.sort(x)
    n = xs.size
    # mean pairwise |xi - xj| without the O(n^2) matrix:
    # sum_{i<j}(xs[j]-xs[i]) = sum_k xs[k] * (2k - n + 1)
    coeff = 2.0 * np.arange(n) - n + 1.0
    pair_sum = float(np.dot(coeff, xs))  # = sum over ordered pairs of |xi - xj| / 1
    term2 = pair_sum / (n * n)
    return term1 - term2


def calibration(ensembles_and_truths, quantiles=(0.025, 0.5, 0.975)) -> CalibrationCurve:
    """Empirical coverage of ensemble quantiles over (ensemble, truth) pairs.

    coverage[q] = fraction of truths <= the linear-interpolated order
    statistic of their ensemble at nominal quantile q.
    """
    pairs = list(ensembles_and_truths)
    if not pairs:
        raise MetricError("calibration needs at least one (ensemble, truth) pair")
    qs = list(quantiles)
    if any(not 0.0 < q < 1.0 for q in qs) or any(b <= a for a, b in zip(qs, qs[1:])):
        raise MetricError("quantiles must be strictly increasing within (0, 1)")
    counts = np.zeros(len(qs))
    for ensemble, truth in pairs:
        x = _samples(ensemble, "ensemble")
        thresholds = np.quantile(x, qs)  # linear-interpolated order statistics
        counts += (truth <= thresholds)
    coverage = counts / len(pairs)
    return CalibrationCurve(tuple(qs), tuple(float(c) for c in coverage))


def _samples(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise MetricError(f"sample set {name!r} is empty")
    return arr
