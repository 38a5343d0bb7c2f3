"""Probabilistic aircraft-performance model.

Per aircraft type and phase, the model stores a mean force curve (drag for
descent, thrust for climb) and a mean CAS schedule over a flight-level
grid, plus orthonormal correction shapes obtained by functional PCA. Curve
realisations are mean + weighted sums of the shapes; the weight vector
(alpha for force, beta for CAS, stacked jointly) follows a multivariate
Gaussian fitted per type. Cruise speeds come from a probability mass
function over observed CAS/Mach values.

All shipped coefficient tables are synthetic stand-ins for licensed
performance data and carry no real-aircraft claims.
"""

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

MODEL_FORMAT = "airtwin-performance-model"
MODEL_VERSION = 1

PHASES = ("descent", "climb")
SPEED_REGIMES = ("cas", "mach")

#: non-negative diagonal jitter allowed when factorising a covariance
COV_JITTER = 1e-8


class ModelError(ValueError):
    pass


def trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    """Quadrature weights giving the trapezoid rule as a plain dot product."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ModelError("grid must be a 1-D vector with >= 2 nodes")
    w = np.empty_like(grid)
    w[0] = (grid[1] - grid[0]) / 2.0
    w[-1] = (grid[-1] - grid[-2]) / 2.0
    w[1:-1] = (grid[2:] - grid[:-2]) / 2.0
    return w


@dataclass(frozen=True)
class FpcaBasis:
    """Mean function plus orthonormal components over a flight-level grid."""

    fl_grid: np.ndarray           # ascending flight levels
    mean: np.ndarray              # over fl_grid
    components: np.ndarray        # (n_components, |fl_grid|)
    quadrature_weights: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        grid = np.asarray(self.fl_grid, dtype=float)
        object.__setattr__(self, "fl_grid", grid)
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        comps = np.asarray(self.components, dtype=float)
        if comps.size == 0:
            comps = comps.reshape(0, grid.size)
        object.__setattr__(self, "components", comps)
        if self.quadrature_weights is None:
            object.__setattr__(self, "quadrature_weights", trapezoid_weights(grid))
        else:
            object.__setattr__(
                self, "quadrature_weights", np.asarray(self.quadrature_weights, dtype=float)
            )
        if np.any(np.diff(grid) <= 0):
            raise ModelError("fl_grid must be strictly ascending")
        if self.mean.shape != grid.shape:
            raise ModelError("mean length must match fl_grid")
        if self.components.shape[1] != grid.size:
            raise ModelError("component length must match fl_grid")
        if self.n_components > grid.size:
            raise ModelError("more components than grid nodes")
        gram = self.gram_matrix()
        if self.n_components and not np.allclose(gram, np.eye(self.n_components), atol=1e-8):
            raise ModelError("components are not orthonormal under the weighted inner product")

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    def gram_matrix(self) -> np.ndarray:
        return (self.components * self.quadrature_weights) @ self.components.T

    def reconstruct(self, weights) -> "CurveOnGrid":
        """Curve fl -> value for mean + sum_i weights_i * component_i."""
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (self.n_components,):
            raise ModelError(
                f"weight vector length {weights.size} != {self.n_components} components"
            )
        values = self.mean.copy()
        if self.n_components:
            values = values + weights @ self.components
        return CurveOnGrid(self.fl_grid, values)

    def project(self, curve_values: np.ndarray) -> np.ndarray:
        """Weighted inner products of (curve - mean) with each component."""
        resid = np.asarray(curve_values, dtype=float) - self.mean
        if self.n_components == 0:
            return np.zeros(0)
        return (self.components * self.quadrature_weights) @ resid


@dataclass(frozen=True)
class CurveOnGrid:
    """Piecewise-linear function of flight level."""

    fl_grid: np.ndarray
    values: np.ndarray

    def __call__(self, fl: float) -> float:
        return float(np.interp(fl, self.fl_grid, self.values))

    def at(self, fls) -> np.ndarray:
        return np.interp(fls, self.fl_grid, self.values)


@dataclass(frozen=True)
class WeightDistribution:
    """Joint Gaussian over the stacked (force, CAS) component weights."""

    mean: np.ndarray
    covariance: np.ndarray
    shrinkage_applied: bool = False

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.covariance, dtype=float)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        k = mean.size
        if cov.shape != (k, k):
            raise ModelError(f"covariance shape {cov.shape} != ({k}, {k})")
        if k and not np.allclose(cov, cov.T, atol=1e-10):
            raise ModelError("covariance must be symmetric")
        if k:
            try:
                np.linalg.cholesky(cov + COV_JITTER * np.eye(k))
            except np.linalg.LinAlgError as exc:
                raise ModelError("covariance not positive semi-definite") from exc

    @property
    def dim(self) -> int:
        return self.mean.size

    def sampling_matrix(self) -> np.ndarray:
        """PSD square root via eigendecomposition; exactly zero for a zero
        covariance so degenerate sampling returns the mean bit-for-bit."""
        if self.dim == 0:
            return np.zeros((0, 0))
        if not self.covariance.any():
            return np.zeros_like(self.covariance)
        vals, vecs = np.linalg.eigh(self.covariance)
        vals = np.clip(vals, 0.0, None)
        return vecs * np.sqrt(vals)


def sample_weights(dist: WeightDistribution, n: int, seed: int) -> np.ndarray:
    """Draw n weight vectors, deterministic in seed; shape (n, dim)."""
    if n < 1:
        raise ModelError("n must be >= 1")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, dist.dim))
    return dist.mean + z @ dist.sampling_matrix().T


def fit_fpca(curves, explained_variance_target: float = 0.95, n_folds: int = 5,
             rank_tol: float = 1e-10) -> FpcaBasis:
    """Fit mean and orthonormal principal shapes from sampled curves.

    curves: array (n_curves, |fl_grid|) all sampled on the same grid, plus
    the grid itself as `curves.fl_grid` or passed as (grid, matrix).
    The component count is the smallest one whose k-fold cross-validated
    explained variance reaches the target; identical curves yield a
    mean-only basis.
    """
    grid, data = _coerce_curves(curves)
    n, m = data.shape
    if n < 2:
        raise ModelError("need >= 2 curves to fit a basis")
    if not 0.0 < explained_variance_target <= 1.0:
        raise ModelError("explained_variance_target must be in (0, 1]")

    w = trapezoid_weights(grid)
    mean = data.mean(axis=0)
    centred = data - mean
    comps, evals = _weighted_pca(centred, w, rank_tol)
    rank = comps.shape[0]
    if rank == 0:
        return FpcaBasis(grid, mean, np.zeros((0, m)), w)

    if explained_variance_target >= 1.0:
        n_keep = rank
    else:
        cv_ev = _cv_explained_variance(data, grid, w, rank, n_folds, rank_tol)
        reaching = np.nonzero(cv_ev >= explained_variance_target)[0]
        n_keep = int(reaching[0]) + 1 if reaching.size else rank

    return FpcaBasis(grid, mean, comps[:n_keep], w)


def _coerce_curves(curves) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(curves, tuple) and len(curves) == 2:
        grid, data = curves
    else:
        data = curves
        grid = getattr(curves, "fl_grid", None)
        if grid is None:
            raise ModelError("pass curves as (fl_grid, matrix)")
    return np.asarray(grid, dtype=float), np.atleast_2d(np.asarray(data, dtype=float))


def _weighted_pca(centred: np.ndarray, w: np.ndarray, rank_tol: float):
    """Eigenvectors of the weighted covariance, orthonormal under <.,.>_w."""
    n = centred.shape[0]
    sw = np.sqrt(w)
    b = centred * sw  # rows now live in Euclidean geometry
    _, svals, vt = np.linalg.svd(b / np.sqrt(n), full_matrices=False)
    evals = svals**2
    keep = evals > rank_tol * max(1.0, evals[0] if evals.size else 1.0)
    comps = vt[keep] / sw  # back to the weighted geometry
    return comps, evals[keep]


def _cv_explained_variance(data, grid, w, max_rank, n_folds, rank_tol) -> np.ndarray:
    """Out-of-fold explained variance for 1..max_rank components."""
    n = data.shape[0]
    folds = max(2, min(n_folds, n))
    idx = np.arange(n)
    sse = np.zeros(max_rank)
    sst = 0.0
    for f in range(folds):
        test = idx[f::folds]
        train = np.setdiff1d(idx, test)
        if train.size < 2 or test.size == 0:
            continue
        mean_tr = data[train].mean(axis=0)
        comps, _ = _weighted_pca(data[train] - mean_tr, w, rank_tol)
        resid0 = data[test] - mean_tr
        sst += float(np.sum(resid0 * resid0 * w))
        r = min(max_rank, comps.shape[0])
        pw = comps * w
        scores = resid0 @ pw.T  # (n_test, r_avail)
        recon = np.zeros_like(resid0)
        for k in range(max_rank):
            if k < r:
                recon = recon + np.outer(scores[:, k], comps[k])
            err = resid0 - recon
            sse[k] += float(np.sum(err * err * w))
    if sst <= 0.0:
        return np.ones(max_rank)
    return 1.0 - sse / sst


def fit_weights(force_curves, cas_curves, basis_force: FpcaBasis, basis_cas: FpcaBasis,
                jitter: float = COV_JITTER) -> WeightDistribution:
    """Project per-flight curve pairs onto the bases and fit a joint Gaussian.

    Closed-form maximum likelihood for a single Gaussian (the degenerate
    case of EM); covariance shrinkage (jitter on the diagonal) is applied
    and flagged when there are fewer flights than weight dimensions.
    """
    _, force = _coerce_curves(force_curves)
    _, cas = _coerce_curves(cas_curves)
    if force.shape[0] != cas.shape[0]:
        raise ModelError("force and CAS curve sets must pair one-to-one")
    scores = np.hstack([
        np.vstack([basis_force.project(c) for c in force]),
        np.vstack([basis_cas.project(c) for c in cas]),
    ])
    n, k = scores.shape
    mean = scores.mean(axis=0)
    if n > 1:
        centred = scores - mean
        cov = centred.T @ centred / n  # MLE
    else:
        cov = np.zeros((k, k))
    shrink = n <= k
    if shrink:
        cov = cov + jitter * np.eye(k)
    return WeightDistribution(mean, cov, shrinkage_applied=shrink)


@dataclass(frozen=True)
class PerformanceModel:
    """Everything needed to realise trajectories for one type and phase."""

    aircraft_type: str
    phase: str                      # descent: force = drag; climb: force = thrust
    force_basis: FpcaBasis
    cas_basis: FpcaBasis
    weights: WeightDistribution
    cruise_pmf: dict                # {(regime, value): probability}
    mass: float                     # kg
    esf_params: dict                # {"constant_cas": c, "constant_mach": c}; f(M)=1/(1+c M^2)
    fuel_coeffs: dict               # {"cf1": kg/(N s), "cf2": kn}
    opposing_force: np.ndarray      # over fl_grid: idle thrust (descent) / drag (climb), N
    table_force: np.ndarray         # uncorrected baseline force table, N
    table_cas: np.ndarray           # uncorrected baseline CAS schedule, kn

    def __post_init__(self):
        if self.phase not in PHASES:
            raise ModelError(f"phase must be one of {PHASES}")
        if self.mass <= 0:
            raise ModelError("mass must be positive")
        if not np.array_equal(self.force_basis.fl_grid, self.cas_basis.fl_grid):
            raise ModelError("force and CAS bases must share one fl_grid")
        for name in ("opposing_force", "table_force", "table_cas"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            if arr.shape != self.force_basis.fl_grid.shape:
                raise ModelError(f"{name} must be sampled on fl_grid")
        if self.weights.dim != self.force_basis.n_components + self.cas_basis.n_components:
            raise ModelError("weight distribution dimension != n_alpha + n_beta")
        if self.cruise_pmf:
            total = sum(self.cruise_pmf.values())
            if abs(total - 1.0) > 1e-9:
                raise ModelError(f"cruise PMF sums to {total}, expected 1")
            for (regime, _v), p in self.cruise_pmf.items():
                if regime not in SPEED_REGIMES:
                    raise ModelError(f"cruise PMF regime {regime!r} unknown")
                if p < 0:
                    raise ModelError("cruise PMF probabilities must be >= 0")

    @property
    def fl_grid(self) -> np.ndarray:
        return self.force_basis.fl_grid

    @property
    def n_alpha(self) -> int:
        return self.force_basis.n_components

    @property
    def n_beta(self) -> int:
        return self.cas_basis.n_components

    def split_weights(self, w) -> tuple[np.ndarray, np.ndarray]:
        w = np.asarray(w, dtype=float)
        return w[: self.n_alpha], w[self.n_alpha:]

    def force_curve(self, w) -> CurveOnGrid:
        return self.force_basis.reconstruct(self.split_weights(w)[0])

    def cas_curve(self, w) -> CurveOnGrid:
        return self.cas_basis.reconstruct(self.split_weights(w)[1])

    def mean_weights(self) -> np.ndarray:
        return self.weights.mean.copy()

    def esf_coefficient(self, regime: str) -> float:
        key = "constant_cas" if regime == "cas" else "constant_mach"
        return float(self.esf_params[key])

    def with_weights(self, dist: WeightDistribution) -> "PerformanceModel":
        return replace(self, weights=dist)


def sample_cruise(pm: PerformanceModel, seed: int) -> tuple[str, float]:
    """Inverse-CDF draw of a (regime, speed) cruise entry from the PMF."""
    if not pm.cruise_pmf:
        raise ModelError("cruise PMF is empty")
    entries = sorted(pm.cruise_pmf.items(), key=lambda kv: (kv[0][0], kv[0][1]))
    u = np.random.default_rng(seed).random()
    acc = 0.0
    for (regime, value), p in entries:
        acc += p
        if u < acc:
            return regime, float(value)
    return entries[-1][0][0], float(entries[-1][0][1])


def cruise_mode(pm: PerformanceModel) -> tuple[str, float]:
    """Most probable cruise entry (deterministic tie-break on the key)."""
    if not pm.cruise_pmf:
        raise ModelError("cruise PMF is empty")
    (regime, value), _ = max(
        sorted(pm.cruise_pmf.items(), key=lambda kv: (kv[0][0], kv[0][1])),
        key=lambda kv: kv[1],
    )
    return regime, float(value)


# --- serialisation ----------------------------------------------------------


def model_to_document(pm: PerformanceModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "aircraft_type": pm.aircraft_type,
        "phase": pm.phase,
        "fl_grid": pm.fl_grid.tolist(),
        "force_mean": pm.force_basis.mean.tolist(),
        "force_components": pm.force_basis.components.tolist(),
        "cas_mean": pm.cas_basis.mean.tolist(),
        "cas_components": pm.cas_basis.components.tolist(),
        "weight_mean": pm.weights.mean.tolist(),
        "weight_covariance": pm.weights.covariance.tolist(),
        "shrinkage_applied": pm.weights.shrinkage_applied,
        "cruise_pmf": [
            {"regime": r, "value": v, "p": p} for (r, v), p in sorted(pm.cruise_pmf.items())
        ],
        "mass": pm.mass,
        "esf_params": pm.esf_params,
        "fuel_coeffs": pm.fuel_coeffs,
        "opposing_force": pm.opposing_force.tolist(),
        "table_force": pm.table_force.tolist(),
        "table_cas": pm.table_cas.tolist(),
    }


def model_from_document(doc: dict) -> PerformanceModel:
    if doc.get("format") != MODEL_FORMAT:
        raise ModelError(f"unknown model format {doc.get('format')!r}")
    if int(doc.get("version", 0)) != MODEL_VERSION:
        raise ModelError(f"unsupported model version {doc.get('version')!r}")
    grid = np.asarray(doc["fl_grid"], dtype=float)
    force_basis = FpcaBasis(grid, np.asarray(doc["force_mean"]), np.asarray(doc["force_components"]))
    cas_basis = FpcaBasis(grid, np.asarray(doc["cas_mean"]), np.asarray(doc["cas_components"]))
    weights = WeightDistribution(
        np.asarray(doc["weight_mean"]), np.asarray(doc["weight_covariance"]),
        bool(doc.get("shrinkage_applied", False)),
    )
    pmf = {(e["regime"], float(e["value"])): float(e["p"]) for e in doc.get("cruise_pmf", [])}
    return PerformanceModel(
        aircraft_type=doc["aircraft_type"],
        phase=doc["phase"],
        force_basis=force_basis,
        cas_basis=cas_basis,
        weights=weights,
        cruise_pmf=pmf,
        mass=float(doc["mass"]),
        esf_params={k: float(v) for k, v in doc["esf_params"].items()},
        fuel_coeffs={k: float(v) for k, v in doc["fuel_coeffs"].items()},
        opposing_force=np.asarray(doc["opposing_force"]),
        table_force=np.asarray(doc["table_force"]),
        table_cas=np.asarray(doc["table_cas"]),
    )


def save_model(pm: PerformanceModel, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(model_to_document(pm), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_model(path: str | Path) -> PerformanceModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelError(f"{path}: cannot parse model document: {exc}") from exc
    return model_from_document(doc)
