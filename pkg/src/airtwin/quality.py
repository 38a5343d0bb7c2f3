"""Data-quality checks over curated scenarios.

Covers operational-domain membership (explicit bounds plus a union of
per-cluster convex hulls), hypercube coverage, the five quality dimensions
(completeness, timeliness, uniqueness, consistency, validity) and the
'descend when ready' annotation repair driven by observed pilot delays.
"""

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .airspace import Clearance, Scenario
from .geo import convex_hull, point_in_hull

QUALITY_DIMENSIONS = ("completeness", "timeliness", "uniqueness", "consistency", "validity")

DEFAULT_BOUNDS = {"fl": (195.0, 660.0)}
DEFAULT_HULL_PAIRS = (("lat", "lon"), ("fl", "ground_speed"))


class QualityError(ValueError):
    pass


@dataclass(frozen=True)
class DomainModel:
    """Operational-domain membership model: explicit per-feature bounds
    plus unions of 2-D convex hulls over configured feature pairs."""

    explicit_bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))
    hulls: dict = field(default_factory=dict)  # (feat_x, feat_y) -> list of hull vertex lists

    def __post_init__(self):
        for feat, (lo, hi) in self.explicit_bounds.items():
            if lo >= hi:
                raise QualityError(f"bound for {feat!r}: min {lo} not below max {hi}")


def in_domain(record: dict, dm: DomainModel) -> tuple[bool, list[str]]:
    """Operational-domain membership with reasons for every rejection.

    A record is in-domain when every bounded feature lies within its
    explicit bounds and, for every hull-covered feature pair, the point
    falls inside at least one cluster hull (boundary inclusive).
    """
    reasons = []
    for feat, (lo, hi) in dm.explicit_bounds.items():
        if feat not in record:
            raise QualityError(f"record missing bounded feature {feat!r}")
        v = float(record[feat])
        if v < lo:
            reasons.append(f"{feat} {v:g} below {lo:g}")
        elif v > hi:
            reasons.append(f"{feat} {v:g} above {hi:g}")
    for pair, hulls in dm.hulls.items():
        fx, fy = pair
        if fx not in record or fy not in record:
            raise QualityError(f"record missing hull feature {fx!r}/{fy!r}")
        x, y = float(record[fx]), float(record[fy])
        if not any(point_in_hull(x, y, hull) for hull in hulls):
            reasons.append(f"({fx}, {fy}) = ({x:g}, {y:g}) outside every cluster hull")
    return not reasons, reasons


def kmeans(points: np.ndarray, k: int, seed: int, n_iter: int = 50) -> np.ndarray:
    """Plain seeded Lloyd's iterations; returns per-point labels."""
    rng = np.random.default_rng(seed)
    n = points.shape[0]
    centres = points[rng.choice(n, size=k, replace=False)].astype(float)
    labels = np.zeros(n, dtype=int)
    for _ in range(n_iter):
        d2 = ((points[:, None, :] - centres[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        if np.array_equal(new_labels, labels) and _ > 0:
            break
        labels = new_labels
        for c in range(k):
            mask = labels == c
            if mask.any():
                centres[c] = points[mask].mean(axis=0)
    return labels


def build_hulls(records, k: int, seed: int = 0,
                feature_pairs=DEFAULT_HULL_PAIRS,
                explicit_bounds=None) -> DomainModel:
    """Cluster the records (seeded k-means) and wrap each cluster in a
    convex hull, per configured feature pair."""
    if k < 1:
        raise QualityError("cluster count k must be >= 1")
    records = list(records)
    if len(records) < k:
        raise QualityError(f"need >= k={k} records, got {len(records)}")
    hulls: dict = {}
    for pair in feature_pairs:
        fx, fy = pair
        pts = np.array([[float(r[fx]), float(r[fy])] for r in records])
        labels = kmeans(pts, k, seed)
        pair_hulls = []
        for c in range(k):
            cluster = pts[labels == c]
            if cluster.shape[0] == 0:
                continue
            pair_hulls.append(convex_hull([tuple(p) for p in cluster]))
        hulls[(fx, fy)] = pair_hulls
    return DomainModel(
        explicit_bounds=dict(DEFAULT_BOUNDS if explicit_bounds is None else explicit_bounds),
        hulls=hulls,
    )


def hypercube_coverage(records, bins: dict, bounds: dict | None = None
                       ) -> tuple[float, list[tuple]]:
    """Fraction of occupied hypercube cells over the bounded feature box.

    bins: feature -> bin count (>= 1). Records outside the bounds are
    ignored. Returns (fill fraction, list of empty cell indices).
    """
    feats = sorted(bins)
    for f, b in bins.items():
        if b < 1:
            raise QualityError(f"bins for {f!r} must be >= 1")
    records = list(records)
    if bounds is None:
        bounds = {}
        for f in feats:
            vals = [float(r[f]) for r in records]
            if not vals:
                raise QualityError("cannot infer bounds from zero records")
            bounds[f] = (min(vals), max(vals))
    occupied: set[tuple] = set()
    for r in records:
        idx = []
        ok = True
        for f in feats:
            lo, hi = bounds[f]
            v = float(r[f])
            if not lo <= v <= hi:
                ok = False
                break
            n = bins[f]
            i = n - 1 if v == hi else int((v - lo) / (hi - lo) * n) if hi > lo else 0
            idx.append(min(n - 1, max(0, i)))
        if ok:
            occupied.add(tuple(idx))
    total = 1
    for f in feats:
        total *= bins[f]
    empties = []
    if total <= 100_000:  # enumerating empties is only useful at small scale
        grids = np.ndindex(*[bins[f] for f in feats])
        empties = [cell for cell in grids if cell not in occupied]
    return len(occupied) / total, empties


@dataclass(frozen=True)
class DimensionFinding:
    dimension: str
    passed: bool
    offending: tuple[str, ...]  # record ids; every failure cites >= 1
    statistic: float
    detail: str = ""


@dataclass(frozen=True)
class QualityReport:
    findings: tuple[DimensionFinding, ...]

    def passed(self) -> bool:
        return all(f.passed for f in self.findings)

    def failures(self) -> list[DimensionFinding]:
        return [f for f in self.findings if not f.passed]

    def by_dimension(self, dim: str) -> DimensionFinding:
        for f in self.findings:
            if f.dimension == dim:
                return f
        raise KeyError(dim)

    def to_json(self, path: str | Path | None = None) -> str:
        doc = [
            {"dimension": f.dimension, "passed": f.passed, "offending": list(f.offending),
             "statistic": f.statistic, "detail": f.detail}
            for f in self.findings
        ]
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def quality_scan(scenario: Scenario, freshness_threshold_s: int | None = None,
                 consistency_tolerance_fl: float = 10.0,
                 validity_fl_range: tuple[float, float] = (0.0, 660.0),
                 validity_gs_range: tuple[float, float] = (0.0, 800.0)) -> QualityReport:
    """Run the five data-quality dimension checks; findings, not exceptions.

    completeness: every flight carries both radar and clearance data;
    timeliness: the largest radar gap stays within the freshness threshold
    (default: one blip interval); uniqueness: no duplicated flight or
    clearance identifiers; consistency: selected vs recorded flight level
    divergence within tolerance while level; validity: field ranges.
    """
    if freshness_threshold_s is None:
        freshness_threshold_s = scenario.blip_seconds
    findings = []

    missing = []
    clearance_callsigns = {c.callsign for c in scenario.clearances}
    for cs in sorted(scenario.flights):
        has_radar = bool(scenario.radar.get(cs))
        has_clearance = cs in clearance_callsigns
        if not has_radar or not has_clearance:
            missing.append(cs)
    findings.append(DimensionFinding(
        "completeness", not missing, tuple(missing), float(len(missing)),
        "flights need both radar and clearances to emulate and assess them",
    ))

    worst_gap, gap_offenders = 0, []
    for cs, after_t, gap in scenario.gap_log:
        worst_gap = max(worst_gap, gap)
        if gap > freshness_threshold_s:
            gap_offenders.append(f"{cs}@t={after_t}(gap={gap}s)")
    findings.append(DimensionFinding(
        "timeliness", not gap_offenders, tuple(gap_offenders), float(worst_gap),
        f"largest radar gap vs freshness threshold {freshness_threshold_s}s",
    ))

    dup_ids = []
    seen = set()
    for c in scenario.clearances:
        if c.id in seen:
            dup_ids.append(f"clearance:{c.id}")
        seen.add(c.id)
    # duplicated callsign tracks surface as one callsign with interleaved
    # positions: flag implausible jumps between consecutive blips
    for cs, blips in sorted(scenario.radar.items()):
        for a, b in zip(blips, blips[1:]):
            dt = b.time - a.time
            implied_kn = _implied_speed_kn(a, b, dt)
            if implied_kn > 1200.0:
                dup_ids.append(f"track:{cs}@t={b.time}(implied {implied_kn:.0f}kn)")
    findings.append(DimensionFinding(
        "uniqueness", not dup_ids, tuple(dup_ids), float(len(dup_ids)),
        "duplicate identifiers or one callsign shared by two physical tracks",
    ))

    inconsistent = []
    worst_div = 0.0
    sustain_s = 60  # a short selected/actual mismatch is normal pre-manoeuvre
    for cs, blips in sorted(scenario.radar.items()):
        run_start = None
        for a, b in zip(blips, blips[1:]):
            level = abs(b.fl - a.fl) < 1.0
            diverged = a.selected_fl is not None and \
                abs(a.fl - a.selected_fl) > consistency_tolerance_fl
            if level and diverged:
                if run_start is None:
                    run_start = a.time
                if a.time - run_start >= sustain_s:
                    div = abs(a.fl - a.selected_fl)
                    worst_div = max(worst_div, div)
                    inconsistent.append(f"{cs}@t={run_start}(|fl-selected|={div:.0f}FL)")
                    break
            else:
                run_start = None
    findings.append(DimensionFinding(
        "consistency", not inconsistent, tuple(inconsistent), worst_div,
        f"sustained divergence between selected and recorded flight level beyond "
        f"{consistency_tolerance_fl} FL",
    ))

    invalid = []
    for cs, blips in sorted(scenario.radar.items()):
        for b in blips:
            if not validity_fl_range[0] <= b.fl <= validity_fl_range[1]:
                invalid.append(f"{cs}@t={b.time}(fl={b.fl:g})")
            if not validity_gs_range[0] <= b.ground_speed <= validity_gs_range[1]:
                invalid.append(f"{cs}@t={b.time}(gs={b.ground_speed:g})")
            if not (-90.0 <= b.lat <= 90.0 and -180.0 <= b.lon < 180.0):
                invalid.append(f"{cs}@t={b.time}(position)")
    findings.append(DimensionFinding(
        "validity", not invalid, tuple(invalid), float(len(invalid)),
        "range/format conformance of radar fields",
    ))
    return QualityReport(tuple(findings))


def _implied_speed_kn(a, b, dt: float) -> float:
    from .geo import great_circle_distance_m
    if dt <= 0:
        return float("inf")
    return great_circle_distance_m(a.lat, a.lon, b.lat, b.lon) / dt / 0.514444


@dataclass(frozen=True)
class RelabelAudit:
    clearance_id: str
    callsign: str
    measured_delay_s: float | None
    action: str  # relabelled | unchanged | unreviewable

    def row(self) -> dict:
        return {"clearance_id": self.clearance_id, "callsign": self.callsign,
                "measured_delay_s": self.measured_delay_s, "action": self.action}


def relabel_when_ready(clearances, radar, delay_threshold_s: float = 30.0,
                       action_fl_drop: float = 2.0
                       ) -> tuple[list[Clearance], list[RelabelAudit]]:
    """Repair 'descend now' labels using observed pilot delays.

    A 'now' descent clearance whose measured delay (issue time to the
    first blip showing a sustained level drop) exceeds the threshold is
    relabelled 'when_ready'. Every decision is logged; clearances without
    subsequent radar are unreviewable and flagged.
    """
    corrected: list[Clearance] = []
    audit: list[RelabelAudit] = []
    for cl in clearances:
        is_descent = cl.kind == "level"
        blips = [b for b in radar.get(cl.callsign, ()) if b.time >= cl.issue_time]
        if is_descent and blips:
            is_descent = float(cl.value) < blips[0].fl - 1.0
        if cl.kind != "level" or cl.condition != "now" or not is_descent:
            corrected.append(cl)
            continue
        if not blips:
            corrected.append(cl)
            audit.append(RelabelAudit(cl.id, cl.callsign, None, "unreviewable"))
            continue
        fl0 = blips[0].fl
        delay = None
        for b in blips[1:]:
            if b.fl <= fl0 - action_fl_drop:
                delay = float(b.time - cl.issue_time)
                break
        if delay is None:
            corrected.append(cl)
            audit.append(RelabelAudit(cl.id, cl.callsign, None, "unreviewable"))
        elif delay > delay_threshold_s:
            corrected.append(replace(cl, condition="when_ready"))
            audit.append(RelabelAudit(cl.id, cl.callsign, delay, "relabelled"))
        else:
            corrected.append(cl)
            audit.append(RelabelAudit(cl.id, cl.callsign, delay, "unchanged"))
    return corrected, audit


def write_audit_log(audit, path: str | Path) -> None:
    """Append-only JSON-lines audit trail."""
    with open(path, "a", encoding="utf-8") as fh:
        for entry in audit:
            fh.write(json.dumps(entry.row(), sort_keys=True) + "\n")
