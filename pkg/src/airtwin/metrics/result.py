"""Metric evidence atoms and their report formats.

Every validation quantity the assurance case can cite is carried as a
MetricResult; reports serialise to CSV and JSON with the stable column
contract name,value,units,population,lookahead,grouping,provenance.
"""

import csv
import fnmatch
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

LOOKAHEADS = ("blip_6s", "clearance_to_clearance", "none")

CSV_COLUMNS = ("name", "value", "units", "population", "lookahead", "grouping", "provenance")


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class MetricResult:
    name: str
    value: float
    units: str
    population: int
    lookahead: str = "none"
    grouping: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.name:
            raise MetricError("metric name must be non-empty")
        if not self.units:
            raise MetricError(f"metric {self.name}: units must be non-empty (use '1' for ratios)")
        if self.population < 1:
            raise MetricError(f"metric {self.name}: population must be >= 1")
        if self.lookahead not in LOOKAHEADS:
            raise MetricError(f"metric {self.name}: unknown lookahead {self.lookahead!r}")

    def row(self) -> dict:
        return {
            "name": self.name, "value": self.value, "units": self.units,
            "population": self.population, "lookahead": self.lookahead,
            "grouping": json.dumps(self.grouping, sort_keys=True),
            "provenance": json.dumps(self.provenance, sort_keys=True),
        }


class MetricStore:
    """Ordered collection of MetricResults with glob-selector lookup."""

    def __init__(self, results=()):
        self._results: list[MetricResult] = []
        for r in results:
            self.add(r)

    def add(self, result: MetricResult) -> None:
        self._results.append(result)

    def extend(self, results) -> None:
        for r in results:
            self.add(r)

    def __iter__(self):
        return iter(self._results)

    def __len__(self):
        return len(self._results)

    def select(self, selector: str) -> list[MetricResult]:
        return [r for r in self._results if fnmatch.fnmatchcase(r.name, selector)]

    def names(self) -> list[str]:
        return [r.name for r in self._results]

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            for r in self._results:
                writer.writerow(r.row())

    def save_json(self, path: str | Path) -> None:
        doc = [r.row() for r in self._results]
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "MetricStore":
        path = Path(path)
        if path.suffix.lower() == ".csv":
            with open(path, newline="", encoding="utf-8") as fh:
                rows = list(csv.DictReader(fh))
        else:
            rows = json.loads(path.read_text(encoding="utf-8"))
        store = cls()
        for row in rows:
            store.add(MetricResult(
                name=row["name"], value=float(row["value"]), units=row["units"],
                population=int(row["population"]), lookahead=row.get("lookahead", "none"),
                grouping=_maybe_json(row.get("grouping", "{}")),
                provenance=_maybe_json(row.get("provenance", "{}")),
            ))
        return store


def _maybe_json(cell) -> dict:
    if isinstance(cell, dict):
        return cell
    return json.loads(cell) if cell else {}


def digest_of(obj) -> str:
    """Provenance digest: sha256 over the canonical JSON encoding."""
    body = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(body.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class CalibrationCurve:
    """PP-plot data: nominal ensemble quantiles vs empirical coverage."""

    nominal_quantiles: tuple[float, ...]
    empirical_coverage: tuple[float, ...]

    def __post_init__(self):
        if len(self.nominal_quantiles) != len(self.empirical_coverage):
            raise MetricError("quantile and coverage vectors differ in length")
        for q in self.nominal_quantiles:
            if not 0.0 < q < 1.0:
                raise MetricError(f"nominal quantile {q} outside (0, 1)")
        for a, b in zip(self.empirical_coverage, self.empirical_coverage[1:]):
            if b < a - 1e-12:
                raise MetricError("empirical coverage must be monotone non-decreasing")

    def miscalibration(self) -> float:
        """max |empirical - nominal| across the curve."""
        return max(abs(e - q) for q, e in zip(self.nominal_quantiles, self.empirical_coverage))
