"""Benchmark harness: prompt rendering, response parsing, the self-
correction feedback loop, sweep execution and the sensitivity suite.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .generate import generate_sector
from .grid import (GRID_CELL_NM, BenchSpec, GridScenarioError, VerifyResult,
                   scenario_from_json, verify)
from .provider import ProviderTranscript, extract_block

PROMPT_TEMPLATES = {
    "default": (
        "You are generating an air-traffic training scenario on a discrete grid "
        "(one cell = {cell} NMI). Aircraft enter at the first cell of a route and "
        "advance exactly one cell per time step. Two aircraft interact while they "
        "occupy the same or neighbouring cells (8-neighbourhood) at the same step.\n"
        "Use only the routes of the sector below. Produce a scenario with exactly "
        "{n_aircraft} aircraft, duration {duration} steps and exactly "
        "{n_interactions} interactions.\n"
    ),
    "terse": (
        "Grid scenario task ({cell} NMI cells; one cell per step; interaction = "
        "same/adjacent cell at the same step). Place exactly {n_aircraft} aircraft "
        "on the given routes for {duration} steps with exactly {n_interactions} "
        "interactions.\n"
    ),
    "radio": (
        "Traffic scenario request. Grid spacing {cell} nautical miles; aircraft "
        "proceed one cell per step on published routes only. Required: traffic "
        "{n_aircraft}, duration {duration} steps, confliction count "
        "{n_interactions}. Read back as instructed below.\n"
    ),
}

RESPONSE_CONTRACT = (
    "Reply with exactly one fenced block labelled grid-scenario containing a JSON "
    "object with keys width, height, duration, routes, aircraft, where aircraft "
    "entries are {\"id\", \"route\", \"entry_step\"}. Keep the sector routes "
    "unchanged. No other fenced blocks.\n"
)


def sector_document(routes, width: int, height: int) -> dict:
    return {"width": width, "height": height,
            "routes": [[[x, y] for x, y in r] for r in routes]}


def render_prompt(sector_doc: dict, spec: BenchSpec, template: str = "default") -> str:
    head = PROMPT_TEMPLATES[template].format(cell=int(GRID_CELL_NM), **spec.to_dict())
    return (
        head
        + "\nSector:\n```sector\n" + json.dumps(sector_doc, sort_keys=True) + "\n```\n"
        + "\nParameters:\n```spec\n" + json.dumps(spec.to_dict(), sort_keys=True) + "\n```\n"
        + "\n" + RESPONSE_CONTRACT
    )


def parse_response(text: str):
    """Extract and validate the scenario block; anything else is rejected."""
    return scenario_from_json(extract_block(text, "grid-scenario"))


@dataclass
class TaskResult:
    sweep_value: int
    sector_index: int
    passed: bool
    passed_without_feedback: bool
    feedback_rounds: int
    diagnostics: tuple[str, ...]
    transcript: ProviderTranscript


@dataclass
class BenchResults:
    sweep_parameter: str
    tasks: list[TaskResult] = field(default_factory=list)

    def rows(self) -> list[dict]:
        by_value: dict[int, list[TaskResult]] = {}
        for t in self.tasks:
            by_value.setdefault(t.sweep_value, []).append(t)
        out = []
        for value in sorted(by_value):
            ts = by_value[value]
            out.append({
                self.sweep_parameter: value,
                "n_sectors": len(ts),
                "pass_rate": sum(t.passed for t in ts) / len(ts),
                "pass_rate_no_feedback": sum(t.passed_without_feedback for t in ts) / len(ts),
                "mean_feedback_rounds": sum(t.feedback_rounds for t in ts) / len(ts),
            })
        return out

    def overall_pass_rate(self, with_feedback: bool = True) -> float:
        if not self.tasks:
            return 0.0
        key = (lambda t: t.passed) if with_feedback else (lambda t: t.passed_without_feedback)
        return sum(map(key, self.tasks)) / len(self.tasks)

    def save_csv(self, path: str | Path) -> None:
        rows = self.rows()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)


def default_sweep() -> dict:
    """The benchmark shape used for traffic volume: aircraft 2..30 with
    duration 12, routes 7, intersections 7, averaged over 10 sectors."""
    return {
        "parameter": "n_aircraft",
        "values": list(range(2, 31)),
        "fixed": {"duration": 12, "n_routes": 7, "n_intersections": 7, "n_interactions": 0},
    }


def run_task(provider, sector_doc: dict, spec: BenchSpec, max_feedback: int = 2,
             template: str = "default") -> tuple[bool, bool, VerifyResult, ProviderTranscript]:
    """One conversation: prompt, verify, feed diagnostics back until pass
    or the feedback budget is spent."""
    prompt = render_prompt(sector_doc, spec, template)
    transcript = ProviderTranscript(prompt)
    messages = [{"role": "user", "content": prompt}]
    result = VerifyResult(False, ("no response",))
    passed_first = False
    for round_idx in range(max_feedback + 1):
        try:
            response = provider.complete(messages)
        except Exception as exc:  # transport failure recorded as task failure
            transcript.responses.append(f"<provider error: {exc}>")
            result = VerifyResult(False, (f"provider error: {exc}",))
            break
        transcript.responses.append(response)
        messages.append({"role": "assistant", "content": response})
        try:
            scenario = parse_response(response)
            result = verify(scenario, spec)
        except GridScenarioError as exc:
            result = VerifyResult(False, (f"unparseable response: {exc}",))
        if result.passed:
            if round_idx == 0:
                passed_first = True
            break
        if round_idx < max_feedback:
            feedback = (
                "The scenario does not satisfy the requested parameters:\n- "
                + "\n- ".join(result.diagnostics)
                + "\nPlease correct it. " + RESPONSE_CONTRACT
            )
            messages.append({"role": "user", "content": feedback})
    return result.passed, passed_first, result, transcript


def run_benchmark(provider, sweep: dict | None = None, n_sectors: int = 10,
                  max_feedback: int = 2, seed: int = 0,
                  template: str = "default") -> BenchResults:
    """Execute a parameter sweep against a provider over synthetic sectors."""
    sweep = sweep or default_sweep()
    parameter = sweep["parameter"]
    fixed = dict(sweep["fixed"])
    results = BenchResults(parameter)
    for value in sweep["values"]:
        params = dict(fixed)
        params[parameter] = value
        spec = BenchSpec.from_dict(params)
        for s in range(n_sectors):
            sector_seed = seed * 10_000 + s
            routes = generate_sector(spec.n_routes, spec.n_intersections, sector_seed)
            width = max(x for r in routes for x, _ in r) + 1
            height = max(y for r in routes for _, y in r) + 1
            sector_doc = sector_document(routes, width, height)
            passed, passed_first, vr, transcript = run_task(
                provider, sector_doc, spec, max_feedback, template
            )
            results.tasks.append(TaskResult(
                value, s, passed, passed_first, transcript.feedback_rounds,
                vr.diagnostics, transcript,
            ))
    return results


def sensitivity_suite(provider, spec: BenchSpec, n_sectors: int = 3, seed: int = 0,
                      max_feedback: int = 2) -> dict[str, float]:
    """Re-run verification across paraphrased prompt templates; a robust
    provider keeps its pass rate across wording changes."""
    rates = {}
    for template in PROMPT_TEMPLATES:
        passes = 0
        for s in range(n_sectors):
            routes = generate_sector(spec.n_routes, spec.n_intersections, seed * 1000 + s)
            width = max(x for r in routes for x, _ in r) + 1
            height = max(y for r in routes for _, y in r) + 1
            passed, _, _, _ = run_task(provider, sector_document(routes, width, height),
                                       spec, max_feedback, template)
            passes += passed
        rates[template] = passes / n_sectors
    return rates
