"""Synthetic grid-scenario benchmarking of text-generation providers."""

from .generate import SectorGenerationError, generate_sector, place_aircraft, solvable
from .grid import (GRID_CELL_NM, AircraftTrack, BenchSpec, GridScenario,
                   GridScenarioError, VerifyResult, adjacent, aircraft_on_route,
                   count_interactions, count_route_intersections, scenario_from_document,
                   scenario_from_json, scenario_to_document, scenario_to_json, verify)
from .harness import (BenchResults, TaskResult, default_sweep, parse_response,
                      render_prompt, run_benchmark, run_task, sector_document,
                      sensitivity_suite)
from .provider import (AdversarialStubProvider, HttpProvider, OracleStubProvider,
                       ProviderError, ProviderTranscript, extract_block,
                       provider_from_name)

__all__ = [
    "GRID_CELL_NM", "AdversarialStubProvider", "AircraftTrack", "BenchResults",
    "BenchSpec", "GridScenario", "GridScenarioError", "HttpProvider",
    "OracleStubProvider", "ProviderError", "ProviderTranscript", "SectorGenerationError",
    "TaskResult", "VerifyResult", "adjacent", "aircraft_on_route", "count_interactions",
    "count_route_intersections", "default_sweep", "extract_block", "generate_sector",
    "parse_response", "place_aircraft", "provider_from_name", "render_prompt",
    "run_benchmark", "run_task", "scenario_from_document", "scenario_from_json",
    "scenario_to_document", "scenario_to_json", "sector_document", "sensitivity_suite",
    "solvable", "verify",
]
