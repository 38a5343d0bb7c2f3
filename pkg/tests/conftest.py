import json
from pathlib import Path

import numpy as np
import pytest

from airtwin.airspace import load_scenario
from airtwin.engine import ModelSet
from airtwin.perf import load_model

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "airtwin" / "fixtures"
DOCS = Path(__file__).resolve().parent.parent / "docs"


@pytest.fixture(scope="session")
def golden_path() -> Path:
    return FIXTURES / "scenarios" / "medway_like.json"


@pytest.fixture(scope="session")
def golden_scenario(golden_path):
    return load_scenario(golden_path)


@pytest.fixture(scope="session")
def golden_doc(golden_path):
    return json.loads(golden_path.read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def descent_model():
    return load_model(FIXTURES / "models" / "b738like_descent.json")


@pytest.fixture(scope="session")
def climb_model():
    return load_model(FIXTURES / "models" / "b738like_climb.json")


@pytest.fixture(scope="session")
def models(descent_model, climb_model):
    return ModelSet([descent_model, climb_model])


@pytest.fixture(scope="session")
def curated_path() -> Path:
    return FIXTURES / "curated" / "medway_like_curated.jsonl"


@pytest.fixture(scope="session")
def allpass_metrics_path() -> Path:
    return FIXTURES / "cases" / "metrics_allpass.json"


@pytest.fixture(scope="session")
def bluebird_case_path() -> Path:
    return FIXTURES / "cases" / "bluebird_case.yaml"


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
