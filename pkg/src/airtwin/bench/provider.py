"""Text-generation provider abstraction for the scenario benchmarks.

A provider is one text-in/text-out call over a conversation history.
``AIRTWIN_PROVIDER`` selects the implementation: the closed-loop oracle
stub (default), an adversarial stub for exercising the feedback loop, or
a live HTTP endpoint configured through ``AIRTWIN_PROVIDER_URL`` /
``AIRTWIN_PROVIDER_KEY``. Live models see exactly the same text contract
as the stubs.
"""

import json
import os
import re
from dataclasses import dataclass, field

import httpx

from .generate import place_aircraft
from .grid import BenchSpec, GridScenarioError, scenario_to_json

PROVIDER_ENV = "AIRTWIN_PROVIDER"
PROVIDER_URL_ENV = "AIRTWIN_PROVIDER_URL"
PROVIDER_KEY_ENV = "AIRTWIN_PROVIDER_KEY"


class ProviderError(RuntimeError):
    pass


@dataclass
class ProviderTranscript:
    """Full conversation record for one benchmark task."""

    prompt: str
    responses: list[str] = field(default_factory=list)

    @property
    def feedback_rounds(self) -> int:
        return max(0, len(self.responses) - 1)


def extract_block(text: str, label: str) -> str:
    """The content of the single fenced block ```<label> ... ``` in text."""
    pattern = re.compile(r"```" + re.escape(label) + r"\s*\n(.*?)```", re.DOTALL)
    matches = pattern.findall(text)
    if len(matches) != 1:
        raise GridScenarioError(
            f"expected exactly one fenced {label!r} block, found {len(matches)}"
        )
    return matches[0].strip()


class OracleStubProvider:
    """Closed-loop stub: constructs a correct answer from the prompt itself.

    It reads the sector and spec blocks out of the incoming prompt, runs
    the constructive placement search and answers with the witness, so a
    healthy harness must score it at 100%.
    """

    name = "stub-oracle"

    def __init__(self, seed: int = 0, node_budget: int = 200_000):
        self.seed = seed
        self.node_budget = node_budget

    def complete(self, messages: list[dict]) -> str:
        prompt = messages[0]["content"]
        spec = BenchSpec.from_dict(json.loads(extract_block(prompt, "spec")))
        sector = json.loads(extract_block(prompt, "sector"))
        routes = tuple(tuple((int(x), int(y)) for x, y in r) for r in sector["routes"])
        witness = place_aircraft(routes, spec, seed=self.seed, node_budget=self.node_budget,
                                 width=int(sector["width"]), height=int(sector["height"]))
        if witness is None:
            raise ProviderError("oracle stub failed to construct a witness")
        return "Here is the scenario.\n```grid-scenario\n" + scenario_to_json(witness) + "\n```\n"


class AdversarialStubProvider:
    """Stub that first answers with one aircraft too many, then corrects
    itself once diagnostics arrive; exercises the feedback loop."""

    name = "stub-adversarial"

    def __init__(self, seed: int = 0):
        self._oracle = OracleStubProvider(seed)

    def complete(self, messages: list[dict]) -> str:
        good = self._oracle.complete(messages[:1])
        got_feedback = any(m["role"] == "user" for m in messages[1:])
        if got_feedback:
            return good
        doc = json.loads(extract_block(good, "grid-scenario"))
        extra = dict(doc["aircraft"][0])
        extra["id"] = "AC_EXTRA"
        doc["aircraft"].append(extra)
        return "```grid-scenario\n" + json.dumps(doc, sort_keys=True) + "\n```\n"


class HttpProvider:
    """Minimal JSON-over-HTTP chat client: POST {model, messages} -> {text}."""

    name = "http"

    def __init__(self, url: str, api_key: str = "", model: str = "", timeout: float = 60.0,
                 transport: httpx.BaseTransport | None = None, retries: int = 2):
        self.url = url
        self.model = model
        self.retries = retries
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    def complete(self, messages: list[dict]) -> str:
        body = {"model": self.model, "messages": messages}
        last_exc: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = self._client.post(self.url, json=body)
                resp.raise_for_status()
                return resp.json()["text"]
            except (httpx.HTTPError, KeyError, json.JSONDecodeError) as exc:
                last_exc = exc
        raise ProviderError(f"provider transport failed after retries: {last_exc}")


def provider_from_name(name: str | None = None, seed: int = 0):
    """Resolve a provider by name or from the environment."""
    name = name or os.environ.get(PROVIDER_ENV, "stub-oracle")
    if name == "stub-oracle":
        return OracleStubProvider(seed)
    if name == "stub-adversarial":
        return AdversarialStubProvider(seed)
    if name == "http":
        url = os.environ.get(PROVIDER_URL_ENV)
        if not url:
            raise ProviderError(f"{PROVIDER_URL_ENV} must be set for the http provider")
        return HttpProvider(url, os.environ.get(PROVIDER_KEY_ENV, ""))
    raise ProviderError(f"unknown provider {name!r}")
