"""Structured assurance cases: typed argument graphs, well-formedness
validation, metric-bound evidence evaluation and exports.

A case is a tree of goal / context / strategy / property-claim / evidence
/ assumption / justification nodes. Evidence nodes may bind a metric
selector with a comparator and threshold; claim thresholds therefore live
in the case document, never in metric code. Evaluation assigns each node
one of four statuses ordered failed < unsupported < undeveloped <
supported and rolls claims up as the minimum over their status-bearing
children (contexts, assumptions and justifications are annotations and
carry no status).
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .metrics.result import MetricStore

CASE_FORMAT = "airtwin-assurance-case"
CASE_VERSION = 1

KINDS = ("goal", "context", "strategy", "property_claim", "evidence", "assumption",
         "justification")
ANNOTATION_KINDS = ("context", "assumption", "justification")
CLAIM_KINDS = ("goal", "strategy", "property_claim")

LEGAL_CHILDREN = {
    "goal": {"context", "strategy", "property_claim", "evidence", "assumption", "justification"},
    "strategy": {"property_claim", "evidence", "context", "assumption", "justification"},
    "property_claim": {"property_claim", "strategy", "evidence", "context", "assumption",
                       "justification"},
    "evidence": set(),
    "context": set(),
    "assumption": set(),
    "justification": set(),
}

STATUS_ORDER = ("failed", "unsupported", "undeveloped", "supported")
_RANK = {s: i for i, s in enumerate(STATUS_ORDER)}

COMPARATORS = ("<", "<=", ">", ">=", "==", "abs<=", "in")


class CaseError(ValueError):
    pass


class EvaluationError(RuntimeError):
    pass


@dataclass(frozen=True)
class EvidenceBinding:
    metric: str                      # selector; glob patterns allowed
    comparator: str
    threshold: float | tuple[float, float]
    units: str = "1"

    def __post_init__(self):
        if self.comparator not in COMPARATORS:
            raise CaseError(f"unknown comparator {self.comparator!r}")
        if self.comparator == "in":
            if not (isinstance(self.threshold, (tuple, list)) and len(self.threshold) == 2):
                raise CaseError("'in' comparator needs a [lo, hi] threshold")
            object.__setattr__(self, "threshold", (float(self.threshold[0]),
                                                   float(self.threshold[1])))
        else:
            object.__setattr__(self, "threshold", float(self.threshold))

    def satisfied(self, value: float) -> bool:
        t = self.threshold
        if self.comparator == "<":
            return value < t
        if self.comparator == "<=":
            return value <= t
        if self.comparator == ">":
            return value > t
        if self.comparator == ">=":
            return value >= t
        if self.comparator == "==":
            return value == t
        if self.comparator == "abs<=":
            return abs(value) <= t
        lo, hi = t
        return lo <= value <= hi

    def describe(self) -> str:
        if self.comparator == "in":
            return f"{self.metric} in [{self.threshold[0]:g}, {self.threshold[1]:g}] {self.units}"
        return f"{self.metric} {self.comparator} {self.threshold:g} {self.units}"


@dataclass(frozen=True)
class CaseNode:
    id: str
    kind: str
    text: str
    children: tuple[str, ...] = ()
    binding: EvidenceBinding | None = None

    def __post_init__(self):
        if not self.id:
            raise CaseError("node with empty id")
        if self.kind not in KINDS:
            raise CaseError(f"node {self.id}: unknown kind {self.kind!r}")
        if self.binding is not None and self.kind != "evidence":
            raise CaseError(f"node {self.id}: only evidence nodes may bind metrics")


@dataclass(frozen=True)
class AssuranceCase:
    nodes: dict[str, CaseNode]
    root: str

    def node(self, nid: str) -> CaseNode:
        return self.nodes[nid]

    def children_of(self, nid: str) -> list[CaseNode]:
        return [self.nodes[c] for c in self.nodes[nid].children if c in self.nodes]


def validate_case(case: AssuranceCase) -> list[str]:
    """Well-formedness violations; an empty list means the case is valid."""
    violations: list[str] = []
    referenced: dict[str, list[str]] = {}
    for node in case.nodes.values():
        for child in node.children:
            if child not in case.nodes:
                violations.append(f"{node.id}: child {child!r} does not exist")
                continue
            referenced.setdefault(child, []).append(node.id)
            child_kind = case.nodes[child].kind
            if child_kind not in LEGAL_CHILDREN[node.kind]:
                if node.kind == "evidence":
                    violations.append(f"{node.id}: evidence must be a leaf (links to {child})")
                else:
                    violations.append(
                        f"{node.id}: {node.kind} may not have a {child_kind} child ({child})"
                    )
    roots = [nid for nid in case.nodes if nid not in referenced]
    if case.root not in case.nodes:
        violations.append(f"declared root {case.root!r} does not exist")
    elif case.nodes[case.root].kind != "goal":
        violations.append(f"root {case.root} must be a goal, is {case.nodes[case.root].kind}")
    if len(roots) != 1:
        violations.append(f"expected exactly one root, found {sorted(roots)}")
    elif case.root in case.nodes and roots[0] != case.root:
        violations.append(f"declared root {case.root} is referenced as a child")
    goals = [n.id for n in case.nodes.values() if n.kind == "goal"]
    if len(goals) != 1:
        violations.append(f"expected exactly one goal node, found {sorted(goals)}")

    # acyclicity over the whole graph
    WHITE, GREY, BLACK = 0, 1, 2
    colour = {nid: WHITE for nid in case.nodes}

    def dfs(nid: str, stack: list[str]) -> None:
        colour[nid] = GREY
        for child in case.nodes[nid].children:
            if child not in case.nodes:
                continue
            if colour[child] == GREY:
                cycle = stack[stack.index(child):] + [child] if child in stack else [nid, child]
                violations.append("cycle: " + " -> ".join(cycle))
            elif colour[child] == WHITE:
                dfs(child, stack + [child])
        colour[nid] = BLACK

    for nid in sorted(case.nodes):
        if colour[nid] == WHITE:
            dfs(nid, [nid])
    return violations


@dataclass
class CaseStatus:
    statuses: dict[str, str]
    evidence_values: dict[str, float] = field(default_factory=dict)
    rollup_rule: str = ("evidence from binding; claims = min over status-bearing "
                        "children; failed < unsupported < undeveloped < supported")

    def of(self, nid: str) -> str:
        return self.statuses[nid]

    def root_status(self, case: AssuranceCase) -> str:
        return self.statuses[case.root]


def status_min(statuses) -> str:
    return min(statuses, key=lambda s: _RANK[s])


def evaluate(case: AssuranceCase, store: MetricStore) -> CaseStatus:
    """Resolve evidence bindings against the metric store and propagate.

    Evidence: satisfied binding -> supported; violated -> failed; metric
    missing -> undeveloped; no binding -> unsupported. A selector matching
    several metrics is an evaluation error naming the matches.
    """
    violations = validate_case(case)
    if violations:
        raise EvaluationError(f"case is not valid: {violations}")
    statuses: dict[str, str] = {}
    values: dict[str, float] = {}

    def visit(nid: str) -> None:
        node = case.nodes[nid]
        for child in node.children:
            visit(child)
        if node.kind in ANNOTATION_KINDS:
            return
        if node.kind == "evidence":
            if node.binding is None:
                statuses[nid] = "unsupported"
                return
            matches = store.select(node.binding.metric)
            if len(matches) > 1:
                raise EvaluationError(
                    f"{nid}: selector {node.binding.metric!r} is ambiguous: "
                    f"{[m.name for m in matches]}"
                )
            if not matches:
                statuses[nid] = "undeveloped"
                return
            values[nid] = matches[0].value
            statuses[nid] = "supported" if node.binding.satisfied(matches[0].value) else "failed"
            return
        bearing = [c for c in node.children
                   if case.nodes[c].kind not in ANNOTATION_KINDS]
        if not bearing:
            statuses[nid] = "unsupported"
        else:
            statuses[nid] = status_min(statuses[c] for c in bearing)

    visit(case.root)
    # nodes outside the root's tree still get a status for completeness
    for nid in case.nodes:
        if nid not in statuses and case.nodes[nid].kind not in ANNOTATION_KINDS:
            visit(nid)
    return CaseStatus(statuses, values)


# --- document IO ------------------------------------------------------------


def case_from_document(doc: dict) -> AssuranceCase:
    if doc.get("format", CASE_FORMAT) != CASE_FORMAT:
        raise CaseError(f"unknown case format {doc.get('format')!r}")
    if int(doc.get("version", CASE_VERSION)) != CASE_VERSION:
        raise CaseError(f"unsupported case version {doc.get('version')!r}")
    nodes: dict[str, CaseNode] = {}
    for nd in doc.get("nodes", []):
        binding = None
        if nd.get("binding"):
            b = nd["binding"]
            binding = EvidenceBinding(b["metric"], b["comparator"], b["threshold"],
                                      b.get("units", "1"))
        node = CaseNode(str(nd["id"]), nd["kind"], nd.get("text", ""),
                        tuple(nd.get("children", ())), binding)
        if node.id in nodes:
            raise CaseError(f"duplicate node id {node.id!r}")
        nodes[node.id] = node
    root = doc.get("root")
    if root is None:
        referenced = {c for n in nodes.values() for c in n.children}
        candidates = [nid for nid in nodes if nid not in referenced]
        if len(candidates) != 1:
            raise CaseError(f"cannot infer root; candidates: {sorted(candidates)}")
        root = candidates[0]
    return AssuranceCase(nodes, str(root))


def case_to_document(case: AssuranceCase) -> dict:
    nodes = []
    for nid in sorted(case.nodes):
        node = case.nodes[nid]
        nd: dict = {"id": node.id, "kind": node.kind, "text": node.text}
        if node.children:
            nd["children"] = list(node.children)
        if node.binding is not None:
            b = node.binding
            nd["binding"] = {
                "metric": b.metric, "comparator": b.comparator,
                "threshold": list(b.threshold) if isinstance(b.threshold, tuple) else b.threshold,
                "units": b.units,
            }
        nodes.append(nd)
    return {"format": CASE_FORMAT, "version": CASE_VERSION, "root": case.root, "nodes": nodes}


def load_case(path: str | Path) -> AssuranceCase:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() in (".yaml", ".yml"):
        doc = yaml.safe_load(text)
    else:
        doc = json.loads(text)
    return case_from_document(doc)


def save_case(case: AssuranceCase, path: str | Path) -> None:
    path = Path(path)
    doc = case_to_document(case)
    if path.suffix.lower() in (".yaml", ".yml"):
        path.write_text(yaml.safe_dump(doc, sort_keys=False), encoding="utf-8")
    else:
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# --- exports ----------------------------------------------------------------

_DOT_SHAPES = {
    "goal": "box",
    "property_claim": "box",
    "strategy": "parallelogram",
    "context": "box",
    "assumption": "ellipse",
    "justification": "ellipse",
    "evidence": "circle",
}
_STATUS_COLOURS = {
    "supported": "palegreen",
    "failed": "lightcoral",
    "undeveloped": "orange",
    "unsupported": "lightgray",
}


def export(case: AssuranceCase, status: CaseStatus | None = None,
           format: str = "json") -> str:
    """Deterministic rendering of a case to dot, markdown or json."""
    if format == "json":
        return json.dumps(case_to_document(case), indent=2, sort_keys=True) + "\n"
    if format == "dot":
        return _export_dot(case, status)
    if format == "markdown":
        return _export_markdown(case, status)
    raise CaseError(f"unknown export format {format!r}")


def _export_dot(case: AssuranceCase, status: CaseStatus | None) -> str:
    lines = ["digraph assurance_case {", "  rankdir=TB;", "  node [fontsize=10];"]
    for nid in sorted(case.nodes):
        node = case.nodes[nid]
        label = f"{node.id}\\n{_wrap(node.text, 28)}"
        if node.binding is not None:
            label += f"\\n[{node.binding.describe()}]"
        attrs = [f'label="{label}"', f"shape={_DOT_SHAPES[node.kind]}"]
        if node.kind == "context":
            attrs.append("style=\"rounded,filled\"")
        else:
            attrs.append("style=filled")
        colour = "white"
        if status is not None and nid in status.statuses:
            colour = _STATUS_COLOURS[status.statuses[nid]]
        attrs.append(f'fillcolor="{colour}"')
        lines.append(f'  "{nid}" [{", ".join(attrs)}];')
    for nid in sorted(case.nodes):
        for child in case.nodes[nid].children:
            style = " [style=dashed]" if case.nodes[child].kind in ANNOTATION_KINDS else ""
            lines.append(f'  "{nid}" -> "{child}"{style};')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _export_markdown(case: AssuranceCase, status: CaseStatus | None) -> str:
    out: list[str] = ["# Assurance case", ""]

    def visit(nid: str, depth: int) -> None:
        node = case.nodes[nid]
        indent = "  " * depth
        tag = node.kind.replace("_", " ")
        line = f"{indent}- **{node.id}** ({tag}): {node.text}"
        if status is not None and nid in status.statuses:
            line += f" [status: {status.statuses[nid]}]"
        if node.binding is not None:
            line += f" [requires {node.binding.describe()}]"
            if status is not None and nid in status.evidence_values:
                line += f"; observed {status.evidence_values[nid]:g}"
        out.append(line)
        for child in node.children:
            if child in case.nodes:
                visit(child, depth + 1)

    visit(case.root, 0)
    return "\n".join(out) + "\n"


def _wrap(text: str, width: int) -> str:
    words = text.split()
    lines, cur = [], ""
    for w in words:
        if len(cur) + len(w) + 1 > width and cur:
            lines.append(cur)
            cur = w
        else:
            cur = f"{cur} {w}".strip()
    if cur:
        lines.append(cur)
    return "\\n".join(lines[:4])
