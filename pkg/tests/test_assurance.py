import json

import numpy as np
import pytest

from airtwin.assurance import (ANNOTATION_KINDS, AssuranceCase, CaseError, CaseNode,
                               EvaluationError, EvidenceBinding, case_from_document,
                               case_to_document, evaluate, export, load_case, save_case,
                               status_min, validate_case)
from airtwin.metrics import MetricResult, MetricStore


def tiny_case(binding_threshold=0.5):
    nodes = {
        "G1": CaseNode("G1", "goal", "root goal", ("C1", "S1", "S2")),
        "C1": CaseNode("C1", "context", "scope"),
        "S1": CaseNode("S1", "strategy", "first strand", ("P1",)),
        "S2": CaseNode("S2", "strategy", "second strand", ("P2",)),
        "P1": CaseNode("P1", "property_claim", "claim one", ("E1", "A1")),
        "P2": CaseNode("P2", "property_claim", "claim two", ("E2",)),
        "A1": CaseNode("A1", "assumption", "assumed"),
        "E1": CaseNode("E1", "evidence", "metric one",
                       binding=EvidenceBinding("m.one", "<=", binding_threshold)),
        "E2": CaseNode("E2", "evidence", "metric two",
                       binding=EvidenceBinding("m.two", ">=", 1.0)),
    }
    return AssuranceCase(nodes, "G1")


def store(**values):
    s = MetricStore()
    for name, value in values.items():
        s.add(MetricResult(name.replace("_", "."), float(value), "1", 1))
    return s


def test_valid_case_has_no_violations():
    assert validate_case(tiny_case()) == []


def test_evidence_must_be_leaf():
    case = tiny_case()
    bad = dict(case.nodes)
    bad["E1"] = CaseNode("E1", "evidence", "x", ("C1",),
                         EvidenceBinding("m.one", "<=", 1.0))
    violations = validate_case(AssuranceCase(bad, "G1"))
    assert any("evidence must be a leaf" in v for v in violations)


def test_annotations_never_attach_to_evidence():
    # covered by the same leaf rule; also: strategies cannot parent goals
    nodes = dict(tiny_case().nodes)
    nodes["S1"] = CaseNode("S1", "strategy", "s", ("P1", "G1"))
    violations = validate_case(AssuranceCase(nodes, "G1"))
    assert any("may not have a goal child" in v for v in violations)


def test_cycle_detected():
    nodes = {
        "G1": CaseNode("G1", "goal", "g", ("S1",)),
        "S1": CaseNode("S1", "strategy", "s", ("P1",)),
        "P1": CaseNode("P1", "property_claim", "p", ("S1",)),
    }
    violations = validate_case(AssuranceCase(nodes, "G1"))
    assert any(v.startswith("cycle:") for v in violations)


def test_single_goal_root_enforced():
    nodes = dict(tiny_case().nodes)
    nodes["G2"] = CaseNode("G2", "goal", "stray goal")
    violations = validate_case(AssuranceCase(nodes, "G1"))
    assert any("exactly one root" in v for v in violations)
    assert any("exactly one goal node" in v for v in violations)


def test_unknown_child_reference():
    nodes = {"G1": CaseNode("G1", "goal", "g", ("MISSING",))}
    violations = validate_case(AssuranceCase(nodes, "G1"))
    assert any("does not exist" in v for v in violations)


def test_evaluate_all_supported():
    status = evaluate(tiny_case(), store(m_one=0.3, m_two=2.0))
    assert status.of("G1") == "supported"
    assert status.evidence_values == {"E1": 0.3, "E2": 2.0}


def test_single_failed_leaf_fails_its_strand_only():
    status = evaluate(tiny_case(), store(m_one=0.9, m_two=2.0))
    assert status.of("E1") == "failed"
    assert status.of("P1") == "failed"
    assert status.of("S1") == "failed"
    assert status.of("G1") == "failed"
    assert status.of("S2") == "supported"
    assert status.of("P2") == "supported"


def test_missing_metric_is_undeveloped_and_dominates_supported():
    status = evaluate(tiny_case(), store(m_two=2.0))
    assert status.of("E1") == "undeveloped"
    assert status.of("S1") == "undeveloped"
    assert status.of("G1") == "undeveloped"
    # undeveloped dominates supported but is dominated by failed
    assert status_min(["supported", "undeveloped"]) == "undeveloped"
    assert status_min(["failed", "undeveloped"]) == "failed"


def test_ambiguous_selector_is_an_error():
    s = MetricStore([MetricResult("m.one.a", 1.0, "1", 1),
                     MetricResult("m.one.b", 2.0, "1", 1)])
    case = tiny_case()
    nodes = dict(case.nodes)
    nodes["E1"] = CaseNode("E1", "evidence", "glob",
                           binding=EvidenceBinding("m.one.*", "<=", 5.0))
    nodes["E2"] = CaseNode("E2", "evidence", "x", binding=EvidenceBinding("m.two", ">=", 0.0))
    with pytest.raises(EvaluationError, match="ambiguous"):
        evaluate(AssuranceCase(nodes, "G1"), s)


def test_unbound_evidence_is_unsupported():
    nodes = dict(tiny_case().nodes)
    nodes["E2"] = CaseNode("E2", "evidence", "no binding yet")
    status = evaluate(AssuranceCase(nodes, "G1"), store(m_one=0.1))
    assert status.of("E2") == "unsupported"
    assert status.of("G1") == "unsupported"


def test_claim_without_status_bearing_children_is_unsupported():
    nodes = dict(tiny_case().nodes)
    del nodes["E2"]
    nodes["P2"] = CaseNode("P2", "property_claim", "empty claim", ("A2",))
    nodes["A2"] = CaseNode("A2", "assumption", "only an annotation")
    status = evaluate(AssuranceCase(nodes, "G1"), store(m_one=0.1, m_two=2.0))
    assert status.of("P2") == "unsupported"


def test_comparators():
    cases = [("<", 1.0, 0.5, True), ("<", 1.0, 1.0, False),
             ("<=", 1.0, 1.0, True), (">", 1.0, 2.0, True),
             (">=", 1.0, 1.0, True), ("==", 1.0, 1.0, True),
             ("==", 1.0, 1.1, False), ("abs<=", 1.0, -0.5, True),
             ("in", (0.0, 2.0), 1.5, True), ("in", (0.0, 2.0), 2.5, False)]
    for comparator, threshold, value, expected in cases:
        b = EvidenceBinding("m", comparator, threshold)
        assert b.satisfied(value) is expected, (comparator, threshold, value)
    with pytest.raises(CaseError):
        EvidenceBinding("m", "~=", 1.0)


def random_case_and_store(rng):
    """Random legal tree plus a store with random hit/miss/pass/fail."""
    nodes = {}
    store_ = MetricStore()
    counter = [0]

    def add_evidence(parent_children):
        counter[0] += 1
        nid = f"E{counter[0]}"
        roll = rng.random()
        if roll < 0.2:
            nodes[nid] = CaseNode(nid, "evidence", "unbound")
        else:
            metric = f"metric.{counter[0]}"
            nodes[nid] = CaseNode(nid, "evidence", "bound",
                                  binding=EvidenceBinding(metric, "<=", 1.0))
            if roll < 0.45:
                pass  # metric missing: undeveloped
            elif roll < 0.75:
                store_.add(MetricResult(metric, 0.5, "1", 1))  # pass
            else:
                store_.add(MetricResult(metric, 2.0, "1", 1))  # fail
        parent_children.append(nid)

    def add_claim(depth, kind):
        counter[0] += 1
        nid = f"N{counter[0]}"
        children: list[str] = []
        n_children = int(rng.integers(0, 4)) if depth < 3 else 0
        for _ in range(n_children):
            roll = rng.random()
            if depth >= 3 or roll < 0.45:
                add_evidence(children)
            elif roll < 0.6:
                counter[0] += 1
                ann = f"A{counter[0]}"
                nodes[ann] = CaseNode(ann, str(rng.choice(ANNOTATION_KINDS)), "note")
                children.append(ann)
            else:
                # strategies decompose into claims; claims may open strategies
                if kind == "strategy":
                    sub_kind = "property_claim"
                else:
                    sub_kind = "strategy" if rng.random() < 0.5 else "property_claim"
                children.append(add_claim(depth + 1, sub_kind))
        nodes[nid] = CaseNode(nid, kind, "claim", tuple(children))
        return nid

    root_children: list[str] = []
    for _ in range(int(rng.integers(1, 4))):
        root_children.append(add_claim(1, "strategy" if rng.random() < 0.5
                                       else "property_claim"))
    nodes["G1"] = CaseNode("G1", "goal", "root", tuple(root_children))
    return AssuranceCase(nodes, "G1"), store_


def oracle_status(case, store_, nid):
    """Independent recursive evaluation."""
    node = case.nodes[nid]
    if node.kind in ANNOTATION_KINDS:
        return None
    if node.kind == "evidence":
        if node.binding is None:
            return "unsupported"
        matches = store_.select(node.binding.metric)
        if not matches:
            return "undeveloped"
        return "supported" if node.binding.satisfied(matches[0].value) else "failed"
    child_statuses = [oracle_status(case, store_, c) for c in node.children]
    child_statuses = [s for s in child_statuses if s is not None]
    if not child_statuses:
        return "unsupported"
    order = ["failed", "unsupported", "undeveloped", "supported"]
    return min(child_statuses, key=order.index)


def test_random_trees_match_recursive_oracle():
    rng = np.random.default_rng(99)
    for _ in range(200):
        case, store_ = random_case_and_store(rng)
        assert validate_case(case) == []
        status = evaluate(case, store_)
        for nid, node in case.nodes.items():
            if node.kind in ANNOTATION_KINDS:
                assert nid not in status.statuses
            else:
                assert status.of(nid) == oracle_status(case, store_, nid), nid


def test_evaluate_is_monotone_when_adding_satisfied_metrics():
    rng = np.random.default_rng(5)
    order = ["failed", "unsupported", "undeveloped", "supported"]
    for _ in range(50):
        case, store_ = random_case_and_store(rng)
        before = evaluate(case, store_)
        # resolve one undeveloped evidence node with a passing metric
        undeveloped = [nid for nid, s in before.statuses.items()
                       if s == "undeveloped" and case.nodes[nid].kind == "evidence"]
        if not undeveloped:
            continue
        target = case.nodes[undeveloped[0]]
        store_.add(MetricResult(target.binding.metric, 0.0, "1", 1))
        after = evaluate(case, store_)
        for nid in before.statuses:
            assert order.index(after.of(nid)) >= order.index(before.of(nid))


def test_case_document_round_trip(tmp_path):
    case = tiny_case()
    p_yaml = tmp_path / "case.yaml"
    save_case(case, p_yaml)
    back = load_case(p_yaml)
    assert case_to_document(back) == case_to_document(case)
    p_json = tmp_path / "case.json"
    save_case(case, p_json)
    assert case_to_document(load_case(p_json)) == case_to_document(case)


def test_export_json_reimports_structurally_equal():
    case = tiny_case()
    doc = json.loads(export(case, None, "json"))
    assert case_to_document(case_from_document(doc)) == case_to_document(case)


def test_exports_deterministic_and_shaped():
    case = tiny_case()
    status = evaluate(case, store(m_one=0.1, m_two=2.0))
    dot1 = export(case, status, "dot")
    dot2 = export(case, status, "dot")
    assert dot1 == dot2
    assert "digraph assurance_case" in dot1
    assert "parallelogram" in dot1  # strategies
    assert "palegreen" in dot1      # supported colouring
    md = export(case, status, "markdown")
    assert "**G1**" in md and "status: supported" in md
    assert "observed 0.1" in md
    with pytest.raises(CaseError):
        export(case, status, "svg")


def test_root_only_case_exports_single_node():
    case = AssuranceCase({"G1": CaseNode("G1", "goal", "alone")}, "G1")
    assert validate_case(case) == []
    dot = export(case, None, "dot")
    assert dot.count("->") == 0


def test_shipped_case_structure_and_evaluation(bluebird_case_path, allpass_metrics_path):
    case = load_case(bluebird_case_path)
    assert validate_case(case) == []
    ids = set(case.nodes)
    assert {"G1", "C1", "C2", "C3", "C4", "C5", "C6", "S1", "S2", "S3", "S4"} <= ids
    assert {"P1", "P2", "P3", "P4", "P5", "P6", "P7", "P8", "P9", "P10", "P11"} <= ids
    assert {"P5.1.1", "E5.1.1a", "A5.1.1a", "J5.1.1a"} <= ids
    assert {"P8.1", "E8.1.1a", "E8.1.2a", "E8.1.3", "A8.1.1b", "J8.1.1b"} <= ids
    store_ = MetricStore.load(allpass_metrics_path)
    status = evaluate(case, store_)
    assert status.root_status(case) == "supported"


def test_shipped_case_fails_under_any_single_perturbation(bluebird_case_path,
                                                          allpass_metrics_path):
    case = load_case(bluebird_case_path)
    base = MetricStore.load(allpass_metrics_path)
    bound = [n for n in case.nodes.values() if n.binding is not None]
    assert len(bound) >= 20
    for node in bound:
        matches = base.select(node.binding.metric)
        assert len(matches) == 1, node.id
        perturbed = MetricStore()
        for m in base:
            if m.name == matches[0].name:
                perturbed.add(MetricResult(m.name, _break(node.binding, m.value), m.units,
                                           m.population, m.lookahead, m.grouping,
                                           m.provenance))
            else:
                perturbed.add(m)
        status = evaluate(case, perturbed)
        assert status.of(node.id) == "failed", node.id
        assert status.root_status(case) == "failed", node.id


def _break(binding, value):
    t = binding.threshold
    if binding.comparator in ("<", "<=", "abs<="):
        return (t if not isinstance(t, tuple) else t[1]) + abs(t) + 1.0
    if binding.comparator in (">", ">="):
        return t - abs(t) - 1.0
    if binding.comparator == "==":
        return value + 1.0
    if binding.comparator == "in":
        return t[1] + 1.0
    raise AssertionError(binding.comparator)
