import itertools
import json
import random
from fractions import Fraction

import pytest

from pathxai.constraints import ConstraintInstance, Kind
from pathxai.errors import EmptyTarget, InvalidPath, UnboundEntity
from pathxai.executor import (
    FlowRule,
    compute_metrics,
    exact_decimal,
    execute,
    explain,
    explanation_model,
    export_flow_rules,
    metrics_csv,
    read_metrics_csv,
    replay_flow_rules,
    step_holds,
)
from pathxai.graph import PathSet, enumerate_solution_space, oracle_target_space
from pathxai.intent import Intent
from pathxai.pipeline import run_structure
from pathxai.structure import CausalKnowledgeStructure

from oracles import brute_space, naive_connected, naive_target, random_topology

C = ConstraintInstance(Kind.CONNECTIVITY, (), 0.91)
L = ConstraintInstance(Kind.LOOP_FREE, (), 0.90)
S = ConstraintInstance(Kind.SHORTEST, (), 0.85)


def ends(s, d):
    return ConstraintInstance(Kind.ENDPOINTS, (("start", s), ("dest", d)), 0.88)


def via(n, negated=False):
    return ConstraintInstance(Kind.FIXED_NODE, (("node", n),), 0.86, negated)


def run(t, intent, *chain, max_hops=None):
    return execute(CausalKnowledgeStructure(tuple(chain)), t, intent, max_hops)


def test_case_study_chain_on_transfer_topology(t2):
    intent = Intent("A", "G")
    trace = run(t2, intent, C, L, S)
    assert len(trace.steps) == 3
    assert set(trace.final) == naive_target(t2, "A", "G")
    rows = compute_metrics(trace, oracle_target_space(t2, intent))
    assert all(r.R == 1 for r in rows)
    assert [r.P for r in rows] == sorted(r.P for r in rows)
    assert rows[-1].P == 1


def test_connectivity_only_on_triangle(triangle):
    trace = run(triangle, Intent("A", "C"), C)
    space = brute_space(triangle.nodes, "A", "C", 2)
    assert set(trace.final) == {p for p in space if naive_connected(triangle, p)}
    assert list(trace.final) == [("A", "B", "C"), ("A", "C")]


def test_unbound_fixed_node(t2):
    with pytest.raises(UnboundEntity):
        run(t2, Intent("A", "G"), C, via("Z"))
    with pytest.raises(UnboundEntity):
        run(t2, Intent("A", "Z"), C)


def test_zero_step_metrics(t1):
    intent = Intent("A", "D")
    trace = run(t1, intent)
    target = oracle_target_space(t1, intent)
    (row,) = compute_metrics(trace, target)
    assert row.P == Fraction(len(target), len(trace.space)) and row.R == 1


def test_empty_target_rejected(t1):
    trace = run(t1, Intent("A", "D"), C)
    with pytest.raises(EmptyTarget):
        compute_metrics(trace, PathSet())


def test_adversarial_chain_loses_recall(t1):
    intent = Intent("A", "D", via=("C",))
    target = oracle_target_space(t1, intent)
    # hand scan: A-C-B-D and A-C-E-D both weigh 3
    assert list(target) == [("A", "C", "B", "D"), ("A", "C", "E", "D")]
    trace = run(t1, intent, S, C, L, via("C"))
    rows = compute_metrics(trace, target)
    assert rows[1].R == 0  # Shortest first keeps only A-B-D
    assert all(r.R < 1 for r in rows[1:])
    good = run(t1, intent, C, L, via("C"), S)
    assert good.final == target


def _random_case(seed):
    rng = random.Random(seed)
    t = random_topology(rng, rng.randint(4, 6))
    s, d = rng.sample(list(t.nodes), 2)
    others = [n for n in t.nodes if n not in (s, d)]
    v = rng.choice(others)
    return rng, t, Intent(s, d, via=(v,))


@pytest.mark.parametrize("seed", range(15))
def test_every_elimination_is_sound(seed):
    rng, t, intent = _random_case(seed)
    chain = [C, L, ends(intent.start, intent.dest), via(intent.via[0]), S]
    rng.shuffle(chain)
    trace = run(t, intent, *chain)
    prev = len(trace.space)
    for step in trace.steps:
        assert len(step.before) <= prev
        prev = len(step.before)
        assert set(step.survivors) | set(step.eliminated_paths()) == set(step.before)
        assert not (step.survivors & step.eliminated_paths())
        for p, reason in step.eliminated:
            assert reason
            assert not step_holds(step, t, p)
        for p in step.survivors:
            assert step_holds(step, t, p)


@pytest.mark.parametrize("seed", range(10))
def test_feasibility_steps_commute(seed):
    rng, t, intent = _random_case(100 + seed)
    feas = [C, L, ends(intent.start, intent.dest), via(intent.via[0])]
    target = oracle_target_space(t, intent)
    finals = set()
    for order in itertools.permutations(feas):
        trace = run(t, intent, *order, S)
        finals.add(trace.final)
        if len(target):
            last = compute_metrics(trace, target)[-1]
            assert (last.P, last.R) == (1, 1)
    assert finals == {target}


def test_explain_text_orders_case_study_steps(t2):
    text = explain(run(t2, Intent("A", "G"), C, L, S), t2)
    a, b, c = text.index("Step 1: connectivity"), text.index("Step 2: dead-lock free"), text.index("Step 3: shortest")
    assert a < b < c
    tail = text[text.index("Selected path(s):") :]
    assert tail.splitlines()[1].strip() == "A-C-E-G"


def test_explain_limits_samples_and_reports_empty_steps(triangle):
    trace = run(triangle, Intent("A", "C"), C, C)
    text = explain(trace, triangle, k=1)
    assert "no candidate was eliminated at this step" in text
    assert "... and 1 more" in text


def test_explain_names_links(t1):
    trace = run(t1, Intent("A", "D", via=("B",)), C, L, ends("A", "D"), via("B"), S)
    model = explanation_model(trace, t1)
    assert model["selected"] == [["A", "B", "D"]]
    assert [l["link"] for l in model["links"]] == ["A-B", "B-D"]
    assert {l["link"] for l in model["unused_links"]} <= {"A-C", "B-C", "C-E", "D-E"}


def test_machine_rendering_round_trip(t2):
    trace = run(t2, Intent("A", "G"), C, L, S)
    doc = json.loads(explain(trace, t2, fmt="machine"))
    assert [s["constraint"] for s in doc["steps"]] == [s.instance.kind.value for s in trace.steps]
    assert [(s["before"], s["after"]) for s in doc["steps"]] == [(len(s.before), len(s.survivors)) for s in trace.steps]
    for sd, step in zip(doc["steps"], trace.steps):
        assert [tuple(e["path"]) for e in sd["eliminated"]] == [p for p, _ in step.eliminated]
    assert doc["selected"] == trace.final.to_list()
    with pytest.raises(ValueError):
        explain(trace, t2, fmt="html")


def test_flow_rules_for_short_path(t1):
    rules = export_flow_rules(("A", "B", "D"), t1, Intent("A", "D"))
    assert rules == [FlowRule("A", ("A", "D"), "B"), FlowRule("B", ("A", "D"), "D")]
    assert [FlowRule.from_dict(r.to_dict()) for r in rules] == rules


def test_flow_rules_degenerate_and_invalid(t1):
    assert export_flow_rules(("A",), t1, Intent("A", "D")) == []
    with pytest.raises(InvalidPath):
        export_flow_rules(("A", "D"), t1, Intent("A", "D"))
    with pytest.raises(InvalidPath):
        export_flow_rules(("A", "B", "A", "C"), t1, Intent("A", "C"))


@pytest.mark.parametrize("block", range(4))
def test_flow_rule_replay_on_random_graphs(block):
    # 4 blocks x 25 graphs = 100 random graphs
    for seed in range(block * 25, block * 25 + 25):
        rng = random.Random(seed)
        t = random_topology(rng, rng.randint(3, 7))
        s, d = rng.sample(list(t.nodes), 2)
        intent = Intent(s, d)
        target = oracle_target_space(t, intent)
        assert len(target)
        for p in target:
            assert replay_flow_rules(export_flow_rules(p, t, intent), s, d) == p


@pytest.mark.parametrize(
    "x, text",
    [(Fraction(1), "1"), (Fraction(0), "0"), (Fraction(1, 8), "0.125"), (Fraction(3, 40), "0.075"), (Fraction(1, 3), "1/3")],
)
def test_exact_decimal(x, text):
    assert exact_decimal(x) == text
    assert Fraction(text) == x


def test_metrics_csv_is_exact(t2):
    intent = Intent("A", "G")
    rows = compute_metrics(run(t2, intent, C, L, S), oracle_target_space(t2, intent))
    text = metrics_csv(rows, {"seed": 7})
    assert text.splitlines()[0] == '# config: {"seed": 7}'
    assert text.splitlines()[1] == "step,constraint,subspace_size,P,R"
    assert read_metrics_csv(text) == rows
    assert text.splitlines()[-1].endswith(",1,1")


def test_execution_is_deterministic(t2):
    a = run(t2, Intent("A", "G"), C, L, S)
    b = run(t2, Intent("A", "G"), C, L, S)
    assert a == b
    assert explain(a, t2) == explain(b, t2)


def test_max_hops_bounds_the_space(t2):
    trace = run(t2, Intent("A", "G"), C, max_hops=2)
    assert trace.space == enumerate_solution_space(t2, ("A", "G"), 2)
    assert set(trace.final) == {("A", "B", "G")}


def test_saved_chain_without_fixed_node_notes_unenforced_via(t2):
    saved = CausalKnowledgeStructure((C, ends("A", "D"), L, S))
    trace = run_structure(saved, t2, Intent("A", "G", via=("D",)))
    assert trace.notes == ("VIA D is not enforced: the saved structure has no fixed-node constraint",)
    assert trace.structure.chain[1].binding == {"start": "A", "dest": "G"}


def test_saved_chain_rebinds_and_inserts_fixed_nodes(t2):
    saved = CausalKnowledgeStructure((C, via("B"), ends("A", "D"), L, S))
    intent = Intent("A", "G", via=("D", "F"), avoid=("C",))
    trace = run_structure(saved, t2, intent)
    kinds = [(i.kind.value, i.nodes, i.negated) for i in trace.structure.chain]
    assert kinds[1] == ("FixedNode", ("D",), False)
    assert kinds[-1][0] == "Shortest"
    assert ("FixedNode", ("F",), False) in kinds and ("FixedNode", ("C",), True) in kinds
    assert trace.final == oracle_target_space(t2, intent)
