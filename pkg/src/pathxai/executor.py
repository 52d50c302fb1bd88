"""Run a constraint chain as successive filters, measure it, explain it,
and turn the chosen route into per-node forwarding rules."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .constraints import ConstraintInstance, Kind, violation
from .errors import EmptySolutionSpace, EmptyTarget, InvalidPath, UnboundEntity
from .graph import DEFAULT_CEILING, PathSet, Topology, enumerate_solution_space
from .intent import Intent
from .structure import CausalKnowledgeStructure


@dataclass(frozen=True)
class FilterStep:
    index: int
    instance: ConstraintInstance
    before: PathSet
    survivors: PathSet
    eliminated: tuple  # ((path, reason), ...) in path order
    reference_weight: Optional[Fraction] = None  # Shortest only

    def eliminated_paths(self) -> PathSet:
        return PathSet._trusted(tuple(p for p, _ in self.eliminated))


@dataclass(frozen=True)
class ExecutionTrace:
    topology_label: str
    intent: Intent
    structure: CausalKnowledgeStructure
    space: PathSet
    steps: tuple
    final: PathSet
    notes: tuple = ()


def _check_bound(t: Topology, intent: Intent, structure: CausalKnowledgeStructure) -> None:
    known = set(t.nodes)
    for n in intent.nodes:
        if n not in known:
            raise UnboundEntity(f"intent names node {n!r}, absent from {t.label!r}")
    for inst in structure.chain:
        for n in inst.nodes:
            if n not in known:
                raise UnboundEntity(f"{inst.label} binds node {n!r}, absent from {t.label!r}")


def apply_step(index: int, inst: ConstraintInstance, t: Topology, before: PathSet) -> FilterStep:
    ref = None
    if inst.kind is Kind.SHORTEST:
        weights = [w for w in (t.path_weight(p) for p in before) if w is not None]
        ref = min(weights) if weights else None
    kept, gone = [], []
    for p in before:
        why = violation(inst, t, p, ref)
        if why is None and inst.kind is Kind.SHORTEST and ref is None:
            why = "total weight undefined"
        if why is None:
            kept.append(p)
        else:
            gone.append((p, why))
    return FilterStep(index, inst, before, PathSet._trusted(tuple(kept)), tuple(gone), ref)


def execute(
    structure: CausalKnowledgeStructure,
    t: Topology,
    intent: Intent,
    max_hops: Optional[int] = None,
    ceiling: int = DEFAULT_CEILING,
    notes: Sequence[str] = (),
) -> ExecutionTrace:
    _check_bound(t, intent, structure)
    space = enumerate_solution_space(t, (intent.start, intent.dest), max_hops, ceiling)
    if not len(space):
        raise EmptySolutionSpace(f"no candidates from {intent.start} to {intent.dest}")
    steps = []
    current = space
    for i, inst in enumerate(structure.chain):
        step = apply_step(i, inst, t, current)
        steps.append(step)
        current = step.survivors
    return ExecutionTrace(t.label, intent, structure, space, tuple(steps), current, tuple(notes))


def step_holds(step: FilterStep, t: Topology, p) -> bool:
    """Re-evaluate the step's instantiated predicate on ``p``."""
    if step.instance.kind is Kind.SHORTEST and step.reference_weight is None:
        return False
    return violation(step.instance, t, p, step.reference_weight) is None


# -- metrics -------------------------------------------------------------------


@dataclass(frozen=True)
class StepMetrics:
    step: int  # 0 is the unfiltered solution space, k is after the k-th constraint
    constraint: str
    subspace_size: int
    P: Fraction
    R: Fraction


def _pr(subspace: PathSet, target: PathSet) -> tuple:
    hit = len(subspace & target)
    p = Fraction(hit, len(subspace)) if len(subspace) else Fraction(0)
    return p, Fraction(hit, len(target))


def compute_metrics(trace: ExecutionTrace, target: PathSet) -> list:
    """P and R for the solution space and after every step, in exact arithmetic."""
    if not len(target):
        raise EmptyTarget("target space is empty; P and R are undefined")
    rows = [StepMetrics(0, "solution space", len(trace.space), *_pr(trace.space, target))]
    for step in trace.steps:
        rows.append(StepMetrics(step.index + 1, step.instance.label, len(step.survivors), *_pr(step.survivors, target)))
    return rows


def exact_decimal(x: Fraction) -> str:
    """Exact rendering: integers and terminating decimals as decimals, otherwise p/q."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    d = x.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{x.numerator}/{x.denominator}"
    digits = max(twos, fives)
    scaled = x * 10**digits
    sign = "-" if scaled < 0 else ""
    whole = str(abs(scaled.numerator))
    whole = whole.rjust(digits + 1, "0")
    return f"{sign}{whole[:-digits]}.{whole[-digits:]}"


def parse_exact(text: str) -> Fraction:
    return Fraction(text)


def metrics_csv(rows: Sequence[StepMetrics], config: Optional[Mapping] = None) -> str:
    buf = io.StringIO()
    if config is not None:
        buf.write("# config: " + json.dumps(dict(config), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "constraint", "subspace_size", "P", "R"])
    for r in rows:
        w.writerow([r.step, r.constraint, r.subspace_size, exact_decimal(r.P), exact_decimal(r.R)])
    return buf.getvalue()


def read_metrics_csv(text: str) -> list:
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return [
        StepMetrics(int(r["step"]), r["constraint"], int(r["subspace_size"]), parse_exact(r["P"]), parse_exact(r["R"]))
        for r in csv.DictReader(lines)
    ]


# -- explanations --------------------------------------------------------------


def _hops(p) -> list:
    return list(zip(p, p[1:]))


def _link_key(t: Topology, u: str, v: str) -> str:
    for l in t.links:
        if (l.src, l.dst) == (u, v) or (not l.directed and (l.dst, l.src) == (u, v)):
            return f"{l.src}->{l.dst}" if l.directed else f"{l.src}-{l.dst}"
    return f"{u}->{v}"


def explanation_model(trace: ExecutionTrace, t: Optional[Topology] = None) -> dict:
    """The single content model both renderings are produced from."""
    steps = []
    for s in trace.steps:
        steps.append(
            {
                "index": s.index,
                "constraint": s.instance.kind.value,
                "label": s.instance.label,
                "bindings": dict(s.instance.bindings),
                "negated": s.instance.negated,
                "score": s.instance.score,
                "before": len(s.before),
                "after": len(s.survivors),
                "eliminated_count": len(s.eliminated),
                "reference_weight": None if s.reference_weight is None else str(s.reference_weight),
                "eliminated": [{"path": list(p), "reason": why} for p, why in s.eliminated],
            }
        )
    labels = [s.instance.label for s in trace.steps]
    selected = [list(p) for p in trace.final]
    links = []
    used = set()
    for p in trace.final:
        for u, v in _hops(p):
            key = _link_key(t, u, v) if t is not None else f"{u}->{v}"
            if key in used:
                continue
            used.add(key)
            links.append({"link": key, "survived": labels})
    unused = []
    if t is not None:
        last_drop: dict = {}
        for s in trace.steps:
            for p, _ in s.eliminated:
                for u, v in _hops(p):
                    if t.has_link(u, v):
                        last_drop[_link_key(t, u, v)] = s.instance.label
        for l in t.links:
            key = f"{l.src}->{l.dst}" if l.directed else f"{l.src}-{l.dst}"
            if key not in used and key in last_drop:
                unused.append({"link": key, "last_eliminated_by": last_drop[key]})
    return {
        "topology": trace.topology_label,
        "intent": trace.intent.source,
        "structure": trace.structure.describe(),
        "posterior": trace.structure.posterior,
        "solution_space": len(trace.space),
        "steps": steps,
        "selected": selected,
        "links": links,
        "unused_links": unused,
        "notes": list(trace.notes),
    }


def render_text(model: Mapping, k: int = 5) -> str:
    out = [
        f"Intent: {model['intent']}",
        f"Topology: {model['topology']}",
        f"Structure: {model['structure']} (posterior {model['posterior']:.4f})",
        f"Solution space: {model['solution_space']} candidate paths",
    ]
    for note in model["notes"]:
        out.append(f"Note: {note}")
    for s in model["steps"]:
        out.append("")
        out.append(f"Step {s['index'] + 1}: {s['label']} [{s['constraint']}, score {s['score']:.3f}]")
        out.append(f"  {s['before']} candidates in, {s['after']} kept, {s['eliminated_count']} eliminated")
        if s["reference_weight"] is not None:
            out.append(f"  minimum total weight among candidates: {s['reference_weight']}")
        if not s["eliminated"]:
            out.append("  no candidate was eliminated at this step")
        for e in s["eliminated"][:k]:
            out.append(f"  - {'-'.join(e['path'])}: {e['reason']}")
        if s["eliminated_count"] > k:
            out.append(f"  ... and {s['eliminated_count'] - k} more")
    out.append("")
    if model["selected"]:
        out.append("Selected path(s):")
        for p in model["selected"]:
            out.append(f"  {'-'.join(p)}")
        out.append("Why each link was selected:")
        for l in model["links"]:
            out.append(f"  {l['link']}: on a path that passed " + ", ".join(l["survived"]))
    else:
        out.append("No path satisfies the structure.")
    if model["unused_links"]:
        out.append("Why other links were not selected:")
        for l in model["unused_links"]:
            out.append(f"  {l['link']}: last candidates through it eliminated by {l['last_eliminated_by']}")
    return "\n".join(out) + "\n"


def explain(trace: ExecutionTrace, t: Optional[Topology] = None, fmt: str = "text", k: int = 5) -> str:
    model = explanation_model(trace, t)
    if fmt == "machine":
        return json.dumps(model, indent=1) + "\n"
    if fmt != "text":
        raise ValueError("format must be 'text' or 'machine'")
    return render_text(model, k)


# -- flow rules ----------------------------------------------------------------


@dataclass(frozen=True)
class FlowRule:
    node: str
    match: tuple  # (src endpoint, dst endpoint)
    action: str  # next hop

    def to_dict(self) -> dict:
        return {"node": self.node, "match": {"src": self.match[0], "dst": self.match[1]}, "action": {"forward": self.action}}

    @classmethod
    def from_dict(cls, d: Mapping) -> "FlowRule":
        return cls(d["node"], (d["match"]["src"], d["match"]["dst"]), d["action"]["forward"])


def export_flow_rules(path: Sequence[str], t: Topology, intent: Intent) -> list:
    path = tuple(path)
    if not path or not t.is_connected_path(path) or len(set(path)) != len(path):
        raise InvalidPath(f"{'-'.join(path)} is not a connected loop-free path on {t.label!r}")
    if len(path) > 1 and (path[0], path[-1]) != (intent.start, intent.dest):
        raise InvalidPath("path endpoints do not match the intent")
    match = (intent.start, intent.dest)
    return [FlowRule(u, match, v) for u, v in zip(path, path[1:])]


def replay_flow_rules(rules: Sequence[FlowRule], start: str, dest: str) -> tuple:
    """Follow the rules hop by hop from ``start``; stops when no rule matches."""
    table = {(r.node, r.match): r.action for r in rules}
    path = [start]
    while len(path) <= len(rules):
        nxt = table.get((path[-1], (start, dest)))
        if nxt is None:
            break
        path.append(nxt)
    return tuple(path)


def flow_rules_document(rules: Sequence[FlowRule], path: Sequence[str], intent: Intent, config: Optional[Mapping] = None) -> dict:
    doc: dict = {}
    if config is not None:
        doc["config"] = dict(config)
    doc["intent"] = intent.source
    doc["path"] = list(path)
    doc["rules"] = [r.to_dict() for r in rules]
    return doc
