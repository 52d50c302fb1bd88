"""Constraint templates, bound instances, and the predicates behind them.

A template is environment-invariant: it names placeholders, never nodes.
An instance binds those placeholders to nodes of a concrete topology.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .graph import Topology


class Kind(str, Enum):
    FIXED_NODE = "FixedNode"
    ENDPOINTS = "Endpoints"
    CONNECTIVITY = "Connectivity"
    LOOP_FREE = "LoopFree"
    SHORTEST = "Shortest"


@dataclass(frozen=True)
class ConstraintTemplate:
    kind: Kind
    placeholders: tuple
    scope: str  # point | adjacent | global
    category: str  # feasibility | optimization

    @property
    def name(self) -> str:
        return self.kind.value


TEMPLATES = {
    Kind.FIXED_NODE: ConstraintTemplate(Kind.FIXED_NODE, ("node",), "point", "feasibility"),
    Kind.ENDPOINTS: ConstraintTemplate(Kind.ENDPOINTS, ("start", "dest"), "global", "feasibility"),
    Kind.CONNECTIVITY: ConstraintTemplate(Kind.CONNECTIVITY, (), "adjacent", "feasibility"),
    Kind.LOOP_FREE: ConstraintTemplate(Kind.LOOP_FREE, (), "global", "feasibility"),
    Kind.SHORTEST: ConstraintTemplate(Kind.SHORTEST, (), "global", "optimization"),
}

LABELS = {
    Kind.FIXED_NODE: "fixed node",
    Kind.ENDPOINTS: "endpoints",
    Kind.CONNECTIVITY: "connectivity",
    Kind.LOOP_FREE: "dead-lock free (loop-free)",
    Kind.SHORTEST: "shortest",
}


def template(kind) -> ConstraintTemplate:
    return TEMPLATES[Kind(kind)]


@dataclass(frozen=True)
class ConstraintInstance:
    """A template with its placeholders bound.

    ``negated`` is only meaningful for FixedNode and turns it into an
    exclusion (the AVOID form).
    """

    kind: Kind
    bindings: tuple = ()  # ((placeholder, node), ...) in template order
    score: float = 1.0
    negated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if isinstance(self.bindings, Mapping):
            object.__setattr__(self, "bindings", tuple(self.bindings.items()))
        names = tuple(name for name, _ in self.bindings)
        if names != self.template.placeholders:
            raise ValueError(
                f"{self.kind.value} needs bindings for {self.template.placeholders}, got {names}"
            )
        if self.negated and self.kind is not Kind.FIXED_NODE:
            raise ValueError("only FixedNode can be negated")

    @property
    def template(self) -> ConstraintTemplate:
        return TEMPLATES[self.kind]

    @property
    def binding(self) -> dict:
        return dict(self.bindings)

    @property
    def category(self) -> str:
        return self.template.category

    @property
    def scope(self) -> str:
        return self.template.scope

    @property
    def nodes(self) -> tuple:
        return tuple(node for _, node in self.bindings)

    @property
    def label(self) -> str:
        if self.negated:
            return f"avoid node {self.binding['node']}"
        base = LABELS[self.kind]
        if self.kind is Kind.FIXED_NODE:
            return f"{base} {self.binding['node']}"
        if self.kind is Kind.ENDPOINTS:
            b = self.binding
            return f"{base} {b['start']}->{b['dest']}"
        return base

    def sort_key(self) -> tuple:
        return (self.kind.value, self.nodes, self.negated)

    def with_score(self, score: float) -> "ConstraintInstance":
        return replace(self, score=score)

    def relabel(self, mapping: Mapping[str, str]) -> "ConstraintInstance":
        return replace(self, bindings=tuple((k, mapping[v]) for k, v in self.bindings))

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "bindings": dict(self.bindings), "score": self.score}
        if self.negated:
            d["negated"] = True
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "ConstraintInstance":
        tpl = template(d["kind"])
        b = d.get("bindings", {})
        return cls(
            tpl.kind,
            tuple((name, b[name]) for name in tpl.placeholders),
            float(d.get("score", 1.0)),
            bool(d.get("negated", False)),
        )


def _missing_hop(t: Topology, p: Sequence[str]):
    for u, v in zip(p, p[1:]):
        if not t.has_link(u, v):
            return u, v
    return None


def _fmt_weight(w: Fraction) -> str:
    return str(w.numerator) if w.denominator == 1 else f"{w.numerator}/{w.denominator}"


def violation(
    inst: ConstraintInstance,
    t: Topology,
    p: Sequence[str],
    reference_weight: Optional[Fraction] = None,
) -> Optional[str]:
    """Return None when ``p`` satisfies ``inst``, else a one-line reason.

    Shortest needs ``reference_weight``: the minimum total weight it compares
    against.
    """
    kind = inst.kind
    if kind is Kind.CONNECTIVITY:
        hop = _missing_hop(t, p)
        return None if hop is None else f"link {hop[0]}->{hop[1]} absent from topology"
    if kind is Kind.LOOP_FREE:
        seen = set()
        for n in p:
            if n in seen:
                return f"node {n} visited more than once"
            seen.add(n)
        return None
    if kind is Kind.ENDPOINTS:
        b = inst.binding
        if p[0] != b["start"]:
            return f"starts at {p[0]}, not {b['start']}"
        if p[-1] != b["dest"]:
            return f"ends at {p[-1]}, not {b['dest']}"
        return None
    if kind is Kind.FIXED_NODE:
        node = inst.binding["node"]
        if inst.negated:
            return f"passes through avoided node {node}" if node in p else None
        return None if node in p else f"does not pass through fixed node {node}"
    if kind is Kind.SHORTEST:
        hop = _missing_hop(t, p)
        if hop is not None:
            return f"total weight undefined (link {hop[0]}->{hop[1]} absent)"
        if reference_weight is None:
            return None
        w = t.path_weight(p)
        if w > reference_weight:
            return f"total weight {_fmt_weight(w)} exceeds the minimum {_fmt_weight(reference_weight)}"
        return None
    raise ValueError(f"unknown constraint kind {kind!r}")


def holds(inst: ConstraintInstance, t: Topology, p: Sequence[str], reference_weight=None) -> bool:
    return violation(inst, t, p, reference_weight) is None
