"""Operator intents: a small DSL, entity recognition, and instantiation.

Grammar (keywords are case-insensitive, node names are not)::

    FIND PATH FROM <node> TO <node> (VIA <node>)* (AVOID <node>)* (OBJECTIVE (SHORTEST|ANY))?
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Iterator, Mapping

from .constraints import ConstraintInstance, Kind
from .errors import ConflictingEntities, IntentSyntaxError, MissingTemplate

OBJECTIVES = ("SHORTEST", "ANY")
_TOKEN = re.compile(r"\S+")
_NODE = re.compile(r"^[A-Za-z0-9_-]+$")


@dataclass(frozen=True)
class Intent:
    start: str
    dest: str
    via: tuple = ()
    avoid: tuple = ()
    objective: str = "SHORTEST"
    source: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "via", tuple(dict.fromkeys(self.via)))
        object.__setattr__(self, "avoid", tuple(sorted(set(self.avoid))))
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if self.start == self.dest:
            raise ConflictingEntities(f"start and destination are both {self.start}")
        clash = set(self.via) & set(self.avoid)
        if clash:
            raise ConflictingEntities(f"nodes both required and avoided: {sorted(clash)}")
        for end in (self.start, self.dest):
            if end in self.avoid:
                raise ConflictingEntities(f"endpoint {end} is also avoided")
        if not self.source:
            object.__setattr__(self, "source", render_intent(self))

    @property
    def nodes(self) -> tuple:
        return (self.start, self.dest, *self.via, *self.avoid)

    def relabel(self, mapping: Mapping[str, str]) -> "Intent":
        return Intent(
            mapping[self.start],
            mapping[self.dest],
            tuple(mapping[v] for v in self.via),
            tuple(mapping[a] for a in self.avoid),
            self.objective,
        )


def render_intent(intent: Intent) -> str:
    parts = ["FIND PATH FROM", intent.start, "TO", intent.dest]
    for v in intent.via:
        parts += ["VIA", v]
    for a in intent.avoid:
        parts += ["AVOID", a]
    if intent.objective != "SHORTEST":
        parts += ["OBJECTIVE", intent.objective]
    return " ".join(parts)


def _tokens(text: str) -> Iterator[tuple]:
    for m in _TOKEN.finditer(text):
        yield m.group(), len(text[: m.start()].encode("utf-8"))


def parse_intent(text: str) -> Intent:
    toks = list(_tokens(text))
    end = len(text.encode("utf-8"))
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else (None, end)

    def keyword(word: str) -> None:
        nonlocal pos
        tok, off = peek()
        if tok is None or tok.upper() != word:
            raise IntentSyntaxError(f"expected {word}, found {tok or 'end of input'!r}", off)
        pos += 1

    def node() -> str:
        nonlocal pos
        tok, off = peek()
        if tok is None or not _NODE.match(tok):
            raise IntentSyntaxError(f"expected a node name, found {tok or 'end of input'!r}", off)
        pos += 1
        return tok

    keyword("FIND")
    keyword("PATH")
    keyword("FROM")
    start = node()
    keyword("TO")
    dest = node()
    via, avoid = [], []
    while peek()[0] is not None and peek()[0].upper() == "VIA":
        pos += 1
        via.append(node())
    while peek()[0] is not None and peek()[0].upper() == "AVOID":
        pos += 1
        avoid.append(node())
    objective = "SHORTEST"
    if peek()[0] is not None and peek()[0].upper() == "OBJECTIVE":
        pos += 1
        tok, off = peek()
        if tok is None or tok.upper() not in OBJECTIVES:
            raise IntentSyntaxError(f"expected SHORTEST or ANY, found {tok or 'end of input'!r}", off)
        objective = tok.upper()
        pos += 1
    tok, off = peek()
    if tok is not None:
        raise IntentSyntaxError(f"unexpected token {tok!r}", off)
    return Intent(start, dest, tuple(via), tuple(avoid), objective, source=text.strip())


def parse_intent_batch(text: str) -> list:
    """One intent per line; blank lines and ``#`` comments are skipped."""
    intents = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            intents.append(parse_intent(line))
    return intents


def _library_scores(library: Any) -> dict:
    """Accept a TemplateLibrary, a mapping kind -> score/model, or (template, model) pairs."""
    if hasattr(library, "scores"):
        return dict(library.scores())
    items = library.items() if isinstance(library, Mapping) else library
    scores = {}
    for key, value in items:
        kind = Kind(getattr(key, "kind", key))
        scores[kind] = float(getattr(value, "score", value))
    return scores


def instantiate(intent: Intent, library: Any) -> tuple:
    """Map the intent's entities onto library templates and bind placeholders.

    The result is sorted by kind/bindings only so it is deterministic; chain
    order is decided elsewhere.
    """
    scores = _library_scores(library)
    if not scores:
        raise ValueError("template library is empty")
    for kind in (Kind.CONNECTIVITY, Kind.ENDPOINTS):
        if kind not in scores:
            raise MissingTemplate(f"library has no {kind.value} template")
    out = [
        ConstraintInstance(Kind.CONNECTIVITY, (), scores[Kind.CONNECTIVITY]),
        ConstraintInstance(
            Kind.ENDPOINTS, (("start", intent.start), ("dest", intent.dest)), scores[Kind.ENDPOINTS]
        ),
    ]
    if Kind.LOOP_FREE in scores:
        out.append(ConstraintInstance(Kind.LOOP_FREE, (), scores[Kind.LOOP_FREE]))
    if Kind.FIXED_NODE in scores:
        s = scores[Kind.FIXED_NODE]
        out += [ConstraintInstance(Kind.FIXED_NODE, (("node", v),), s) for v in intent.via]
        out += [ConstraintInstance(Kind.FIXED_NODE, (("node", a),), s, negated=True) for a in intent.avoid]
    if intent.objective == "SHORTEST" and Kind.SHORTEST in scores:
        out.append(ConstraintInstance(Kind.SHORTEST, (), scores[Kind.SHORTEST]))
    return tuple(sorted(out, key=ConstraintInstance.sort_key))


def inactive_mappings(intent: Intent, library: Any) -> list:
    """Intent entities that mapped to no library template, as readable notes."""
    scores = _library_scores(library)
    notes = []
    if Kind.LOOP_FREE not in scores:
        notes.append("PATH: no LoopFree template in library; loops are not excluded")
    if Kind.FIXED_NODE not in scores:
        notes += [f"VIA {v}: no FixedNode template in library; not enforced" for v in intent.via]
        notes += [f"AVOID {a}: no FixedNode template in library; not enforced" for a in intent.avoid]
    if intent.objective == "SHORTEST" and Kind.SHORTEST not in scores:
        notes.append("OBJECTIVE SHORTEST: no Shortest template in library; not enforced")
    return notes
