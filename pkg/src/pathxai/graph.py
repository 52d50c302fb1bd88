"""Topologies, candidate paths and the brute-force oracles.

A path is a plain ``tuple`` of node names. It may be disconnected or loopy;
whether it is a usable route is exactly what the constraints decide.
"""
from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path as FsPath
from typing import TYPE_CHECKING, Any, Iterable, Iterator, Mapping, Optional, Sequence, Union

from .errors import (
    DuplicateLink,
    EmptyNodeSet,
    InvalidNodeId,
    ParseError,
    SelfLoop,
    SpaceTooLarge,
    UnknownEndpoint,
)

if TYPE_CHECKING:
    from .intent import Intent

Path = tuple  # tuple[str, ...]; kept as a plain tuple for speed
Weight = Fraction

DEFAULT_CEILING = 10**6
_NODE_RE = re.compile(r"^[A-Za-z0-9_-]+$")


def check_node_id(name: Any) -> str:
    if not isinstance(name, str) or not _NODE_RE.match(name):
        raise InvalidNodeId(f"invalid node id {name!r}")
    return name


def to_weight(value: Union[int, float, str, Fraction]) -> Fraction:
    """Parse a link weight. Floats go through ``str`` so 0.1 stays 1/10."""
    if isinstance(value, bool):
        raise ValueError(f"invalid weight {value!r}")
    if isinstance(value, float):
        value = str(value)
    return Fraction(value)


def weight_to_json(w: Fraction) -> Union[int, str]:
    return w.numerator if w.denominator == 1 else f"{w.numerator}/{w.denominator}"


@dataclass(frozen=True)
class Link:
    src: str
    dst: str
    weight: Fraction = Fraction(1)
    directed: bool = False

    def __post_init__(self):
        check_node_id(self.src)
        check_node_id(self.dst)
        if self.src == self.dst:
            raise SelfLoop(f"self-loop on {self.src}")
        object.__setattr__(self, "weight", to_weight(self.weight))
        if self.weight < 0:
            raise ValueError(f"negative weight on {self.src}-{self.dst}")


@dataclass(frozen=True)
class Topology:
    """Validated, immutable network graph. Build it with :func:`build_topology`."""

    label: str
    nodes: tuple
    links: tuple
    _arcs: Mapping = field(repr=False, compare=False, hash=False, default=None)

    def weight(self, u: str, v: str) -> Optional[Fraction]:
        """Weight of the hop u->v, or None when there is no such link."""
        return self._arcs.get((u, v))

    def has_link(self, u: str, v: str) -> bool:
        return (u, v) in self._arcs

    def path_weight(self, p: Sequence[str]) -> Optional[Fraction]:
        total = Fraction(0)
        arcs = self._arcs
        for hop in zip(p, p[1:]):
            w = arcs.get(hop)
            if w is None:
                return None
            total += w
        return total

    def is_connected_path(self, p: Sequence[str]) -> bool:
        arcs = self._arcs
        return all(hop in arcs for hop in zip(p, p[1:]))

    def neighbours(self, u: str) -> list:
        return sorted(v for (a, v) in self._arcs if a == u)

    def relabel(self, mapping: Mapping[str, str], label: Optional[str] = None) -> "Topology":
        return build_topology(
            [mapping[n] for n in self.nodes],
            [Link(mapping[l.src], mapping[l.dst], l.weight, l.directed) for l in self.links],
            label=label or self.label,
        )

    def to_dict(self) -> dict:
        links = []
        for l in self.links:
            d: dict = {"src": l.src, "dst": l.dst}
            if l.weight != 1:
                d["weight"] = weight_to_json(l.weight)
            if l.directed:
                d["directed"] = True
            links.append(d)
        return {"label": self.label, "nodes": list(self.nodes), "links": links}


def build_topology(nodes: Iterable[str], links: Iterable[Link], label: str = "topology") -> Topology:
    node_list = [check_node_id(n) for n in nodes]
    if not node_list:
        raise EmptyNodeSet("topology needs at least one node")
    if len(set(node_list)) != len(node_list):
        raise ValueError("duplicate node ids")
    known = set(node_list)
    arcs: dict = {}
    link_list = []
    for link in links:
        if not isinstance(link, Link):
            link = Link(*link)
        for end in (link.src, link.dst):
            if end not in known:
                raise UnknownEndpoint(f"link endpoint {end!r} is not a node")
        hops = [(link.src, link.dst)] if link.directed else [(link.src, link.dst), (link.dst, link.src)]
        for hop in hops:
            if hop in arcs:
                raise DuplicateLink(f"more than one link for {hop[0]}->{hop[1]}")
            arcs[hop] = link.weight
        link_list.append(link)
    return Topology(label=label, nodes=tuple(sorted(node_list)), links=tuple(link_list), _arcs=arcs)


def topology_from_dict(doc: Mapping[str, Any]) -> Topology:
    try:
        links = [
            Link(l["src"], l["dst"], to_weight(l.get("weight", 1)), bool(l.get("directed", False)))
            for l in doc["links"]
        ]
        nodes = doc["nodes"]
        if not isinstance(nodes, list):
            raise ParseError("'nodes' must be an array")
        return build_topology(nodes, links, label=str(doc.get("label", "topology")))
    except (KeyError, TypeError, ZeroDivisionError) as exc:
        raise ParseError(f"malformed topology document: {exc!r}") from exc


def load_topology(path: Union[str, FsPath]) -> Topology:
    try:
        doc = json.loads(FsPath(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return topology_from_dict(doc)


class PathSet:
    """Deduplicated set of paths iterated in lexicographic node-sequence order."""

    __slots__ = ("_paths", "_members")

    def __init__(self, paths: Iterable[Sequence[str]] = ()):
        members = set()
        for p in paths:
            p = tuple(p)
            if not p:
                raise ValueError("a path needs at least one node")
            members.add(p)
        self._members = frozenset(members)
        self._paths = tuple(sorted(members))

    @classmethod
    def _trusted(cls, ordered: tuple) -> "PathSet":
        # caller guarantees: sorted, unique, non-empty tuples
        obj = cls.__new__(cls)
        obj._paths = ordered
        obj._members = frozenset(ordered)
        return obj

    def __iter__(self) -> Iterator[tuple]:
        return iter(self._paths)

    def __len__(self) -> int:
        return len(self._paths)

    def __contains__(self, p) -> bool:
        return tuple(p) in self._members

    def __eq__(self, other) -> bool:
        if isinstance(other, PathSet):
            return self._members == other._members
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._members)

    def __and__(self, other: "PathSet") -> "PathSet":
        return PathSet._trusted(tuple(p for p in self._paths if p in other._members))

    def __or__(self, other: "PathSet") -> "PathSet":
        return PathSet(self._members | other._members)

    def __sub__(self, other: "PathSet") -> "PathSet":
        return PathSet._trusted(tuple(p for p in self._paths if p not in other._members))

    def __le__(self, other: "PathSet") -> bool:
        return self._members <= other._members

    def __repr__(self) -> str:
        shown = ", ".join("-".join(p) for p in self._paths[:4])
        more = ", ..." if len(self._paths) > 4 else ""
        return f"PathSet({len(self)}: {shown}{more})"

    def filter(self, pred) -> "PathSet":
        return PathSet._trusted(tuple(p for p in self._paths if pred(p)))

    def to_list(self) -> list:
        return [list(p) for p in self._paths]


def count_solution_space(n_nodes: int, max_hops: int) -> int:
    """Number of sequences s..d (s != d) with 1..``max_hops`` hops over
    ``n_nodes`` nodes: each of the k-1 interior positions is free."""
    return sum(n_nodes ** (k - 1) for k in range(1, max_hops + 1))


def enumerate_solution_space(
    t: Topology,
    endpoints: tuple,
    max_hops: Optional[int] = None,
    ceiling: int = DEFAULT_CEILING,
) -> PathSet:
    """All node sequences from ``endpoints[0]`` to ``endpoints[1]`` with at most
    ``max_hops`` hops, whether or not consecutive nodes are linked.

    Interior positions range over every node, so the set includes disconnected
    and loopy candidates (even ``A, A, C``). ``max_hops`` defaults to
    ``len(t.nodes) - 1``.
    """
    start, dest = endpoints
    for end in (start, dest):
        if end not in t.nodes:
            raise UnknownEndpoint(f"{end!r} is not a node of {t.label!r}")
    if start == dest:
        raise ValueError("endpoints must differ")
    if max_hops is None:
        max_hops = len(t.nodes) - 1
    if max_hops < 1:
        raise ValueError("max_hops must be >= 1")
    size = count_solution_space(len(t.nodes), max_hops)
    if size > ceiling:
        raise SpaceTooLarge(f"{size} candidates exceed the ceiling of {ceiling}")

    out = []
    for hops in range(1, max_hops + 1):
        out.extend((start, *mid, dest) for mid in itertools.product(t.nodes, repeat=hops - 1))
    out.sort()
    return PathSet._trusted(tuple(out))


@dataclass(frozen=True)
class PathFacts:
    is_connected: bool
    is_simple: bool
    endpoints: tuple
    total_weight: Optional[Fraction]
    visited: frozenset

    def visits(self, node: str) -> bool:
        return node in self.visited


def path_predicates(t: Topology, p: Sequence[str]) -> PathFacts:
    p = tuple(p)
    hops = list(zip(p, p[1:]))
    connected = all(t.has_link(u, v) for u, v in hops)
    # an undirected link used twice, in either direction, is a repeated link
    undirected = [frozenset(h) for h in hops]
    simple = len(set(p)) == len(p) and len(set(undirected)) == len(undirected)
    return PathFacts(
        is_connected=connected,
        is_simple=simple,
        endpoints=(p[0], p[-1]),
        total_weight=t.path_weight(p) if connected else None,
        visited=frozenset(p),
    )


def hop_count(p: Sequence[str]) -> int:
    return len(p) - 1


def oracle_target_space(t: Topology, intent: "Intent", max_hops: Optional[int] = None, ceiling: int = DEFAULT_CEILING) -> PathSet:
    """Brute force: every enumerated candidate that honours the intent directly."""
    for n in (intent.start, intent.dest, *intent.via, *intent.avoid):
        if n not in t.nodes:
            raise UnknownEndpoint(f"intent node {n!r} is not in {t.label!r}")
    space = enumerate_solution_space(t, (intent.start, intent.dest), max_hops, ceiling)
    ok = []
    for p in space:
        if not t.is_connected_path(p) or len(set(p)) != len(p):
            continue
        if p[0] != intent.start or p[-1] != intent.dest:
            continue
        if any(v not in p for v in intent.via) or any(a in p for a in intent.avoid):
            continue
        ok.append(p)
    if intent.objective == "SHORTEST" and ok:
        weights = {p: t.path_weight(p) for p in ok}
        best = min(weights.values())
        ok = [p for p in ok if weights[p] == best]
    return PathSet._trusted(tuple(ok))
