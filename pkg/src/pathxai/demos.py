"""Demonstration corpora: load, validate, serialize, and generate.

A record is one path-selection practice: the paths an operator selected and
the ones they discarded on a named topology.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Any, Mapping, Optional, Sequence, Union

from .errors import (
    EmptySelected,
    NoValidPath,
    OverlappingSets,
    ParseError,
    UnknownEndpoint,
    UnknownTopologyLabel,
)
from .graph import PathSet, Topology, enumerate_solution_space, oracle_target_space, topology_from_dict
from .intent import Intent

FAILURE_MODES = ("disconnected", "loopy", "wrong_endpoints", "misses_via", "non_shortest")


@dataclass(frozen=True)
class PracticeRecord:
    topology_label: str
    selected: PathSet
    discarded: PathSet

    def __post_init__(self):
        if not len(self.selected):
            raise EmptySelected(f"record on {self.topology_label!r} has no selected path")
        overlap = self.selected & self.discarded
        if len(overlap):
            shown = "-".join(next(iter(overlap)))
            raise OverlappingSets(f"path {shown} is both selected and discarded")

    def to_dict(self) -> dict:
        return {
            "topology": self.topology_label,
            "selected": self.selected.to_list(),
            "discarded": self.discarded.to_list(),
        }


@dataclass(frozen=True)
class DemonstrationSet:
    topologies: Mapping[str, Topology]
    records: tuple
    seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        for i, rec in enumerate(self.records):
            t = self.topologies.get(rec.topology_label)
            if t is None:
                raise UnknownTopologyLabel(f"record {i} names unknown topology {rec.topology_label!r}")
            known = set(t.nodes)
            for p in (*rec.selected, *rec.discarded):
                missing = set(p) - known
                if missing:
                    raise UnknownEndpoint(f"record {i} uses nodes {sorted(missing)} not in {t.label!r}")

    def __len__(self) -> int:
        return len(self.records)

    def topology_of(self, rec: PracticeRecord) -> Topology:
        return self.topologies[rec.topology_label]

    def to_dict(self, config: Optional[Mapping] = None) -> dict:
        doc: dict = {}
        if self.seed is not None:
            doc["seed"] = self.seed
        if config is not None:
            doc["config"] = dict(config)
        doc["topologies"] = [t.to_dict() for t in self.topologies.values()]
        doc["records"] = [r.to_dict() for r in self.records]
        return doc

    def dumps(self, config: Optional[Mapping] = None) -> str:
        """Deterministic JSON with one topology and one record per line."""
        doc = self.to_dict(config)
        lines = ["{"]
        head = [k for k in doc if k not in ("topologies", "records")]
        for k in head:
            lines.append(f" {json.dumps(k)}: {json.dumps(doc[k], sort_keys=True)},")
        for key in ("topologies", "records"):
            items = [json.dumps(x) for x in doc[key]]
            lines.append(f' "{key}": [')
            lines.extend(f"  {item}," for item in items[:-1])
            if items:
                lines.append(f"  {items[-1]}")
            lines.append(" ]," if key == "topologies" else " ]")
        lines.append("}")
        return "\n".join(lines) + "\n"


def merge(*sets: DemonstrationSet, seed: Optional[int] = None) -> DemonstrationSet:
    topologies: dict = {}
    records: list = []
    for ds in sets:
        for label, t in ds.topologies.items():
            if label in topologies and topologies[label] != t:
                raise ValueError(f"two different topologies share the label {label!r}")
            topologies[label] = t
        records.extend(ds.records)
    return DemonstrationSet(topologies, tuple(records), seed)


def _paths(value: Any, what: str) -> PathSet:
    if not isinstance(value, list) or not all(isinstance(p, list) and p for p in value):
        raise ParseError(f"{what} must be an array of non-empty node arrays")
    return PathSet(tuple(str(n) for n in p) for p in value)


def load_demonstrations(document: Union[str, bytes, Mapping]) -> DemonstrationSet:
    """Build a validated corpus from JSON text or an already-decoded mapping."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ParseError(f"corpus is not valid JSON: {exc}") from exc
    if not isinstance(document, Mapping):
        raise ParseError("corpus must be an object")
    try:
        topo_docs = document["topologies"]
        rec_docs = document["records"]
    except KeyError as exc:
        raise ParseError(f"corpus lacks {exc.args[0]!r}") from exc
    if isinstance(topo_docs, Mapping):
        topo_docs = [dict(v, label=v.get("label", k)) for k, v in topo_docs.items()]
    topologies = {}
    for td in topo_docs:
        t = topology_from_dict(td)
        topologies[t.label] = t
    if not isinstance(rec_docs, list):
        raise ParseError("'records' must be an array")
    records = []
    for i, rd in enumerate(rec_docs):
        if not isinstance(rd, Mapping) or "topology" not in rd:
            raise ParseError(f"record {i} lacks a 'topology' label")
        records.append(
            PracticeRecord(
                str(rd["topology"]),
                _paths(rd.get("selected", []), f"record {i} 'selected'"),
                _paths(rd.get("discarded", []), f"record {i} 'discarded'"),
            )
        )
    seed = document.get("seed")
    return DemonstrationSet(topologies, tuple(records), None if seed is None else int(seed))


def load_demonstrations_file(path: Union[str, FsPath]) -> DemonstrationSet:
    return load_demonstrations(FsPath(path).read_text())


@dataclass(frozen=True)
class PolicySpec:
    """The operator behaviour a synthetic corpus imitates.

    Selected paths are always connected, loop-free, and shortest between the
    drawn endpoints; ``via`` adds nodes every selected path must visit.
    """

    via: tuple = ()
    max_hops: Optional[int] = None
    discard_size: int = 10
    retry_cap: int = 50

    def intent_for(self, start: str, dest: str) -> Intent:
        return Intent(start, dest, tuple(self.via), (), "SHORTEST")


def failure_modes(t: Topology, p: Sequence[str], intent: Intent, target: PathSet) -> frozenset:
    """Which policy rules a non-target candidate breaks."""
    modes = set()
    if not t.is_connected_path(p):
        modes.add("disconnected")
    if len(set(p)) != len(p):
        modes.add("loopy")
    if p[0] != intent.start or p[-1] != intent.dest:
        modes.add("wrong_endpoints")
    if any(v not in p for v in intent.via):
        modes.add("misses_via")
    if not modes and p not in target:
        modes.add("non_shortest")
    return frozenset(modes)


def _candidate_pool(t: Topology, intent: Intent, target: PathSet, max_hops: Optional[int]) -> list:
    # every bounded sequence leaving the source, whatever node it ends on
    pool = []
    for x in t.nodes:
        if x != intent.start:
            pool.extend(p for p in enumerate_solution_space(t, (intent.start, x), max_hops) if p not in target)
    return sorted(pool)


def sample_discards(
    t: Topology, intent: Intent, target: PathSet, size: int, rng: random.Random, max_hops: Optional[int] = None
) -> PathSet:
    """Stratified discard sample.

    First one non-shortest near miss (the only way to show the optimisation
    rule), then one candidate per feasibility failure mode not yet shown,
    then fill. Feasibility picks and the fill prefer candidates that break the
    most rules at once.
    """
    pool = _candidate_pool(t, intent, target, max_hops)
    modes = {p: failure_modes(t, p, intent, target) for p in pool}
    chosen: list = []

    def take(cands: list) -> None:
        best = max(len(modes[p]) for p in cands)
        tier = [p for p in cands if len(modes[p]) == best]
        chosen.append(rng.choice(tier))

    near = [p for p in pool if "non_shortest" in modes[p]]
    if near and size > 0:
        chosen.append(rng.choice(near))
    wanted = ["disconnected", "loopy", "wrong_endpoints"] + (["misses_via"] if intent.via else [])
    for mode in wanted:
        if len(chosen) >= size:
            break
        if any(mode in modes[p] for p in chosen):
            continue
        cands = [p for p in pool if mode in modes[p] and p not in chosen]
        if cands:
            take(cands)
    rest = [p for p in pool if p not in set(chosen)]
    while len(chosen) < size and rest:
        best = max(len(modes[p]) for p in rest)
        tier = [p for p in rest if len(modes[p]) == best]
        picked = rng.sample(tier, min(size - len(chosen), len(tier)))
        chosen.extend(picked)
        taken = set(picked)
        rest = [p for p in rest if p not in taken]
    return PathSet(chosen)


def generate_demonstrations(
    t: Topology, policy: PolicySpec, n_records: int, seed: int
) -> DemonstrationSet:
    if n_records < 1:
        raise ValueError("n_records must be a positive integer")
    for v in policy.via:
        if v not in t.nodes:
            raise UnknownEndpoint(f"via node {v!r} is not in {t.label!r}")
    eligible = [n for n in t.nodes if n not in policy.via]
    if len(eligible) < 2:
        raise NoValidPath("not enough nodes to draw endpoint pairs")
    rng = random.Random(seed)
    records = []
    for i in range(n_records):
        for _ in range(policy.retry_cap):
            start, dest = rng.sample(eligible, 2)
            intent = policy.intent_for(start, dest)
            target = oracle_target_space(t, intent, policy.max_hops)
            if len(target):
                break
        else:
            raise NoValidPath(f"record {i}: no valid path after {policy.retry_cap} endpoint draws")
        discarded = sample_discards(t, intent, target, policy.discard_size, rng, policy.max_hops)
        records.append(PracticeRecord(t.label, target, discarded))
    return DemonstrationSet({t.label: t}, tuple(records), seed)
