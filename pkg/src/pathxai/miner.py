"""Mining constraint templates from demonstrations.

Three detectors look for phenomena at three scales: a single node (FixedNode),
adjacent hops (Connectivity) and whole paths (LoopFree, Shortest, Endpoints).
Each candidate then gets a count-based likelihood: how often selected paths
satisfy it versus how often discarded paths do.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path as FsPath
from typing import Iterator, Mapping, Optional, Sequence, Union

from .constraints import TEMPLATES, ConstraintInstance, ConstraintTemplate, Kind, holds, template
from .demos import DemonstrationSet, PracticeRecord
from .errors import NoApplicableRecords, ParseError
from .graph import Topology

DEFAULT_TAU = 0.6
DEFAULT_SMOOTHING = Fraction(1)


@dataclass(frozen=True)
class LikelihoodModel:
    template: ConstraintTemplate
    sel_sat: int = 0
    sel_tot: int = 0
    dis_sat: int = 0
    dis_tot: int = 0
    smoothing: Fraction = DEFAULT_SMOOTHING

    def __post_init__(self):
        object.__setattr__(self, "smoothing", Fraction(self.smoothing))
        if self.smoothing <= 0:
            raise ValueError("smoothing must be positive")
        if not (0 <= self.sel_sat <= self.sel_tot and 0 <= self.dis_sat <= self.dis_tot):
            raise ValueError("satisfaction counts must not exceed totals")

    @property
    def p_sel(self) -> Fraction:
        return (self.sel_sat + self.smoothing) / (self.sel_tot + 2 * self.smoothing)

    @property
    def p_dis(self) -> Fraction:
        return (self.dis_sat + self.smoothing) / (self.dis_tot + 2 * self.smoothing)

    @property
    def exact_score(self) -> Fraction:
        return self.p_sel * (1 - self.p_dis)

    @property
    def score(self) -> float:
        return float(self.exact_score)

    @property
    def kind(self) -> Kind:
        return self.template.kind

    def add(self, sel_sat=0, sel_tot=0, dis_sat=0, dis_tot=0) -> "LikelihoodModel":
        return replace(
            self,
            sel_sat=self.sel_sat + sel_sat,
            sel_tot=self.sel_tot + sel_tot,
            dis_sat=self.dis_sat + dis_sat,
            dis_tot=self.dis_tot + dis_tot,
        )

    def to_dict(self) -> dict:
        t = self.template
        s = self.smoothing
        return {
            "kind": t.kind.value,
            "placeholders": list(t.placeholders),
            "scope": t.scope,
            "category": t.category,
            "sel_sat": self.sel_sat,
            "sel_tot": self.sel_tot,
            "dis_sat": self.dis_sat,
            "dis_tot": self.dis_tot,
            "smoothing": str(s) if s.denominator != 1 else s.numerator,
            "score": self.score,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "LikelihoodModel":
        return cls(
            template(d["kind"]),
            int(d["sel_sat"]),
            int(d["sel_tot"]),
            int(d["dis_sat"]),
            int(d["dis_tot"]),
            Fraction(str(d.get("smoothing", 1))),
        )


@dataclass(frozen=True)
class TemplateLibrary:
    """Mined templates ordered by score (descending), then kind name."""

    models: tuple = ()
    tau: Optional[float] = None

    def __post_init__(self):
        ordered = sorted(self.models, key=lambda m: (-m.exact_score, m.kind.value))
        object.__setattr__(self, "models", tuple(ordered))

    def __iter__(self) -> Iterator[tuple]:
        return ((m.template, m) for m in self.models)

    def __len__(self) -> int:
        return len(self.models)

    def __contains__(self, kind) -> bool:
        return Kind(kind) in self.kinds()

    def __getitem__(self, kind) -> LikelihoodModel:
        kind = Kind(kind)
        for m in self.models:
            if m.kind is kind:
                return m
        raise KeyError(kind)

    def kinds(self) -> set:
        return {m.kind for m in self.models}

    def scores(self) -> dict:
        return {m.kind: m.score for m in self.models}

    def replace_models(self, models: Sequence[LikelihoodModel]) -> "TemplateLibrary":
        by_kind = {m.kind: m for m in self.models}
        by_kind.update({m.kind: m for m in models})
        return TemplateLibrary(tuple(by_kind.values()), self.tau)

    def to_dict(self, config: Optional[Mapping] = None) -> dict:
        doc: dict = {}
        if config is not None:
            doc["config"] = dict(config)
        doc["tau"] = self.tau
        doc["templates"] = [m.to_dict() for m in self.models]
        return doc

    def dumps(self, config: Optional[Mapping] = None) -> str:
        return json.dumps(self.to_dict(config), indent=2) + "\n"

    @classmethod
    def from_dict(cls, doc: Mapping) -> "TemplateLibrary":
        try:
            return cls(tuple(LikelihoodModel.from_dict(d) for d in doc["templates"]), doc.get("tau"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed template library: {exc!r}") from exc


def load_library(path: Union[str, FsPath]) -> TemplateLibrary:
    try:
        return TemplateLibrary.from_dict(json.loads(FsPath(path).read_text()))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc


# -- per-record context ------------------------------------------------------


def implied_endpoints(rec: PracticeRecord) -> Optional[tuple]:
    """The (first, last) pair shared by every selected path, if there is one."""
    pairs = {(p[0], p[-1]) for p in rec.selected}
    return next(iter(pairs)) if len(pairs) == 1 else None


def _simple(p) -> bool:
    return len(set(p)) == len(p)


def reference_weight(t: Topology, rec: PracticeRecord) -> Optional[Fraction]:
    """Least weight among the record's connected loop-free paths between its endpoints."""
    pair = implied_endpoints(rec)
    if pair is None:
        return None
    weights = [
        t.path_weight(p)
        for p in (*rec.selected, *rec.discarded)
        if (p[0], p[-1]) == pair and _simple(p) and t.is_connected_path(p)
    ]
    return min(weights) if weights else None


# -- detectors -----------------------------------------------------------------


@dataclass(frozen=True)
class Evidence:
    record: int
    binding: tuple = ()
    support: int = 1  # discards in the record that contrast with the selection


@dataclass(frozen=True)
class Candidate:
    template: ConstraintTemplate
    evidence: tuple = ()

    @property
    def count(self) -> int:
        return len({e.record for e in self.evidence})

    @property
    def records(self) -> tuple:
        return tuple(sorted({e.record for e in self.evidence}))


@dataclass(frozen=True)
class PhenomenonReport:
    candidates: Mapping = field(default_factory=dict)  # Kind -> Candidate

    def __getitem__(self, kind) -> Candidate:
        return self.candidates[Kind(kind)]

    def __contains__(self, kind) -> bool:
        return Kind(kind) in self.candidates

    def merged(self, *others: "PhenomenonReport") -> "PhenomenonReport":
        out = dict(self.candidates)
        for other in others:
            out.update(other.candidates)
        return PhenomenonReport({k: out[k] for k in sorted(out, key=lambda k: k.value)})


def _require(ds: DemonstrationSet) -> None:
    if not len(ds):
        raise ValueError("demonstration set is empty")


def detect_point_phenomena(ds: DemonstrationSet) -> PhenomenonReport:
    """Nodes every selected path visits while some discard skips them.

    Endpoints are left to the Endpoints template. Evidence is per record: the
    node is an environment entity, not a global fact.
    """
    _require(ds)
    evidence = []
    for i, rec in enumerate(ds.records):
        common = set.intersection(*(set(p) for p in rec.selected))
        pair = implied_endpoints(rec)
        if pair is not None:
            common -= set(pair)
        for node in sorted(common):
            missing = sum(1 for p in rec.discarded if node not in p)
            if missing:
                evidence.append(Evidence(i, (("node", node),), missing))
    if not evidence:
        return PhenomenonReport({})
    return PhenomenonReport({Kind.FIXED_NODE: Candidate(TEMPLATES[Kind.FIXED_NODE], tuple(evidence))})


def detect_adjacent_phenomena(ds: DemonstrationSet) -> PhenomenonReport:
    _require(ds)
    evidence = []
    for i, rec in enumerate(ds.records):
        t = ds.topology_of(rec)
        if all(t.is_connected_path(p) for p in rec.selected):
            broken = sum(1 for p in rec.discarded if not t.is_connected_path(p))
            if broken:
                evidence.append(Evidence(i, (), broken))
    return PhenomenonReport({Kind.CONNECTIVITY: Candidate(TEMPLATES[Kind.CONNECTIVITY], tuple(evidence))})


def detect_global_phenomena(ds: DemonstrationSet) -> PhenomenonReport:
    _require(ds)
    loop_ev, short_ev, end_ev = [], [], []
    for i, rec in enumerate(ds.records):
        t = ds.topology_of(rec)
        if all(_simple(p) for p in rec.selected):
            loopy = sum(1 for p in rec.discarded if not _simple(p))
            if loopy:
                loop_ev.append(Evidence(i, (), loopy))
        pair = implied_endpoints(rec)
        if pair is None:
            continue
        off = sum(1 for p in rec.discarded if (p[0], p[-1]) != pair)
        if off:
            end_ev.append(Evidence(i, (("start", pair[0]), ("dest", pair[1])), off))
        ref = reference_weight(t, rec)
        if ref is None:
            continue
        if all(_simple(p) and t.path_weight(p) == ref for p in rec.selected):
            heavier = sum(
                1
                for p in rec.discarded
                if (p[0], p[-1]) == pair and _simple(p) and t.is_connected_path(p) and t.path_weight(p) > ref
            )
            if heavier:
                short_ev.append(Evidence(i, (), heavier))
    return PhenomenonReport(
        {
            Kind.LOOP_FREE: Candidate(TEMPLATES[Kind.LOOP_FREE], tuple(loop_ev)),
            Kind.SHORTEST: Candidate(TEMPLATES[Kind.SHORTEST], tuple(short_ev)),
            Kind.ENDPOINTS: Candidate(TEMPLATES[Kind.ENDPOINTS], tuple(end_ev)),
        }
    )


# -- likelihood ------------------------------------------------------------------


def _fixed_node_bindings(ds: DemonstrationSet) -> dict:
    """Record index -> the best-supported fixed node (ties: smallest name)."""
    best: dict = {}
    report = detect_point_phenomena(ds)
    if Kind.FIXED_NODE not in report:
        return best
    for e in report[Kind.FIXED_NODE].evidence:
        node = e.binding[0][1]
        cur = best.get(e.record)
        if cur is None or (-e.support, node) < (-cur[1], cur[0]):
            best[e.record] = (node, e.support)
    return {i: node for i, (node, _) in best.items()}


def record_predicate(tpl: ConstraintTemplate, ds: DemonstrationSet, index: int, fixed: Optional[dict] = None):
    """The template instantiated on one record, as ``path -> bool``; None if unbindable."""
    rec = ds.records[index]
    t = ds.topology_of(rec)
    kind = tpl.kind
    if kind in (Kind.CONNECTIVITY, Kind.LOOP_FREE):
        inst = ConstraintInstance(kind)
        return lambda p: holds(inst, t, p)
    pair = implied_endpoints(rec)
    if kind is Kind.ENDPOINTS:
        if pair is None:
            return None
        inst = ConstraintInstance(kind, (("start", pair[0]), ("dest", pair[1])))
        return lambda p: holds(inst, t, p)
    if kind is Kind.SHORTEST:
        ref = reference_weight(t, rec)
        if ref is None:
            return None
        inst = ConstraintInstance(kind)
        return lambda p: (p[0], p[-1]) == pair and holds(inst, t, p, ref)
    if kind is Kind.FIXED_NODE:
        if fixed is None:
            fixed = _fixed_node_bindings(ds)
        node = fixed.get(index)
        if node is None:
            return None
        return lambda p: node in p
    raise ValueError(f"unknown template {kind!r}")


def estimate_likelihood(
    tpl: ConstraintTemplate, ds: DemonstrationSet, smoothing: Union[Fraction, int, str] = DEFAULT_SMOOTHING
) -> LikelihoodModel:
    """Satisfaction counts over selected vs discarded paths, ignoring any
    chain structure. Records the template cannot be bound on are skipped."""
    fixed = _fixed_node_bindings(ds) if tpl.kind is Kind.FIXED_NODE else None
    sel_sat = sel_tot = dis_sat = dis_tot = 0
    applicable = 0
    for i, rec in enumerate(ds.records):
        pred = record_predicate(tpl, ds, i, fixed)
        if pred is None:
            continue
        applicable += 1
        sel_tot += len(rec.selected)
        sel_sat += sum(1 for p in rec.selected if pred(p))
        dis_tot += len(rec.discarded)
        dis_sat += sum(1 for p in rec.discarded if pred(p))
    if not applicable:
        raise NoApplicableRecords(f"{tpl.kind.value} cannot be bound on any record")
    return LikelihoodModel(tpl, sel_sat, sel_tot, dis_sat, dis_tot, Fraction(smoothing))


def candidates(ds: DemonstrationSet) -> PhenomenonReport:
    return detect_point_phenomena(ds).merged(detect_adjacent_phenomena(ds), detect_global_phenomena(ds))


def score_all(ds: DemonstrationSet, smoothing=DEFAULT_SMOOTHING) -> list:
    """Likelihood models for every detected candidate, before thresholding."""
    out = []
    for kind in candidates(ds).candidates:
        try:
            out.append(estimate_likelihood(TEMPLATES[kind], ds, smoothing))
        except NoApplicableRecords:
            continue
    return out


def mine(ds: DemonstrationSet, tau: float = DEFAULT_TAU, smoothing=DEFAULT_SMOOTHING) -> TemplateLibrary:
    _require(ds)
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    kept = [m for m in score_all(ds, smoothing) if m.exact_score >= Fraction(str(tau))]
    return TemplateLibrary(tuple(kept), tau)
