"""Posterior over linear constraint chains.

Every permutation of the instantiated bag is scored by an arrangement prior
(feasibility before optimisation, local scope before global scope) times the
instances' likelihood scores, with earlier positions weighted more heavily.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path as FsPath
from typing import Mapping, Optional, Sequence, Union

from .constraints import ConstraintInstance
from .errors import ParseError, TooManyInstances, TraceMismatch

MAX_INSTANCES = 8
TIE_RTOL = 1e-12
_LOCAL = ("point", "adjacent")


@dataclass(frozen=True)
class ArrangementPrior:
    feasibility_first_weight: float = 4.0
    scope_order_weight: float = 2.0

    def __post_init__(self):
        if self.feasibility_first_weight <= 0 or self.scope_order_weight <= 0:
            raise ValueError("prior weights must be positive")

    def components(self, chain: Sequence[ConstraintInstance]) -> tuple:
        """(f, g) for a chain.

        f is 1 when no feasibility instance comes after an optimisation one.
        g is the share of adjacent pairs that do not put a global-scope
        instance right before a point/adjacent-scope one (1 for a single
        instance).
        """
        seen_opt = False
        f = 1
        for inst in chain:
            if inst.category == "optimization":
                seen_opt = True
            elif seen_opt:
                f = 0
                break
        pairs = list(zip(chain, chain[1:]))
        if not pairs:
            return f, 1.0
        bad = sum(1 for a, b in pairs if a.scope == "global" and b.scope in _LOCAL)
        return f, 1.0 - bad / len(pairs)

    def log_prior(self, chain: Sequence[ConstraintInstance]) -> float:
        f, g = self.components(chain)
        return self.feasibility_first_weight * f + self.scope_order_weight * g

    def to_dict(self) -> dict:
        return {
            "feasibility_first_weight": self.feasibility_first_weight,
            "scope_order_weight": self.scope_order_weight,
        }


def log_likelihood(chain: Sequence[ConstraintInstance]) -> float:
    """sum_i log(score_i) / (i + 1): position 0 counts fully, later ones less."""
    return sum(math.log(inst.score) / (i + 1) for i, inst in enumerate(chain))


def posterior_over_arrangements(instances: Sequence[ConstraintInstance], prior: ArrangementPrior = ArrangementPrior()) -> dict:
    bag = list(instances)
    if not bag:
        raise ValueError("need at least one constraint instance")
    if len(bag) > MAX_INSTANCES:
        raise TooManyInstances(f"{len(bag)} instances exceed the enumeration bound of {MAX_INSTANCES}")
    if any(inst.score <= 0 for inst in bag):
        raise ValueError("instance scores must be positive")
    logs = {}
    for chain in itertools.permutations(bag):
        logs[chain] = prior.log_prior(chain) + log_likelihood(chain)
    top = max(logs.values())
    mass = {chain: math.exp(v - top) for chain, v in logs.items()}
    z = math.fsum(mass.values())
    return {chain: m / z for chain, m in mass.items()}


@dataclass(frozen=True)
class CausalKnowledgeStructure:
    chain: tuple
    posterior: float = 1.0
    prior: ArrangementPrior = ArrangementPrior()
    provenance: Mapping = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.chain)

    @property
    def kinds(self) -> tuple:
        return tuple(inst.kind.value for inst in self.chain)

    def describe(self) -> str:
        return " -> ".join(inst.label for inst in self.chain)

    def relabel(self, mapping: Mapping[str, str]) -> "CausalKnowledgeStructure":
        return replace(self, chain=tuple(inst.relabel(mapping) for inst in self.chain))

    def to_dict(self, config: Optional[Mapping] = None) -> dict:
        doc: dict = {}
        if config is not None:
            doc["config"] = dict(config)
        doc["chain"] = [inst.to_dict() for inst in self.chain]
        doc["posterior"] = self.posterior
        doc["prior"] = self.prior.to_dict()
        doc["provenance"] = dict(self.provenance)
        return doc

    def dumps(self, config: Optional[Mapping] = None) -> str:
        return json.dumps(self.to_dict(config), indent=2) + "\n"

    @classmethod
    def from_dict(cls, doc: Mapping) -> "CausalKnowledgeStructure":
        try:
            chain = tuple(ConstraintInstance.from_dict(d) for d in doc["chain"])
            prior = ArrangementPrior(**doc.get("prior", {}))
            return cls(chain, float(doc.get("posterior", 1.0)), prior, doc.get("provenance", {}))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed structure document: {exc!r}") from exc


def load_structure(path: Union[str, FsPath]) -> CausalKnowledgeStructure:
    try:
        return CausalKnowledgeStructure.from_dict(json.loads(FsPath(path).read_text()))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _tie_key(chain: tuple) -> tuple:
    return (
        -math.fsum(inst.score for inst in chain),
        tuple(inst.kind.value for inst in chain),
        tuple((inst.nodes, inst.negated) for inst in chain),
    )


def map_structure(posterior: Mapping[tuple, float], prior: ArrangementPrior = ArrangementPrior()) -> CausalKnowledgeStructure:
    """Most probable chain; near-exact ties go to the higher summed score, then
    the lexicographically smaller kind-name chain, then bindings."""
    if not posterior:
        raise ValueError("posterior is empty")
    best_p = max(posterior.values())
    tied = [c for c, p in posterior.items() if math.isclose(p, best_p, rel_tol=TIE_RTOL, abs_tol=0.0)]
    chain = min(tied, key=_tie_key)
    f, g = prior.components(chain)
    provenance = {
        "scores": [inst.score for inst in chain],
        "feasibility_first": f,
        "scope_order": g,
        "log_prior": prior.log_prior(chain),
        "log_likelihood": log_likelihood(chain),
        "arrangements": len(posterior),
    }
    return CausalKnowledgeStructure(tuple(chain), posterior[chain], prior, provenance)


def learn_structure(instances: Sequence[ConstraintInstance], prior: ArrangementPrior = ArrangementPrior()) -> CausalKnowledgeStructure:
    return map_structure(posterior_over_arrangements(instances, prior), prior)


def update_beliefs(
    structure: CausalKnowledgeStructure,
    trace,
    target,
    library,
    prior: Optional[ArrangementPrior] = None,
    decay: float = 0.9,
    growth: float = 1.05,
    cap: float = 10.0,
):
    """Fold one evaluated execution back into the likelihoods and the prior.

    Target paths a step kept count as satisfactions on the selected side;
    target paths a step eliminated count on the discarded side. The
    feasibility-first weight shrinks when the final recall is below 1 and
    grows (up to ``cap``) otherwise. Returns ``(library, prior)``.
    """
    if tuple(trace.structure.chain) != tuple(structure.chain) or len(trace.steps) != len(structure.chain):
        raise TraceMismatch("trace was not produced by this structure")
    prior = prior or structure.prior
    updated = {m.kind: m for m in library.models}
    for step, inst in zip(trace.steps, structure.chain):
        if step.instance != inst:
            raise TraceMismatch(f"step {step.index} ran {step.instance.label}, expected {inst.label}")
        kept = len(step.survivors & target)
        dropped = sum(1 for p, _ in step.eliminated if p in target)
        model = updated.get(inst.kind)
        if model is not None:
            updated[inst.kind] = model.add(sel_sat=kept, sel_tot=kept, dis_sat=dropped, dis_tot=dropped)
    recall = Fraction(len(trace.final & target), len(target)) if len(target) else Fraction(0)
    w = prior.feasibility_first_weight
    w = w * decay if recall < 1 else min(w * growth, cap)
    return library.replace_models(tuple(updated.values())), replace(prior, feasibility_first_weight=w)
