"""End-to-end helpers shared by the CLI and the test-suite."""
from __future__ import annotations

from dataclasses import replace
from typing import Optional

from .constraints import ConstraintInstance, Kind
from .graph import DEFAULT_CEILING, Topology
from .intent import Intent, inactive_mappings, instantiate
from .structure import ArrangementPrior, CausalKnowledgeStructure, learn_structure
from .executor import ExecutionTrace, execute


def plan(
    t: Topology,
    library,
    intent: Intent,
    prior: ArrangementPrior = ArrangementPrior(),
    max_hops: Optional[int] = None,
    ceiling: int = DEFAULT_CEILING,
) -> tuple:
    """Instantiate, pick the MAP chain, and execute it. Returns ``(structure, trace)``."""
    instances = instantiate(intent, library)
    structure = learn_structure(instances, prior)
    trace = execute(structure, t, intent, max_hops, ceiling, notes=inactive_mappings(intent, library))
    return structure, trace


def run_structure(
    structure: CausalKnowledgeStructure,
    t: Topology,
    intent: Intent,
    max_hops: Optional[int] = None,
    ceiling: int = DEFAULT_CEILING,
) -> ExecutionTrace:
    """Execute a saved chain on a (possibly new) topology.

    The saved chain's node bindings belong to the topology it was learned on;
    intent-dependent bindings (endpoints, via and avoid nodes) are rebound from
    the new intent, everything else is kept as is.
    """
    via = list(intent.via)
    avoid = list(intent.avoid)
    chain = []
    fixed_score = next((i.score for i in structure.chain if i.kind is Kind.FIXED_NODE), None)
    for inst in structure.chain:
        if inst.kind is Kind.ENDPOINTS:
            inst = replace(inst, bindings=(("start", intent.start), ("dest", intent.dest)))
        elif inst.kind is Kind.FIXED_NODE:
            pool = avoid if inst.negated else via
            if not pool:
                continue
            inst = replace(inst, bindings=(("node", pool.pop(0)),))
        chain.append(inst)
    if fixed_score is not None:
        # entities the saved chain had no slot for go right before the first
        # optimisation step, keeping feasibility first
        extra = [ConstraintInstance(Kind.FIXED_NODE, (("node", v),), fixed_score) for v in via]
        extra += [ConstraintInstance(Kind.FIXED_NODE, (("node", a),), fixed_score, True) for a in avoid]
        cut = next((i for i, c in enumerate(chain) if c.category == "optimization"), len(chain))
        chain[cut:cut] = extra
    notes = []
    if fixed_score is None:
        notes += [f"VIA {v} is not enforced: the saved structure has no fixed-node constraint" for v in via]
        notes += [f"AVOID {a} is not enforced: the saved structure has no fixed-node constraint" for a in avoid]
    return execute(replace(structure, chain=tuple(chain)), t, intent, max_hops, ceiling, notes=notes)
