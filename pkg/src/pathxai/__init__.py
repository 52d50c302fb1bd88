"""Learn constraint chains from path-selection demonstrations, run them as
explainable filters on new topologies, and measure them against a brute-force
oracle."""
from .constraints import ConstraintInstance, ConstraintTemplate, Kind, TEMPLATES
from .demos import DemonstrationSet, PolicySpec, PracticeRecord, generate_demonstrations, load_demonstrations
from .executor import (
    ExecutionTrace,
    FilterStep,
    FlowRule,
    StepMetrics,
    compute_metrics,
    execute,
    explain,
    export_flow_rules,
    replay_flow_rules,
)
from .graph import (
    Link,
    PathSet,
    Topology,
    build_topology,
    enumerate_solution_space,
    load_topology,
    oracle_target_space,
    path_predicates,
)
from .intent import Intent, instantiate, parse_intent, render_intent
from .miner import LikelihoodModel, TemplateLibrary, estimate_likelihood, mine
from .pipeline import plan, run_structure
from .structure import (
    ArrangementPrior,
    CausalKnowledgeStructure,
    map_structure,
    posterior_over_arrangements,
    update_beliefs,
)

__version__ = "0.1.0"
