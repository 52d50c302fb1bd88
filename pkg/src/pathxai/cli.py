"""Command-line entry point: ``pathxai gen | mine | plan | eval``.

Exit codes: 0 success, 2 invalid input, 3 internal invariant breach.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Optional

from .demos import PolicySpec, generate_demonstrations, load_demonstrations_file
from .errors import EmptyTarget, InvariantBreach, PathXAIError
from .executor import compute_metrics, explain, export_flow_rules, flow_rules_document, metrics_csv, replay_flow_rules
from .graph import load_topology, oracle_target_space
from .intent import parse_intent, parse_intent_batch
from .miner import load_library, mine
from .pipeline import plan, run_structure
from .structure import ArrangementPrior, load_structure

log = logging.getLogger("pathxai")

BUILTIN_TOPOLOGIES = {
    "t1": "t1_training.json",
    "t1b": "t1b_training.json",
    "t2": "t2_transfer.json",
}


@dataclass
class RunConfig:
    max_hops: Optional[int] = None
    tau: float = 0.6
    smoothing: float = 1.0
    feasibility_first_weight: float = 4.0
    scope_order_weight: float = 2.0
    discard_size: int = 10
    ceiling: int = 10**6
    seed: int = 0
    out_dir: str = "."

    def validate(self) -> "RunConfig":
        if self.max_hops is not None and self.max_hops < 1:
            raise ValueError("max_hops must be >= 1")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if self.smoothing <= 0:
            raise ValueError("smoothing must be positive")
        if self.discard_size < 0 or self.ceiling < 1:
            raise ValueError("discard_size must be >= 0 and ceiling >= 1")
        ArrangementPrior(self.feasibility_first_weight, self.scope_order_weight)
        return self

    @property
    def prior(self) -> ArrangementPrior:
        return ArrangementPrior(self.feasibility_first_weight, self.scope_order_weight)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Flags beat the config file, which beats the defaults."""
    values = {}
    if getattr(args, "config", None):
        doc = json.loads(Path(args.config).read_text())
        known = {f.name for f in fields(RunConfig)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values.update(doc)
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    return RunConfig(**values).validate()


def topology_path(name: str) -> Path:
    if name.lower() in BUILTIN_TOPOLOGIES and not Path(name).exists():
        return Path(str(resources.files("pathxai") / "data" / BUILTIN_TOPOLOGIES[name.lower()]))
    return Path(name)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)


def _out(cfg: RunConfig, given: Optional[str], default: str) -> Path:
    return Path(given) if given else Path(cfg.out_dir) / default


def cmd_gen(args, cfg: RunConfig) -> int:
    t = load_topology(topology_path(args.topology))
    via = tuple(args.via or ())
    if args.policy == "via" and not via:
        raise ValueError("--policy via needs at least one --via node")
    if args.policy == "shortest" and via:
        raise ValueError("--via only applies to --policy via")
    policy = PolicySpec(via=via, max_hops=cfg.max_hops, discard_size=cfg.discard_size)
    ds = generate_demonstrations(t, policy, args.n, cfg.seed)
    _write(_out(cfg, args.out, "corpus.json"), ds.dumps(asdict(cfg)))
    return 0


def cmd_mine(args, cfg: RunConfig) -> int:
    ds = load_demonstrations_file(args.corpus)
    lib = mine(ds, cfg.tau, cfg.smoothing)
    if not len(lib):
        log.warning("no template reached tau=%s; the library is empty", cfg.tau)
    _write(_out(cfg, args.out, "library.json"), lib.dumps(asdict(cfg)))
    for tpl, model in lib:
        print(f"{tpl.name}\t{model.score:.4f}")
    return 0


def _intents(args) -> list:
    if args.intent_file:
        return parse_intent_batch(Path(args.intent_file).read_text())
    if args.intent:
        return [parse_intent(args.intent)]
    raise ValueError("give --intent or --intent-file")


def cmd_plan(args, cfg: RunConfig) -> int:
    t = load_topology(topology_path(args.topology))
    saved = load_structure(args.structure) if args.structure else None
    lib = load_library(args.library) if args.library else None
    if saved is None and lib is None:
        raise ValueError("plan needs --library (or --structure for a saved chain)")
    intents = _intents(args)
    conf = asdict(cfg)
    for n, intent in enumerate(intents):
        suffix = "" if len(intents) == 1 else f"_{n}"
        if saved is not None:
            trace = run_structure(saved, t, intent, cfg.max_hops, cfg.ceiling)
            structure = trace.structure
        else:
            structure, trace = plan(t, lib, intent, cfg.prior, cfg.max_hops, cfg.ceiling)
        text = explain(trace, t, fmt=args.format)
        sys.stdout.write(text)
        _write(_out(cfg, None, f"explanation{suffix}.{'json' if args.format == 'machine' else 'txt'}"), text)
        _write(_out(cfg, None, f"structure{suffix}.json"), structure.dumps(conf))
        chosen = next(iter(trace.final), None)
        rules = []
        if chosen is not None:
            rules = export_flow_rules(chosen, t, intent)
            if replay_flow_rules(rules, intent.start, intent.dest) != chosen:
                raise InvariantBreach("flow rules do not reproduce the selected path")
        else:
            log.warning("no path satisfies the structure for %r", intent.source)
        doc = flow_rules_document(rules, chosen or (), intent, conf)
        _write(_out(cfg, None, f"flow_rules{suffix}.json"), json.dumps(doc, indent=2) + "\n")
    return 0


def cmd_eval(args, cfg: RunConfig) -> int:
    t = load_topology(topology_path(args.topology))
    structure = load_structure(args.structure)
    intent = parse_intent(args.intent)
    trace = run_structure(structure, t, intent, cfg.max_hops, cfg.ceiling)
    target = oracle_target_space(t, intent, cfg.max_hops, cfg.ceiling)
    if not len(target):
        raise EmptyTarget(f"no path satisfies {intent.source!r} on {t.label!r}")
    text = metrics_csv(compute_metrics(trace, target), asdict(cfg))
    sys.stdout.write(text)
    _write(_out(cfg, args.out, "metrics.csv"), text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields")
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--max-hops", dest="max_hops", type=int)
    common.add_argument("--ceiling", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    prior = argparse.ArgumentParser(add_help=False)
    prior.add_argument("--feasibility-first-weight", dest="feasibility_first_weight", type=float)
    prior.add_argument("--scope-order-weight", dest="scope_order_weight", type=float)

    p = argparse.ArgumentParser(prog="pathxai", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a demonstration corpus")
    g.add_argument("--topology", required=True, help="topology file or built-in name (t1, t1b, t2)")
    g.add_argument("--policy", choices=("shortest", "via"), default="shortest")
    g.add_argument("--via", action="append", help="node every selected path must visit (repeatable)")
    g.add_argument("--n", type=int, default=20)
    g.add_argument("--discard-size", dest="discard_size", type=int)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    m = sub.add_parser("mine", parents=[common], help="mine a template library from a corpus")
    m.add_argument("--corpus", required=True)
    m.add_argument("--tau", type=float)
    m.add_argument("--smoothing", type=float)
    m.add_argument("--out")
    m.set_defaults(func=cmd_mine)

    pl = sub.add_parser("plan", parents=[common, prior], help="plan and explain a path for an intent")
    pl.add_argument("--topology", required=True)
    pl.add_argument("--library")
    pl.add_argument("--structure", help="execute this saved chain instead of learning one")
    pl.add_argument("--intent")
    pl.add_argument("--intent-file", dest="intent_file", help="one intent per line, '#' comments")
    pl.add_argument("--format", choices=("text", "machine"), default="text")
    pl.set_defaults(func=cmd_plan)

    e = sub.add_parser("eval", parents=[common], help="P/R of a saved structure against the oracle")
    e.add_argument("--topology", required=True)
    e.add_argument("--structure", required=True)
    e.add_argument("--intent", required=True)
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        cfg = resolve_config(args)
        return args.func(args, cfg)
    except (PathXAIError, ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (InvariantBreach, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
