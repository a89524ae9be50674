"""Command-line entry point (``pathway-events``).

Exit codes: 0 success, 1 configuration error, 2 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline
from .pipeline import ConfigError, ExperimentConfig
from .policies import POLICY_NAMES

log = logging.getLogger("pathway_events")

STAGES = ("generate", "evaluate", "label", "discover", "report", "converge")


def _csv_list(text: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in _csv_list(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=Path("run"), help="output directory (default: run)")
    common.add_argument("--dataset", type=Path, default=None,
                        help="dataset JSON (default: the shipped mini-be dataset)")
    common.add_argument("--scenarios", type=Path, default=None,
                        help="scenario matrix CSV (default: OUT/scenarios.csv)")
    common.add_argument("--outcomes", type=Path, default=None,
                        help="outcomes JSON-lines file (default: OUT/outcomes.jsonl)")
    common.add_argument("-n", "--n-scenarios", type=int, default=64)
    common.add_argument("--seed-skip", type=int, default=1)
    common.add_argument("--modes", type=_csv_list, default=pipeline.MODES,
                        help="comma-separated subset of perfect,myopic")
    common.add_argument("--policies", type=_csv_list, default=("baseline",),
                        help=f"comma-separated subset of {','.join(POLICY_NAMES)}")
    common.add_argument("--lookahead", type=int, default=1, help="myopic lookahead in phases")
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--method", choices=("highs", "simplex"), default="highs")
    common.add_argument("--workers", type=int, default=None,
                        help=f"worker processes (default: ${pipeline.WORKERS_ENV} or 1)")
    common.add_argument("--coverage-basis", choices=("all", "feasible"), default="all")
    common.add_argument("--gradient-window", type=float, default=1.0)
    common.add_argument("--max-leaves", type=int, default=8)
    common.add_argument("--max-unique-features", type=int, default=None)
    common.add_argument("--sweep-leaves", type=int, default=12)
    common.add_argument("--purity", type=float, default=0.9)
    common.add_argument("--cv-folds", type=int, default=5)
    common.add_argument("--heatmap", type=_csv_list, default=("p03", "cum_demand"),
                        help="two feature columns for the failure heatmap")
    common.add_argument("--checkpoints", type=_int_list, default=(),
                        help="comma-separated prefix sizes for convergence tables")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="pathway-events", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "generate": "write the discretized Sobol scenario matrix",
        "evaluate": "solve every (scenario, mode, policy) and write outcomes",
        "label": "label outcomes success/failure",
        "discover": "fit classification trees on the labels",
        "report": "cost curves, cutoffs, heatmaps, correlations and summary",
        "converge": "convergence of success share and AUC over prefixes",
    }
    for name in STAGES:
        sub.add_parser(name, parents=[common], help=helps[name])
    return p


def config_from_args(args) -> ExperimentConfig:
    workers = args.workers if args.workers is not None else pipeline.workers_from_env(1)
    if len(args.heatmap) != 2:
        raise ConfigError("--heatmap needs exactly two feature names")
    cfg = ExperimentConfig(
        out_dir=args.out, dataset=args.dataset, n_scenarios=args.n_scenarios,
        seed_skip=args.seed_skip, modes=tuple(args.modes), policies=tuple(args.policies),
        lookahead=args.lookahead, tol=args.tol, method=args.method, workers=workers,
        basis=args.coverage_basis, gradient_window=args.gradient_window,
        max_leaves=args.max_leaves, max_unique_features=args.max_unique_features,
        sweep_leaves=args.sweep_leaves, purity=args.purity, cv_folds=args.cv_folds,
        heatmap=tuple(args.heatmap), checkpoints=tuple(args.checkpoints),
    )
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "generate":
            out = pipeline.run_generate(cfg)
        elif args.command == "evaluate":
            out = pipeline.run_evaluate(cfg, args.scenarios)
        else:
            stage = getattr(pipeline, f"run_{args.command}")
            out = stage(cfg, args.scenarios, args.outcomes)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # malformed input files surface as ValueError from the readers
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
