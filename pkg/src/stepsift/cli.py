"""Command-line entry points.

Subcommands:

* ``curate``      -- full pipeline: prune, score, select, write curated set
* ``prune-only``  -- rewrite trajectories with pruned states, no selection
* ``select-only`` -- select over already-pruned (or raw) states, no pruning
* ``study``       -- greedy-vs-exact approximation study on synthetic instances
* ``ingest``      -- merge externally generated reasoning responses

Exit codes: 0 on success, 2 on configuration errors, 3 when the reject rate
exceeds ``--max-reject-rate``.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import pipeline, pruning, selection
from .prompts import ingest_synthesized

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REJECTS = 3


def _add_prune_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--prune", default=pruning.STRATEGY_TARGET,
                        choices=list(pruning.STRATEGIES),
                        help="pruning strategy (default: target)")
    parser.add_argument("--window", type=int, default=60, metavar="N",
                        help="nodes kept on each side of the target (default: 60)")
    parser.add_argument("--offset", type=int, default=0, metavar="N",
                        help="window shift for the offset strategy (default: 0)")
    parser.add_argument("--non-node-window", type=int, default=120, metavar="N",
                        help="half-window for the non-node prefix budget (default: 120)")
    parser.add_argument("--semantic-k", type=int, default=80, metavar="N",
                        help="leaf budget for semantic pruning (default: 80)")


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--similarity", default="overlap", metavar="SPEC",
                        help="overlap | cosine:FILE | remote:URL (default: overlap)")
    parser.add_argument("--seed", type=int, default=0, metavar="N")
    parser.add_argument("--workers", type=int, default=1, metavar="N")
    parser.add_argument("--stats", metavar="F", dest="stats",
                        help="stats JSON path (default: OUTPUT.stats.json)")
    parser.add_argument("--rejects", metavar="F", dest="rejects",
                        help="rejects JSONL path (default: OUTPUT.rejects.jsonl)")
    parser.add_argument("--max-reject-rate", type=float, metavar="X",
                        help="exit 3 when the trajectory reject rate exceeds X")


def _add_select_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--budget", type=int, default=3, metavar="N",
                        help="steps kept per trajectory (default: 3)")
    parser.add_argument("--lambda", type=float, default=1.0, metavar="X",
                        dest="lam", help="diversity weight (default: 1.0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stepsift",
        description="Curate web-agent trajectories: prune states, select an "
                    "importance- and diversity-balanced step subset.")
    sub = parser.add_subparsers(dest="command", required=True)

    curate = sub.add_parser("curate", help="run the full curation pipeline")
    curate.add_argument("--input", required=True, metavar="F")
    curate.add_argument("--output", required=True, metavar="F")
    _add_select_flags(curate)
    _add_prune_flags(curate)
    _add_common_flags(curate)
    curate.add_argument("--post-sample", type=int, metavar="N",
                        help="uniformly down-sample the curated pool to N steps")
    curate.add_argument("--render-prompts", metavar="DIR",
                        help="write a reasoning-synthesis prompt per curated step")
    curate.add_argument("--score-on", choices=["raw", "pruned"], default="pruned",
                        help="score importance/diversity on raw or pruned states")
    curate.add_argument("--method", default=selection.METHOD_GREEDY,
                        choices=list(selection.METHODS),
                        help="selection method (default: greedy)")

    prune_only = sub.add_parser("prune-only",
                                help="prune states, keep every step")
    prune_only.add_argument("--input", required=True, metavar="F")
    prune_only.add_argument("--output", required=True, metavar="F")
    _add_prune_flags(prune_only)
    _add_common_flags(prune_only)

    select_only = sub.add_parser("select-only",
                                 help="select steps without pruning")
    select_only.add_argument("--input", required=True, metavar="F")
    select_only.add_argument("--output", required=True, metavar="F")
    _add_select_flags(select_only)
    _add_common_flags(select_only)
    select_only.add_argument("--post-sample", type=int, metavar="N")
    select_only.add_argument("--method", default=selection.METHOD_GREEDY,
                             choices=list(selection.METHODS))

    study = sub.add_parser("study", help="greedy-vs-exact approximation study")
    study.add_argument("--t-min", type=int, default=8)
    study.add_argument("--t-max", type=int, default=12)
    study.add_argument("--t0", type=int, default=3)
    study.add_argument("--instances", type=int, default=200)
    study.add_argument("--seed", type=int, default=0)
    study.add_argument("--guard", type=int, default=selection.DEFAULT_ENUMERATION_GUARD)
    study.add_argument("--lambda", type=float, default=1.0, dest="lam")
    study.add_argument("--out", metavar="F", help="also write the report JSON here")

    ingest = sub.add_parser("ingest",
                            help="merge synthesized reasoning responses")
    ingest.add_argument("--curated", required=True, metavar="F")
    ingest.add_argument("--responses", required=True, metavar="F")
    ingest.add_argument("--output", required=True, metavar="F")

    return parser


def _pipeline_config(args: argparse.Namespace, *, prune_strategy: str | None = None,
                     method: str | None = None) -> pipeline.PipelineConfig:
    prune_config = pruning.PruneConfig(
        strategy=prune_strategy if prune_strategy is not None else args.prune,
        window=getattr(args, "window", 60),
        offset=getattr(args, "offset", 0),
        non_node_window=getattr(args, "non_node_window", 120),
        semantic_k=getattr(args, "semantic_k", 80),
    )
    select_config = selection.SelectionConfig(
        budget=getattr(args, "budget", 3),
        lam=getattr(args, "lam", 1.0),
        method=method if method is not None else getattr(args, "method", "greedy"),
        seed=args.seed,
    )
    return pipeline.PipelineConfig(
        input=args.input,
        output=args.output,
        prune=prune_config,
        select=select_config,
        similarity=args.similarity,
        score_on=getattr(args, "score_on", pipeline.SCORE_ON_PRUNED),
        post_sample=getattr(args, "post_sample", None),
        seed=args.seed,
        workers=args.workers,
        stats_path=args.stats,
        rejects_path=args.rejects,
        render_prompts_dir=getattr(args, "render_prompts", None),
        max_reject_rate=args.max_reject_rate,
    )


def _finish_run(stats: pipeline.RunStats, config: pipeline.PipelineConfig) -> int:
    print(stats.format_table())
    for stage, seconds in stats.timings.items():
        print(f"timing  {stage}: {seconds:.3f}s", file=sys.stderr)
    if config.max_reject_rate is not None \
            and stats.reject_rate() > config.max_reject_rate:
        print(f"reject rate {stats.reject_rate():.3f} exceeds "
              f"--max-reject-rate {config.max_reject_rate}", file=sys.stderr)
        return EXIT_REJECTS
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "curate":
            config = _pipeline_config(args)
            return _finish_run(pipeline.run_pipeline(config), config)

        if args.command == "prune-only":
            config = _pipeline_config(args)
            return _finish_run(pipeline.prune_only(config), config)

        if args.command == "select-only":
            config = _pipeline_config(args, prune_strategy=pruning.STRATEGY_NONE)
            return _finish_run(pipeline.run_pipeline(config), config)

        if args.command == "study":
            spec = selection.StudySpec(
                instances=args.instances, t_min=args.t_min, t_max=args.t_max,
                t0=args.t0, lam=args.lam, seed=args.seed, guard=args.guard)
            report = selection.approximation_study(spec)
            text = json.dumps(report.as_dict(), indent=2, sort_keys=True)
            print(text)
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(text + "\n")
            return EXIT_OK

        if args.command == "ingest":
            report = ingest_synthesized(args.curated, args.responses, args.output)
            print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
            return EXIT_OK
    except (pipeline.ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
