"""Command-line interface: one subcommand per pipeline stage plus `pipeline`.

Configuration comes from an optional JSON file (--config) overridden by
command-line flags. Exit codes: 0 success, 2 usage error, 3 missing
prerequisite artifact, 4 data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import DataError, DependencyError, UsageError
from .pipeline import OUTPUT_ROOT_ENV, RunConfig, run_pipeline, run_stage

EXIT_USAGE = 2
EXIT_DEPENDENCY = 3
EXIT_DATA = 4

STAGE_COMMANDS = (
    "ingest",
    "stats",
    "sample",
    "split",
    "train",
    "validate",
    "cluster",
    "metrics",
    "project",
    "report",
    "pipeline",
    "synth",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relsub",
        description="Discover substructures in knowledge-graph relations",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in STAGE_COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} stage")
        _add_common_options(p)
        if name in ("ingest", "sample", "pipeline"):
            p.add_argument("--input", help="input triples file")
            p.add_argument("--format", choices=("conceptnet-dump", "generic-tsv"), help="input format")
            p.add_argument("--skip-bad-lines", action="store_true", default=None,
                           help="count and skip malformed lines instead of aborting")
            p.add_argument("--keep-external-url", action="store_true", default=None,
                           help="do not drop /r/ExternalURL triples on ingest")
        if name in ("sample", "pipeline"):
            p.add_argument("--n", type=int, help="sample size")
            p.add_argument("--id-list", help="file of assertion URIs selecting an exact sample")
        if name in ("split", "pipeline"):
            p.add_argument("--ratios", help="train,valid,test ratios, e.g. 0.75,0.125,0.125")
        if name in ("train", "pipeline"):
            p.add_argument("--dim", type=int, help="embedding dimension")
            p.add_argument("--epochs", type=int, help="training epochs")
            p.add_argument("--lr", type=float, help="learning rate")
            p.add_argument("--margin", type=float, help="ranking margin")
            p.add_argument("--negatives", type=int, help="negative samples per positive")
            p.add_argument("--batch-size", type=int, help="minibatch size")
            p.add_argument("--workers", type=int, help="worker threads (1 = deterministic)")
        if name in ("cluster", "metrics", "project", "report", "pipeline"):
            p.add_argument("--relations", help="comma-separated target relation URIs")
        if name in ("cluster", "pipeline"):
            p.add_argument("--k", type=int, help="fixed cluster count")
            p.add_argument("--k-range", help="sweep range lo,hi (used when --k is absent)")
            p.add_argument("--restarts", type=int, help="k-means restarts")
        if name in ("project", "pipeline"):
            p.add_argument("--method", choices=("tsne", "pca"), help="projection method")
            p.add_argument("--perplexity", type=float, help="t-SNE perplexity")
            p.add_argument("--iterations", type=int, help="t-SNE iterations")
        if name in ("report", "pipeline"):
            p.add_argument("--samples", type=int, help="triples sampled per cluster")
        if name == "synth":
            p.add_argument("--sub-relations", type=int, help="planted sub-relation count")
            p.add_argument("--per-sub", type=int, help="triples per sub-relation")
            p.add_argument("--head-pool", type=int, help="head entities per sub-relation")
            p.add_argument("--tail-pool", type=int, help="tail entities per sub-relation")
            p.add_argument("--noise", type=float, help="noise triple rate in [0,1)")
    return parser


def _add_common_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_ROOT_ENV})")
    p.add_argument("--seed", type=int, help="global random seed")


def _merge_flags(raw: dict, args: argparse.Namespace) -> dict:
    """Overlay CLI flags (when given) onto the raw config dict."""
    direct = {
        "input": "input_path",
        "format": "input_format",
        "skip_bad_lines": "skip_bad_lines",
        "n": "sample_size",
        "id_list": "sample_id_list",
        "relations": "target_relations",
        "k": "k",
        "restarts": "restarts",
        "method": "projection_method",
        "perplexity": "perplexity",
        "iterations": "projection_iterations",
        "samples": "report_samples",
        "seed": "seed",
        "out": "output_dir",
    }
    for flag, key in direct.items():
        value = getattr(args, flag, None)
        if value is not None:
            raw[key] = value
    if getattr(args, "keep_external_url", None):
        raw["drop_relations"] = []
    if isinstance(raw.get("target_relations"), str):
        raw["target_relations"] = [r for r in raw["target_relations"].split(",") if r]
    if getattr(args, "ratios", None):
        try:
            raw["split_ratios"] = [float(x) for x in args.ratios.split(",")]
        except ValueError:
            raise UsageError(f"bad --ratios value {args.ratios!r}") from None
    if getattr(args, "k_range", None):
        try:
            lo, hi = (int(x) for x in args.k_range.split(","))
        except ValueError:
            raise UsageError(f"bad --k-range value {args.k_range!r}") from None
        raw["k_range"] = [lo, hi]
    train_flags = {
        "dim": "dim",
        "epochs": "epochs",
        "lr": "learning_rate",
        "margin": "margin",
        "negatives": "negatives",
        "batch_size": "batch_size",
        "workers": "workers",
    }
    for flag, key in train_flags.items():
        value = getattr(args, flag, None)
        if value is not None:
            raw.setdefault("train", {})[key] = value
    synth_flags = {
        "sub_relations": "sub_relations",
        "per_sub": "triples_per_sub",
        "head_pool": "head_pool_size",
        "tail_pool": "tail_pool_size",
        "noise": "noise_rate",
    }
    for flag, key in synth_flags.items():
        value = getattr(args, flag, None)
        if value is not None:
            raw.setdefault("synthetic", {})[key] = value
    return raw


def load_config(args: argparse.Namespace) -> RunConfig:
    raw: dict = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as f:
                raw = json.load(f)
        except FileNotFoundError:
            raise UsageError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as e:
            raise UsageError(f"config file is not valid JSON: {e}") from None
        if not isinstance(raw, dict):
            raise UsageError("config file must contain a JSON object")
    raw = _merge_flags(raw, args)
    if not raw.get("output_dir"):
        env_out = os.environ.get(OUTPUT_ROOT_ENV)
        if env_out:
            raw["output_dir"] = env_out
    return RunConfig.from_dict(raw)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args)
        if args.command == "pipeline":
            summaries = run_pipeline(config)
            for summary in summaries:
                print(f"[{summary['stage']}] done in {summary['duration_seconds']}s")
        else:
            summary = run_stage(args.command, config)
            print(f"[{summary['stage']}] done in {summary['duration_seconds']}s")
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DependencyError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DEPENDENCY
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
