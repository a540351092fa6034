"""``revmine`` command line interface."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from . import __version__
from .embedding import DEFAULT_DIM, VectorFormatError, load_store
from .features import extract_all, read_features_csv, write_features_csv
from .ingest import load_corpus, parse_corpus, save_corpus, write_log_jsonl, write_profiles_csv
from .report import ConfigError, RunConfig, StageError, dfg_dot, dump_json, provenance, run_report
from .sessionizer import DEFAULT_MAX_RECIPES, DEFAULT_THRESHOLD, OverrideError, read_manifest, read_overrides, sessionize, write_manifest
from .stats import OutlierPolicy, stats_report
from .synth import PlanError, SimPlan, generate_corpus, topic_vectors

log = logging.getLogger("revmine")

EXIT_OK = 0
EXIT_STAGE = 1
EXIT_CONFIG = 2


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--out-dir", default=".", help="output directory (report)")
    g.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD, help="session split threshold on cosine similarity")
    g.add_argument("--embeddings", help="word-vector file (word c1 ... cd per line)")
    g.add_argument("--dim", type=int, default=DEFAULT_DIM, help="word-vector dimension")
    g.add_argument("--seed", type=int, default=None, help="seed for simulate (overrides the plan)")
    g.add_argument("--overrides", help="CSV of user_id,op,index boundary corrections")
    g.add_argument("--outlier-max-time", type=float, default=10_000.0, help="drop rows revising longer than this (s)")
    g.add_argument("--outlier-min-eff", type=float, default=0.05, help="drop rows below this efficiency (insertions/s)")
    g.add_argument("--time-unit", choices=("ms", "s"), default="ms", help="unit of keystroke times in the log")
    g.add_argument("--max-recipes", type=int, default=DEFAULT_MAX_RECIPES, help="warn when a user has more sessions")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="revmine", description=__doc__)
    parser.add_argument("--version", action="version", version=f"revmine {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="parse logs and profiles into a corpus cache")
    p.add_argument("--logs", required=True)
    p.add_argument("--profiles")
    p.add_argument("--out", required=True, help="corpus cache path (e.g. corpus.bin)")

    p = sub.add_parser("sessionize", parents=[common], help="split user logs into recipe sessions")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="session manifest (JSON lines)")

    p = sub.add_parser("features", parents=[common], help="compute per-session feature table")
    p.add_argument("--corpus", required=True)
    p.add_argument("--sessions", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("stats", parents=[common], help="group summaries, gender tests, trends")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("dfg", parents=[common], help="directly-follows graph of one group as DOT")
    p.add_argument("--corpus", required=True)
    p.add_argument("--sessions", required=True)
    p.add_argument("--group", required=True, choices=("G1", "G2"))
    p.add_argument("--out", required=True)

    p = sub.add_parser("simulate", parents=[common], help="generate a synthetic corpus with ground truth")
    p.add_argument("--plan", help="JSON simulation plan (defaults used when omitted)")
    p.add_argument("--out", required=True, help="log output (JSON lines)")
    p.add_argument("--truth", required=True)
    p.add_argument("--profiles-out", help="profile table (default: profiles.csv next to --out)")
    p.add_argument("--vectors-out", help="topic vector table (default: vectors.txt next to --out)")

    p = sub.add_parser("report", parents=[common], help="run the whole pipeline")
    p.add_argument("--logs", required=True)
    p.add_argument("--profiles")
    return parser


def _require(path: str | None, flag: str) -> str:
    if not path:
        raise ConfigError(f"{flag} is required")
    if not Path(path).is_file():
        raise ConfigError(f"{flag} path not found: {path}")
    return path


def _policy(args: argparse.Namespace) -> OutlierPolicy:
    try:
        return OutlierPolicy(args.outlier_max_time, args.outlier_min_eff)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _config_echo(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "verbose"}


def cmd_ingest(args: argparse.Namespace) -> int:
    _require(args.logs, "--logs")
    if args.profiles:
        _require(args.profiles, "--profiles")
    corpus = parse_corpus(args.logs, args.profiles, time_unit=args.time_unit)
    save_corpus(corpus, args.out)
    for d in corpus.diagnostics:
        log.warning("%s", d)
    print(f"{len(corpus.users)} users, {corpus.entry_count} entries, {corpus.rows_read - corpus.entry_count} rows skipped")
    return EXIT_OK


def cmd_sessionize(args: argparse.Namespace) -> int:
    _require(args.corpus, "--corpus")
    _require(args.embeddings, "--embeddings")
    overrides = read_overrides(_require(args.overrides, "--overrides")) if args.overrides else []
    corpus = load_corpus(args.corpus)
    store = load_store(args.embeddings, args.dim)
    sessions = sessionize(corpus, store, args.threshold, overrides, args.max_recipes)
    write_manifest(sessions, args.out)
    print(f"{sum(len(s) for s in sessions.values())} sessions for {len(sessions)} users")
    return EXIT_OK


def cmd_features(args: argparse.Namespace) -> int:
    corpus = load_corpus(_require(args.corpus, "--corpus"))
    sessions = read_manifest(_require(args.sessions, "--sessions"), corpus)
    records = extract_all(corpus, sessions)
    write_features_csv(records, args.out)
    print(f"{len(records)} feature rows")
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    features = read_features_csv(_require(args.features, "--features"))
    policy = _policy(args)
    data = {"meta": provenance(_config_echo(args)), **stats_report(features, policy)}
    Path(args.out).write_text(dump_json(data), encoding="utf-8")
    return EXIT_OK


def cmd_dfg(args: argparse.Namespace) -> int:
    corpus = load_corpus(_require(args.corpus, "--corpus"))
    sessions = read_manifest(_require(args.sessions, "--sessions"), corpus)
    comment = f"revmine {__version__} config " + json.dumps(_config_echo(args), sort_keys=True)
    Path(args.out).write_text(dfg_dot(sessions, corpus, args.group, comment), encoding="utf-8")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    plan = SimPlan.load(_require(args.plan, "--plan")) if args.plan else SimPlan()
    if args.seed is not None:
        plan.seed = args.seed
    out = Path(args.out)
    corpus, truth = generate_corpus(plan)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_log_jsonl((e for es in corpus.entries.values() for e in es), out)
    write_profiles_csv(corpus.profiles.values(), args.profiles_out or out.with_name("profiles.csv"))
    topic_vectors(plan).save(args.vectors_out or out.with_name("vectors.txt"))
    truth_doc = {"meta": provenance({"plan": plan.to_dict()}), **truth.to_dict()}
    Path(args.truth).write_text(dump_json(truth_doc), encoding="utf-8")
    print(f"{len(corpus.users)} users, {corpus.entry_count} entries")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    if not args.embeddings:
        raise ConfigError("--embeddings is required")
    config = RunConfig(
        logs=args.logs,
        embeddings=args.embeddings,
        out_dir=args.out_dir,
        profiles=args.profiles,
        overrides=args.overrides,
        dim=args.dim,
        threshold=args.threshold,
        time_unit=args.time_unit,
        outlier_max_time=args.outlier_max_time,
        outlier_min_eff=args.outlier_min_eff,
        max_recipes=args.max_recipes,
    )
    for path in run_report(config):
        print(path)
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "sessionize": cmd_sessionize,
    "features": cmd_features,
    "stats": cmd_stats,
    "dfg": cmd_dfg,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, PlanError, OverrideError) as exc:
        print(f"revmine: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"revmine: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (OSError, ValueError, VectorFormatError) as exc:
        print(f"revmine: [{args.command}] {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
