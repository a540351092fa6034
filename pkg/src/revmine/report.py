"""End-to-end pipeline run and plot-data emission."""

from __future__ import annotations

import json
import os
import shutil
import tempfile
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

from . import __version__
from .embedding import DEFAULT_DIM, VectorFormatError, load_store
from .features import FeatureRecord, count_edits, extract_all, features_csv_text
from .ingest import Corpus, parse_corpus
from .procmine import build_event_log, discover_dfg, export_dot
from .sessionizer import (
    DEFAULT_MAX_RECIPES,
    DEFAULT_THRESHOLD,
    OverrideError,
    Session,
    read_overrides,
    sessionize,
)
from .stats import GROUPS, OutlierPolicy, filter_outliers, per_user, stats_report, summarize_by_group


class ConfigError(Exception):
    """Invalid or unresolvable run configuration; nothing has been written."""


class StageError(Exception):
    """A pipeline stage failed fatally."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class RunConfig:
    logs: str
    embeddings: str
    out_dir: str
    profiles: str | None = None
    overrides: str | None = None
    dim: int = DEFAULT_DIM
    threshold: float = DEFAULT_THRESHOLD
    time_unit: str = "ms"
    outlier_max_time: float = 10_000.0
    outlier_min_eff: float = 0.05
    max_recipes: int = DEFAULT_MAX_RECIPES

    def validate(self) -> None:
        for name in ("logs", "embeddings", "profiles", "overrides"):
            path = getattr(self, name)
            if path is not None and not Path(path).is_file():
                raise ConfigError(f"--{name} path not found: {path}")
        if self.dim <= 0:
            raise ConfigError("--dim must be positive")
        if not 0 < self.threshold < 1:
            raise ConfigError("--threshold must lie in (0, 1)")
        if self.time_unit not in ("ms", "s"):
            raise ConfigError("--time-unit must be ms or s")
        try:
            self.policy
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def policy(self) -> OutlierPolicy:
        return OutlierPolicy(self.outlier_max_time, self.outlier_min_eff)


def provenance(config: Any = None) -> dict[str, Any]:
    meta: dict[str, Any] = {"tool": "revmine", "version": __version__}
    if config is not None:
        meta["config"] = asdict(config) if hasattr(config, "__dataclass_fields__") else config
    return meta


def dump_json(data: Any) -> str:
    return json.dumps(data, ensure_ascii=False, indent=2, allow_nan=False) + "\n"


def emit_plot_data(
    features: Sequence[FeatureRecord],
    sessions: Mapping[str, Sequence[Session]],
    policy: OutlierPolicy | None = None,
) -> dict[str, dict[str, Any]]:
    """Data series for the bubble, summary and gender plots, keyed by file stem.

    Summary means come from :func:`summarize_by_group`, so they are the very
    numbers written to ``stats.json``.
    """
    groups = {f.user_id: f.group for f in features}

    bubble: dict[str, list[dict[str, Any]]] = {}
    for user in sorted(sessions):
        for s in sessions[user]:
            steps = [[i, count_edits(r.keystrokes).total] for i, r in enumerate(s.revisions, start=1)]
            bubble.setdefault(str(s.recipe_ordinal), []).append(
                {"user_id": user, "group": groups.get(user), "num_revisions": len(s.revisions), "steps": steps}
            )
    for series in bubble.values():
        series.sort(key=lambda b: (-b["num_revisions"], b["user_id"]))

    recipes = sorted({f.recipe_ordinal for f in features})
    summary: dict[str, dict[str, dict[str, float | None]]] = {g: {} for g in GROUPS}
    for k in recipes:
        rows = summarize_by_group(features, k, policy)
        summary["G1"][str(k)] = {r.feature: r.g1_mean for r in rows}
        summary["G2"][str(k)] = {r.feature: r.g2_mean for r in rows}

    kept = filter_outliers(features, policy)[0] if policy is not None else list(features)
    gender: dict[str, list[dict[str, Any]]] = {g: [] for g in GROUPS}
    for agg in per_user(kept):
        if agg.group in gender:
            gender[agg.group].append(
                {
                    "user_id": agg.user_id,
                    "times_revised": agg.times_revised,
                    "time_revising_s": agg.time_revising_s,
                    "efficiency": agg.efficiency_ins_per_s,
                    "di_ratio": agg.di_ratio,
                    "gender": agg.gender,
                    "group": agg.group,
                }
            )
    return {
        "bubble": {"recipes": bubble},
        "summary": {"groups": summary},
        "gender": {"groups": gender},
    }


def dfg_dot(sessions: Mapping[str, Sequence[Session]], corpus: Corpus, group: str, comment: str | None = None) -> str:
    groups = {u: p.group.value for u, p in corpus.profiles.items()}
    event_log = build_event_log(sessions, group, groups)
    if not event_log.traces:
        return f"// no traces for {group}\n" + (f"// {comment}\n" if comment else "") + f'digraph "{group}" {{\n}}\n'
    return export_dot(discover_dfg(event_log), name=group, comment=comment)


def diagnostics_text(corpus: Corpus, sessions: Mapping[str, Sequence[Session]], meta: dict[str, Any]) -> str:
    lines = [f"# revmine {meta['version']}", "# config " + json.dumps(meta.get("config"), sort_keys=True)]
    lines.append(f"rows_read {corpus.rows_read}")
    lines.append(f"rows_skipped {corpus.rows_read - corpus.entry_count}")
    lines.extend(str(d) for d in corpus.diagnostics)
    for user in corpus.unassigned:
        lines.append(f"unassigned user {user}: no profile")
    for user in sorted(sessions):
        for s in sessions[user]:
            for flag in s.flags:
                lines.append(f"session {user}#{s.recipe_ordinal}: {flag}")
    return "\n".join(lines) + "\n"


def build_report(config: RunConfig) -> dict[str, str]:
    """Run every stage in memory; returns relative path -> file content."""
    config.validate()
    meta = provenance(config)
    try:
        corpus = parse_corpus(config.logs, config.profiles, time_unit=config.time_unit)
    except (OSError, ValueError) as exc:
        raise StageError("ingest", str(exc)) from exc
    try:
        store = load_store(config.embeddings, config.dim)
    except (OSError, VectorFormatError) as exc:
        raise StageError("embedding", str(exc)) from exc
    try:
        overrides = read_overrides(config.overrides) if config.overrides else []
        sessions = sessionize(corpus, store, config.threshold, overrides, config.max_recipes)
    except (OSError, OverrideError) as exc:
        raise StageError("sessionize", str(exc)) from exc

    features = extract_all(corpus, sessions)
    policy = config.policy
    stats = {"meta": meta, **stats_report(features, policy)}
    plots = emit_plot_data(features, sessions, policy)
    comment = "revmine " + __version__ + " config " + json.dumps(meta["config"], sort_keys=True)

    files: dict[str, str] = {}
    files["features.csv"] = features_csv_text(features)
    files["stats.json"] = dump_json(stats)
    files["g1.dot"] = dfg_dot(sessions, corpus, "G1", comment)
    files["g2.dot"] = dfg_dot(sessions, corpus, "G2", comment)
    for name, payload in plots.items():
        files[f"plots/{name}.json"] = dump_json({"meta": meta, **payload})
    files["diagnostics.txt"] = diagnostics_text(corpus, sessions, meta)
    return files


def write_files(files: Mapping[str, str], out_dir: str | Path) -> list[Path]:
    """Write all files via a staging directory so a failure leaves no partial bundle."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".revmine-", dir=out))
    written = []
    try:
        for rel, content in files.items():
            p = staging / rel
            p.parent.mkdir(parents=True, exist_ok=True)
            with open(p, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(content)
        for rel in files:
            dest = out / rel
            dest.parent.mkdir(parents=True, exist_ok=True)
            os.replace(staging / rel, dest)
            written.append(dest)
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return written


def run_report(config: RunConfig) -> list[Path]:
    return write_files(build_report(config), config.out_dir)
