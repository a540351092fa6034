"""Splitting a user's chronological submissions into per-recipe sessions.

A new session starts at the first entry whose text embedding has cosine
similarity below ``threshold`` to the first entry (the anchor) of the current
session. Scanning then resumes with that entry as the anchor.
"""

from __future__ import annotations

import csv
import json
import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .embedding import VectorStore, cosine_similarity, embed
from .ingest import Corpus, SubmissionEntry

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.995
DEFAULT_MAX_RECIPES = 3


class OverrideError(ValueError):
    """An override names an unknown user or an index outside the user's entries."""


@dataclass(frozen=True)
class Boundaries:
    """Entry indices that open a new recipe (index 0 is implicit and never listed).

    ``flagged`` holds entries whose similarity to the anchor was undefined
    (empty or fully out-of-vocabulary text); they are kept inside the current
    session and should be reviewed by hand.
    """

    indices: tuple[int, ...] = ()
    flagged: tuple[int, ...] = ()


@dataclass(frozen=True)
class Override:
    user_id: str
    op: str  # "add" | "remove"
    index: int


@dataclass(frozen=True)
class Session:
    user_id: str
    recipe_ordinal: int
    draft: SubmissionEntry
    revisions: tuple[SubmissionEntry, ...] = ()
    start_index: int = 0
    flags: tuple[str, ...] = field(default=(), compare=False)

    @property
    def entries(self) -> tuple[SubmissionEntry, ...]:
        return (self.draft, *self.revisions)

    @property
    def entry_indices(self) -> list[int]:
        return list(range(self.start_index, self.start_index + 1 + len(self.revisions)))


def find_boundaries(
    entries: Sequence[SubmissionEntry],
    store: VectorStore,
    threshold: float = DEFAULT_THRESHOLD,
) -> Boundaries:
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    vectors = [embed(e.text, store) for e in entries]
    return boundaries_from_vectors(vectors, threshold)


def boundaries_from_vectors(vectors: Sequence[Any], threshold: float = DEFAULT_THRESHOLD) -> Boundaries:
    """Anchor scan over precomputed text vectors (see :func:`find_boundaries`)."""
    found: list[int] = []
    flagged: list[int] = []
    anchor = 0
    n = 1
    # a zero-norm anchor (e.g. an empty first submission) cannot be compared;
    # move it forward to the next comparable entry without opening a session
    while anchor < len(vectors) and _is_zero(vectors[anchor]):
        flagged.append(anchor)
        anchor += 1
        n = anchor + 1
    while n < len(vectors):
        sim = cosine_similarity(vectors[anchor], vectors[n])
        if sim is None:
            flagged.append(n)
        elif sim < threshold:
            found.append(n)
            anchor = n
        n += 1
    return Boundaries(tuple(found), tuple(sorted(set(flagged))))


def _is_zero(vec: Any) -> bool:
    return not np.any(getattr(vec, "components", vec))


def apply_overrides(
    boundaries: Mapping[str, Sequence[int]],
    overrides: Iterable[Override],
    entry_counts: Mapping[str, int],
) -> dict[str, tuple[int, ...]]:
    """Apply hand corrections in order. Raises :class:`OverrideError` on a bad index."""
    result = {u: set(b) for u, b in boundaries.items()}
    for ov in overrides:
        if ov.user_id not in entry_counts:
            raise OverrideError(f"override for unknown user {ov.user_id!r}")
        count = entry_counts[ov.user_id]
        if not 0 < ov.index < count:
            raise OverrideError(
                f"override index {ov.index} out of range for user {ov.user_id!r} "
                f"({count} entries; valid boundary indices 1..{count - 1})"
            )
        current = result.setdefault(ov.user_id, set())
        if ov.op == "add":
            current.add(ov.index)
        elif ov.op == "remove":
            current.discard(ov.index)
        else:
            raise OverrideError(f"unknown override op {ov.op!r} (expected add or remove)")
    return {u: tuple(sorted(b)) for u, b in result.items()}


def read_overrides(path: str | Path) -> list[Override]:
    """Read ``user_id,op,index`` rows; a header row is optional."""
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            row = [c.strip() for c in row]
            if not row or not any(row) or row[0].startswith("#"):
                continue
            if lineno == 1 and row[:2] == ["user_id", "op"]:
                continue
            if len(row) != 3:
                raise OverrideError(f"{path}:{lineno}: expected user_id,op,index")
            try:
                index = int(row[2])
            except ValueError:
                raise OverrideError(f"{path}:{lineno}: index {row[2]!r} is not an integer") from None
            out.append(Override(row[0], row[1].lower(), index))
    return out


def build_sessions(
    entries: Sequence[SubmissionEntry],
    boundaries: Sequence[int],
    *,
    user_id: str | None = None,
    flagged: Sequence[int] = (),
    max_recipes: int = DEFAULT_MAX_RECIPES,
) -> list[Session]:
    """Cut *entries* at *boundaries*; each span's first entry is the draft."""
    if not entries:
        return []
    if user_id is None:
        user_id = entries[0].user_id
    cuts = [0, *boundaries, len(entries)]
    if any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise ValueError(f"boundaries must be strictly increasing within 1..{len(entries) - 1}")
    flagged_set = set(flagged)
    sessions = []
    for ordinal, (lo, hi) in enumerate(zip(cuts, cuts[1:]), start=1):
        flags = [f"undefined_similarity:{i}" for i in range(lo, hi) if i in flagged_set]
        if ordinal > max_recipes:
            flags.append("recipe_ordinal_above_max")
        sessions.append(
            Session(user_id, ordinal, entries[lo], tuple(entries[lo + 1 : hi]), lo, tuple(flags))
        )
    if len(sessions) > max_recipes:
        log.warning("user %s: %d sessions found (expected at most %d)", user_id, len(sessions), max_recipes)
    return sessions


def sessionize(
    corpus: Corpus,
    store: VectorStore,
    threshold: float = DEFAULT_THRESHOLD,
    overrides: Iterable[Override] = (),
    max_recipes: int = DEFAULT_MAX_RECIPES,
) -> dict[str, list[Session]]:
    """Boundary detection, overrides and session building for every user in *corpus*."""
    found = {u: find_boundaries(es, store, threshold) for u, es in corpus.entries.items()}
    counts = {u: len(es) for u, es in corpus.entries.items()}
    fixed = apply_overrides({u: b.indices for u, b in found.items()}, overrides, counts)
    return {
        u: build_sessions(es, fixed[u], user_id=u, flagged=found[u].flagged, max_recipes=max_recipes)
        for u, es in corpus.entries.items()
    }


# ---------------------------------------------------------------------------
# manifest


def manifest_records(sessions: Mapping[str, Sequence[Session]]) -> list[dict[str, Any]]:
    return [
        {
            "user": s.user_id,
            "recipe_ordinal": s.recipe_ordinal,
            "draft": s.start_index,
            "revisions": s.entry_indices[1:],
            "flags": list(s.flags),
        }
        for u in sessions
        for s in sessions[u]
    ]


def write_manifest(sessions: Mapping[str, Sequence[Session]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in manifest_records(sessions):
            fh.write(json.dumps(rec, ensure_ascii=False, separators=(",", ":")) + "\n")


def read_manifest(path: str | Path, corpus: Corpus) -> dict[str, list[Session]]:
    """Rebuild sessions from a manifest against the corpus it was produced from."""
    per_user: dict[str, list[dict[str, Any]]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                per_user.setdefault(rec["user"], []).append(rec)
    out: dict[str, list[Session]] = {}
    for user in corpus.entries:
        entries = corpus.entries[user]
        recs = sorted(per_user.pop(user, []), key=lambda r: r["recipe_ordinal"])
        sessions = []
        for r in recs:
            idx = [r["draft"], *r["revisions"]]
            if idx != list(range(idx[0], idx[0] + len(idx))) or idx[-1] >= len(entries):
                raise ValueError(f"manifest row for {user!r} does not match the corpus")
            sessions.append(
                Session(
                    user,
                    r["recipe_ordinal"],
                    entries[idx[0]],
                    tuple(entries[i] for i in idx[1:]),
                    idx[0],
                    tuple(r.get("flags", ())),
                )
            )
        out[user] = sessions
    if per_user:
        raise ValueError(f"manifest names users missing from the corpus: {sorted(per_user)}")
    return out
