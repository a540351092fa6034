"""Per-(user, recipe) revision features computed from keystroke streams.

Edit counts, revising time, the deletion/insertion ratio and the pause mean
describe the revision entries only. Efficiency (insertions per second of
active typing) also includes the first draft.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

from .ingest import Corpus, KeyKind, KeystrokeEvent
from .sessionizer import Session

MS_PER_S = 1000.0

CSV_COLUMNS = [
    "user_id",
    "group",
    "gender",
    "recipe",
    "num_revisions",
    "num_edits",
    "time_revising_s",
    "di_ratio",
    "efficiency",
    "pause_mean_s",
]


@dataclass(frozen=True)
class EditCounts:
    insertions: int = 0
    deletions: int = 0

    @property
    def total(self) -> int:
        return self.insertions + self.deletions

    def __add__(self, other: EditCounts) -> EditCounts:
        return EditCounts(self.insertions + other.insertions, self.deletions + other.deletions)


@dataclass(frozen=True)
class FeatureRecord:
    """Feature values for one recipe session. ``None`` marks an undefined value."""

    user_id: str
    recipe_ordinal: int
    num_revisions: int
    num_edits: int
    time_revising_s: float
    di_ratio: float | None
    efficiency_ins_per_s: float | None
    pause_mean_s: float | None
    group: str | None = None
    gender: str | None = None


def count_edits(keystrokes: Iterable[KeystrokeEvent]) -> EditCounts:
    """Characters (whitespace included) are insertions; Backspace/Delete are deletions."""
    ins = dels = 0
    for e in keystrokes:
        if e.kind is KeyKind.CHARACTER:
            ins += 1
        elif e.kind is KeyKind.BACKSPACE or e.kind is KeyKind.DELETE:
            dels += 1
    return EditCounts(ins, dels)


def active_time_s(keystrokes: Sequence[KeystrokeEvent]) -> float:
    """Last minus first keystroke time, in seconds; 0 for fewer than two events."""
    if len(keystrokes) < 2:
        return 0.0
    return (keystrokes[-1].time - keystrokes[0].time) / MS_PER_S


def _gaps_ms(keystrokes: Sequence[KeystrokeEvent]) -> list[int]:
    return [b.time - a.time for a, b in zip(keystrokes, keystrokes[1:])]


def pause_mean(keystrokes: Sequence[KeystrokeEvent]) -> float | None:
    """Mean inter-key interval in seconds, ``None`` for fewer than two events."""
    gaps = _gaps_ms(keystrokes)
    if not gaps:
        return None
    return sum(gaps) / len(gaps) / MS_PER_S


def session_features(session: Session, group: str | None = None, gender: str | None = None) -> FeatureRecord:
    revisions = session.revisions
    rev_counts = EditCounts()
    rev_time_ms = 0
    gaps: list[int] = []
    for entry in revisions:
        rev_counts += count_edits(entry.keystrokes)
        ks = entry.keystrokes
        if len(ks) >= 2:
            rev_time_ms += ks[-1].time - ks[0].time
        # gaps never span two submissions
        gaps.extend(_gaps_ms(ks))

    all_ins = 0
    all_time_ms = 0
    for entry in session.entries:
        all_ins += count_edits(entry.keystrokes).insertions
        ks = entry.keystrokes
        if len(ks) >= 2:
            all_time_ms += ks[-1].time - ks[0].time

    di_ratio = rev_counts.deletions / rev_counts.insertions if rev_counts.insertions else None
    efficiency = all_ins / (all_time_ms / MS_PER_S) if all_time_ms else None
    pause = sum(gaps) / len(gaps) / MS_PER_S if gaps else None
    return FeatureRecord(
        user_id=session.user_id,
        recipe_ordinal=session.recipe_ordinal,
        num_revisions=len(revisions),
        num_edits=rev_counts.total,
        time_revising_s=rev_time_ms / MS_PER_S,
        di_ratio=di_ratio,
        efficiency_ins_per_s=efficiency,
        pause_mean_s=pause,
        group=group,
        gender=gender,
    )


def extract_all(corpus: Corpus, sessions: Mapping[str, Sequence[Session]]) -> list[FeatureRecord]:
    """One record per (user, recipe), users sorted by id, joined with their profile."""
    records = []
    for user in sorted(sessions):
        prof = corpus.profiles.get(user)
        group = prof.group.value if prof else None
        gender = prof.gender.value if prof else None
        for s in sorted(sessions[user], key=lambda s: s.recipe_ordinal):
            records.append(session_features(s, group, gender))
    return records


# ---------------------------------------------------------------------------
# CSV


def _fmt(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def features_csv_text(records: Iterable[FeatureRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(
            [
                _fmt(v)
                for v in (
                    r.user_id,
                    r.group,
                    r.gender,
                    r.recipe_ordinal,
                    r.num_revisions,
                    r.num_edits,
                    r.time_revising_s,
                    r.di_ratio,
                    r.efficiency_ins_per_s,
                    r.pause_mean_s,
                )
            ]
        )
    return buf.getvalue()


def write_features_csv(records: Iterable[FeatureRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(features_csv_text(records))


def _opt_float(text: str) -> float | None:
    return float(text) if text.strip() else None


def read_features_csv(path: str | Path) -> list[FeatureRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [
            FeatureRecord(
                user_id=row["user_id"],
                recipe_ordinal=int(row["recipe"]),
                num_revisions=int(row["num_revisions"]),
                num_edits=int(row["num_edits"]),
                time_revising_s=float(row["time_revising_s"]),
                di_ratio=_opt_float(row["di_ratio"]),
                efficiency_ins_per_s=_opt_float(row["efficiency"]),
                pause_mean_s=_opt_float(row["pause_mean_s"]),
                group=row["group"] or None,
                gender=row["gender"] or None,
            )
            for row in reader
        ]
