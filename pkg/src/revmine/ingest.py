"""Parsing of raw submission logs and participant profiles into a :class:`Corpus`.

Two log layouts are accepted and auto-detected from the first non-blank byte:

* line records ``timestamp,user_id,[keystrokes...],"text"``
* JSON lines ``{"ts": ..., "user": ..., "keys": [...], "text": ...}``

Malformed rows never abort parsing; they are skipped and recorded in
``Corpus.diagnostics``.
"""

from __future__ import annotations

import ast
import csv
import enum
import gzip
import io
import json
import logging
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from datetime import date, datetime, time, timezone
from pathlib import Path
from typing import Any

log = logging.getLogger(__name__)

CORPUS_FORMAT = "revmine-corpus"
CORPUS_VERSION = 1

SPECIAL_KEYS = {"Backspace": "backspace", "Delete": "delete"}


class KeyKind(str, enum.Enum):
    CHARACTER = "character"
    BACKSPACE = "backspace"
    DELETE = "delete"
    OTHER = "other"


class Group(str, enum.Enum):
    G1 = "G1"  # with adaptive feedback
    G2 = "G2"  # without adaptive feedback


class Gender(str, enum.Enum):
    FEMALE = "female"
    MALE = "male"
    OTHER = "other"
    UNKNOWN = "unknown"


_GENDER_ALIASES = {
    "female": Gender.FEMALE,
    "f": Gender.FEMALE,
    "woman": Gender.FEMALE,
    "male": Gender.MALE,
    "m": Gender.MALE,
    "man": Gender.MALE,
    "other": Gender.OTHER,
    "diverse": Gender.OTHER,
    "d": Gender.OTHER,
}


class KeystrokeParseError(ValueError):
    """Raised when a serialized keystroke array cannot be decoded."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True, slots=True)
class KeystrokeEvent:
    """One keypress, ``time`` in milliseconds from the start of its entry."""

    time: int
    kind: KeyKind
    value: str = ""

    def __post_init__(self) -> None:
        if self.time < 0:
            raise ValueError(f"negative keystroke time {self.time}")
        if self.kind is KeyKind.CHARACTER and len(self.value) != 1:
            raise ValueError(f"character key must be one code point, got {self.value!r}")

    @classmethod
    def char(cls, value: str, time: int) -> KeystrokeEvent:
        return cls(time, KeyKind.CHARACTER, value)

    @classmethod
    def backspace(cls, time: int) -> KeystrokeEvent:
        return cls(time, KeyKind.BACKSPACE)

    @classmethod
    def delete(cls, time: int) -> KeystrokeEvent:
        return cls(time, KeyKind.DELETE)

    @classmethod
    def other(cls, label: str, time: int) -> KeystrokeEvent:
        return cls(time, KeyKind.OTHER, label)

    @property
    def key_name(self) -> str:
        """The key as written in the log ``key`` field."""
        if self.kind is KeyKind.BACKSPACE:
            return "Backspace"
        if self.kind is KeyKind.DELETE:
            return "Delete"
        return self.value


@dataclass(frozen=True, slots=True)
class SubmissionEntry:
    user_id: str
    submitted_at: datetime
    keystrokes: tuple[KeystrokeEvent, ...]
    text: str

    def __post_init__(self) -> None:
        if not self.user_id:
            raise ValueError("empty user_id")


@dataclass(frozen=True, slots=True)
class UserProfile:
    user_id: str
    group: Group
    gender: Gender = Gender.UNKNOWN
    age: int | None = None


@dataclass(frozen=True, slots=True)
class Diagnostic:
    """A note about one input row. ``skipped`` rows did not make it into the corpus."""

    source: str
    line: int
    message: str
    skipped: bool = True

    def __str__(self) -> str:
        tag = "skipped" if self.skipped else "warning"
        return f"{self.source}:{self.line}: {tag}: {self.message}"


@dataclass(frozen=True)
class Corpus:
    """Per-user, chronologically ordered submissions plus participant profiles."""

    entries: dict[str, tuple[SubmissionEntry, ...]] = field(default_factory=dict)
    profiles: dict[str, UserProfile] = field(default_factory=dict)
    diagnostics: tuple[Diagnostic, ...] = ()
    rows_read: int = 0

    @property
    def users(self) -> list[str]:
        return list(self.entries)

    @property
    def entry_count(self) -> int:
        return sum(len(v) for v in self.entries.values())

    @property
    def unassigned(self) -> list[str]:
        """Users that have log entries but no profile."""
        return [u for u in self.entries if u not in self.profiles]

    @property
    def skipped(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.skipped]


# ---------------------------------------------------------------------------
# keystrokes


def _byte_offset(text: str, char_pos: int) -> int:
    return len(text[:char_pos].encode("utf-8"))


def _key_event(record: Any, time_scale: int) -> KeystrokeEvent:
    if not isinstance(record, dict):
        raise TypeError(f"keystroke record must be an object, got {type(record).__name__}")
    key = record.get("key", record.get("character"))
    if not isinstance(key, str) or key == "":
        raise ValueError(f"keystroke record without key: {record!r}")
    raw_time = record.get("time")
    if isinstance(raw_time, bool) or not isinstance(raw_time, (int, float)):
        raise ValueError(f"keystroke record without numeric time: {record!r}")
    t = raw_time * time_scale
    if t != int(t) and time_scale == 1:
        raise ValueError(f"fractional millisecond time {raw_time!r}")
    t = int(round(t))
    if key in SPECIAL_KEYS:
        return KeystrokeEvent(t, KeyKind(SPECIAL_KEYS[key]))
    if len(key) == 1:
        return KeystrokeEvent.char(key, t)
    return KeystrokeEvent.other(key, t)


def _decode_array(raw: str) -> list[Any]:
    try:
        value = json.loads(raw)
    except json.JSONDecodeError as exc:
        # exported study dumps use python literals ({'time': 1, ...})
        try:
            value = ast.literal_eval(raw.strip())
        except (ValueError, SyntaxError, MemoryError, RecursionError):
            raise KeystrokeParseError(exc.msg, _byte_offset(raw, exc.pos)) from None
    if not isinstance(value, list):
        raise KeystrokeParseError("keystrokes must be an array", 0)
    return value


def parse_keystrokes(
    raw: str | list[Any],
    *,
    time_unit: str = "ms",
    warnings: list[str] | None = None,
) -> list[KeystrokeEvent]:
    """Decode a serialized keystroke array into time-ordered events.

    ``"Backspace"`` and ``"Delete"`` map to their kinds, single code points to
    characters and any other name to :attr:`KeyKind.OTHER`. Out-of-order input
    is stable-sorted and a note is appended to *warnings*.

    Raises :class:`KeystrokeParseError` (with byte offset) for undecodable input.
    """
    scale = _time_scale(time_unit)
    records = _decode_array(raw) if isinstance(raw, str) else raw
    events = []
    for i, rec in enumerate(records):
        try:
            events.append(_key_event(rec, scale))
        except (TypeError, ValueError) as exc:
            raise KeystrokeParseError(f"record {i}: {exc}", 0) from None
    if any(b.time < a.time for a, b in zip(events, events[1:])):
        events.sort(key=lambda e: e.time)
        if warnings is not None:
            warnings.append("keystrokes out of time order; stable-sorted")
    return events


def _time_scale(unit: str) -> int:
    if unit == "ms":
        return 1
    if unit == "s":
        return 1000
    raise ValueError(f"unknown keystroke time unit {unit!r} (expected 'ms' or 's')")


def serialize_keystrokes(events: Iterable[KeystrokeEvent]) -> list[dict[str, Any]]:
    return [{"time": e.time, "key": e.key_name} for e in events]


# ---------------------------------------------------------------------------
# log rows


def _parse_timestamp(value: str) -> datetime:
    ts = datetime.fromisoformat(value.strip())
    if ts.tzinfo is not None:
        ts = ts.astimezone(timezone.utc).replace(tzinfo=None)
    return ts.replace(microsecond=0)


def _scan_array_end(line: str, start: int) -> int:
    """Index one past the ``]`` closing the array opened at ``line[start]``."""
    depth = 0
    quote = None
    i = start
    while i < len(line):
        c = line[i]
        if quote:
            if c == "\\":
                i += 1
            elif c == quote:
                quote = None
        elif c in "\"'":
            quote = c
        elif c in "[{":
            depth += 1
        elif c in "]}":
            depth -= 1
            if depth == 0:
                return i + 1
        i += 1
    raise KeystrokeParseError("unterminated keystroke array", _byte_offset(line, start))


def _parse_text_field(rest: str) -> str:
    rest = rest.strip()
    if not rest:
        return ""
    if rest.startswith('"'):
        try:
            value = json.loads(rest)
            if isinstance(value, str):
                return value
        except json.JSONDecodeError:
            pass
        fields = next(csv.reader([rest]))
        if len(fields) == 1:
            return fields[0]
        raise ValueError("trailing data after text field")
    return rest


def _split_line_record(line: str) -> tuple[datetime, str, str, str]:
    head, sep, _ = line.partition("[")
    if not sep:
        raise ValueError("no keystroke array")
    parts = [p.strip() for p in head.split(",")]
    if parts[-1] != "":
        raise ValueError("expected ',' before keystroke array")
    parts = parts[:-1]
    if len(parts) == 2:
        ts_text, user = parts
        submitted = _parse_timestamp(ts_text)
    elif len(parts) == 3:
        # "2023-01-01, 12:00:00, user1" layout
        d = date.fromisoformat(parts[0])
        t = time.fromisoformat(parts[1])
        submitted = datetime.combine(d, t).replace(microsecond=0)
        user = parts[2]
    else:
        raise ValueError(f"expected 'timestamp,user_id,' before keystrokes, got {len(parts)} fields")
    start = len(head)
    end = _scan_array_end(line, start)
    keys = line[start:end]
    rest = line[end:].lstrip()
    if rest and not rest.startswith(","):
        raise ValueError("expected ',' after keystroke array")
    text = _parse_text_field(rest[1:] if rest else "")
    return submitted, user, keys, text


def _split_json_record(line: str) -> tuple[datetime, str, Any, str]:
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValueError("JSON record must be an object")
    missing = [k for k in ("ts", "user", "keys") if k not in obj]
    if missing:
        raise ValueError(f"missing field(s) {', '.join(missing)}")
    text = obj.get("text", "")
    if text is None:
        text = ""
    if not isinstance(text, str):
        raise ValueError("text must be a string")
    return _parse_timestamp(str(obj["ts"])), str(obj["user"]).strip(), obj["keys"], text


def _open_lines(source: str | Path | Iterable[str]) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8", newline="") as fh:
            yield from fh
    else:
        yield from source


def _read_log(
    source: str | Path | Iterable[str],
    time_unit: str,
    name: str,
) -> tuple[list[tuple[int, SubmissionEntry]], list[Diagnostic], int]:
    rows: list[tuple[int, SubmissionEntry]] = []
    diags: list[Diagnostic] = []
    count = 0
    for lineno, line in enumerate(_open_lines(source), start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        count += 1
        try:
            if line.lstrip().startswith("{"):
                submitted, user, keys, text = _split_json_record(line)
            else:
                submitted, user, keys, text = _split_line_record(line)
            if not user:
                raise ValueError("empty user_id")
            notes: list[str] = []
            events = parse_keystrokes(keys, time_unit=time_unit, warnings=notes)
        except (ValueError, TypeError, SyntaxError) as exc:
            diags.append(Diagnostic(name, lineno, str(exc)))
            continue
        for note in notes:
            diags.append(Diagnostic(name, lineno, note, skipped=False))
        rows.append((lineno, SubmissionEntry(user, submitted, tuple(events), text)))
    return rows, diags, count


def _parse_gender(value: str) -> Gender:
    return _GENDER_ALIASES.get(value.strip().lower(), Gender.UNKNOWN)


def parse_profiles(
    source: str | Path | Iterable[str], name: str = "profiles"
) -> tuple[dict[str, UserProfile], list[Diagnostic]]:
    """Read the ``user_id,group,gender,age`` table."""
    profiles: dict[str, UserProfile] = {}
    diags: list[Diagnostic] = []
    reader = csv.DictReader(_open_lines(source))
    required = {"user_id", "group"}
    if reader.fieldnames is None:
        return profiles, diags
    fieldnames = {f.strip() for f in reader.fieldnames}
    if not required <= fieldnames:
        raise ValueError(f"{name}: header must contain user_id,group (got {reader.fieldnames})")
    for row in reader:
        lineno = reader.line_num
        row = {(k or "").strip(): (v or "").strip() for k, v in row.items() if k is not None}
        user = row.get("user_id", "")
        try:
            if not user:
                raise ValueError("empty user_id")
            try:
                group = Group(row.get("group", "").upper())
            except ValueError:
                raise ValueError(f"group must be G1 or G2, got {row.get('group')!r}") from None
            age_text = row.get("age", "")
            age = None
            if age_text:
                age = int(age_text)
                if age <= 0:
                    raise ValueError(f"age must be positive, got {age}")
            if user in profiles:
                raise ValueError(f"duplicate profile for {user!r}")
        except ValueError as exc:
            diags.append(Diagnostic(name, lineno, str(exc)))
            continue
        profiles[user] = UserProfile(user, group, _parse_gender(row.get("gender", "")), age)
    return profiles, diags


def build_corpus(
    entries: Iterable[SubmissionEntry],
    profiles: dict[str, UserProfile] | None = None,
    diagnostics: Iterable[Diagnostic] = (),
    rows_read: int | None = None,
) -> Corpus:
    """Group *entries* by user (users sorted by id) and order each user's entries by time.

    Ties on ``submitted_at`` keep input order.
    """
    entries = list(entries)
    per_user: dict[str, list[SubmissionEntry]] = {}
    for e in entries:
        per_user.setdefault(e.user_id, []).append(e)
    grouped = {
        u: tuple(sorted(per_user[u], key=lambda e: e.submitted_at)) for u in sorted(per_user)
    }
    profiles = dict(sorted((profiles or {}).items()))
    diags = list(diagnostics)
    for u in grouped:
        if u not in profiles:
            log.debug("user %s has no profile", u)
    return Corpus(grouped, profiles, tuple(diags), len(entries) if rows_read is None else rows_read)


def parse_corpus(
    log_source: str | Path | Iterable[str],
    profile_source: str | Path | Iterable[str] | None = None,
    *,
    time_unit: str = "ms",
) -> Corpus:
    """Parse a submission log and (optionally) a profile table into a :class:`Corpus`.

    Unreadable paths raise :class:`OSError`. Bad rows are skipped and listed in
    ``Corpus.diagnostics``; ``rows_read`` counts every non-blank log row.
    """
    log_name = str(log_source) if isinstance(log_source, (str, Path)) else "log"
    rows, diags, count = _read_log(log_source, time_unit, log_name)
    profiles: dict[str, UserProfile] = {}
    if profile_source is not None:
        prof_name = str(profile_source) if isinstance(profile_source, (str, Path)) else "profiles"
        profiles, prof_diags = parse_profiles(profile_source, prof_name)
        diags.extend(prof_diags)
    if diags:
        log.info("%d log row(s) skipped", sum(d.skipped and d.source == log_name for d in diags))
    return build_corpus((e for _, e in rows), profiles, diags, count)


# ---------------------------------------------------------------------------
# serialization


def entry_to_json(entry: SubmissionEntry) -> dict[str, Any]:
    return {
        "ts": entry.submitted_at.isoformat(),
        "user": entry.user_id,
        "keys": serialize_keystrokes(entry.keystrokes),
        "text": entry.text,
    }


def write_log_jsonl(entries: Iterable[SubmissionEntry], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in entries:
            fh.write(json.dumps(entry_to_json(e), ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")


def write_profiles_csv(profiles: Iterable[UserProfile], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "group", "gender", "age"])
        for p in profiles:
            w.writerow([p.user_id, p.group.value, p.gender.value, "" if p.age is None else p.age])


def corpus_to_dict(corpus: Corpus) -> dict[str, Any]:
    return {
        "format": CORPUS_FORMAT,
        "version": CORPUS_VERSION,
        "rows_read": corpus.rows_read,
        "entries": {u: [entry_to_json(e) for e in es] for u, es in corpus.entries.items()},
        "profiles": [
            {"user_id": p.user_id, "group": p.group.value, "gender": p.gender.value, "age": p.age}
            for p in corpus.profiles.values()
        ],
        "diagnostics": [
            {"source": d.source, "line": d.line, "message": d.message, "skipped": d.skipped}
            for d in corpus.diagnostics
        ],
    }


def corpus_from_dict(data: dict[str, Any]) -> Corpus:
    if data.get("format") != CORPUS_FORMAT:
        raise ValueError("not a revmine corpus file")
    if data.get("version") != CORPUS_VERSION:
        raise ValueError(f"unsupported corpus version {data.get('version')!r}")
    entries = {
        u: tuple(
            SubmissionEntry(
                e["user"],
                datetime.fromisoformat(e["ts"]),
                tuple(parse_keystrokes(e["keys"])),
                e["text"],
            )
            for e in es
        )
        for u, es in data["entries"].items()
    }
    profiles = {
        p["user_id"]: UserProfile(p["user_id"], Group(p["group"]), Gender(p["gender"]), p["age"])
        for p in data["profiles"]
    }
    diags = tuple(Diagnostic(**d) for d in data["diagnostics"])
    return Corpus(entries, profiles, diags, data["rows_read"])


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write the versioned binary cache (gzip'd JSON, fixed mtime for reproducible bytes)."""
    payload = json.dumps(corpus_to_dict(corpus), ensure_ascii=False, separators=(",", ":"))
    with open(path, "wb") as raw:
        with gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as gz:
            gz.write(payload.encode("utf-8"))


def load_corpus(path: str | Path) -> Corpus:
    with gzip.open(path, "rb") as gz:
        return corpus_from_dict(json.load(io.TextIOWrapper(gz, encoding="utf-8")))
