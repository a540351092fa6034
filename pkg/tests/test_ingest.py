from __future__ import annotations

import json
from datetime import datetime

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from revmine.ingest import (
    Corpus,
    Gender,
    Group,
    KeyKind,
    KeystrokeEvent,
    KeystrokeParseError,
    SubmissionEntry,
    UserProfile,
    build_corpus,
    corpus_from_dict,
    corpus_to_dict,
    entry_to_json,
    load_corpus,
    parse_corpus,
    parse_keystrokes,
    parse_profiles,
    save_corpus,
)

PROFILES = ["user_id,group,gender,age", "user1,G1,female,23", "user2,G2,male,"]


def test_python_literal_row():
    corpus = parse_corpus(['2023-01-01T12:00:00,user1,[{"time":1,"key":"a"}],"a"'])
    assert corpus.users == ["user1"]
    (entry,) = corpus.entries["user1"]
    assert entry.submitted_at == datetime(2023, 1, 1, 12, 0, 0)
    assert entry.keystrokes == (KeystrokeEvent.char("a", 1),)
    assert entry.text == "a"
    assert corpus.diagnostics == ()


def test_literal_dump_with_character_field_and_split_date():
    line = "2023-01-01, 12:00:00, user1, [{'time': 1, 'character': 'a'}], \"a) Cook ...\""
    corpus = parse_corpus([line])
    (entry,) = corpus.entries["user1"]
    assert entry.keystrokes == (KeystrokeEvent.char("a", 1),)
    assert entry.text == "a) Cook ..."


def test_empty_source():
    corpus = parse_corpus([])
    assert corpus.users == [] and corpus.entry_count == 0 and corpus.rows_read == 0


def test_entries_sorted_by_time():
    lines = [
        '2023-01-01T13:00:00,user1,[],"second"',
        '2023-01-01T12:00:00,user1,[],"first"',
    ]
    corpus = parse_corpus(lines)
    assert [e.text for e in corpus.entries["user1"]] == ["first", "second"]


def test_jsonl_variant_autodetected():
    rows = [
        json.dumps({"ts": "2023-01-02T08:00:00", "user": "b", "keys": [{"time": 0, "key": "Delete"}], "text": "x"}),
        json.dumps({"ts": "2023-01-01T08:00:00", "user": "a", "keys": [], "text": ""}),
    ]
    corpus = parse_corpus(rows)
    assert corpus.users == ["a", "b"]
    assert corpus.entries["b"][0].keystrokes[0].kind is KeyKind.DELETE


def test_text_with_commas_and_quotes():
    line = '2023-01-01T12:00:00,u,[{"time":0,"key":","}],"Mix, then \\"stir\\" [well]"'
    (entry,) = parse_corpus([line]).entries["u"]
    assert entry.text == 'Mix, then "stir" [well]'
    assert entry.keystrokes[0].value == ","


def test_malformed_rows_are_recorded():
    lines = [
        '2023-01-01T12:00:00,u,[{"time":0,"key":"a"}],"ok"',
        "not a record",
        '2023-01-01T12:00:00,u,[{"time":0}],"record without key"',
        '2023-13-01T12:00:00,u,[],"bad month"',
        '2023-01-01T12:00:00,,[],"no user"',
        '2023-01-01T12:00:00,u,[{"time":-5,"key":"a"}],"negative"',
        "",
    ]
    corpus = parse_corpus(lines)
    assert corpus.entry_count == 1
    assert corpus.rows_read == 6
    assert [d.line for d in corpus.skipped] == [2, 3, 4, 5, 6]
    assert corpus.entry_count + len(corpus.skipped) == corpus.rows_read


def test_unreadable_source_is_fatal(tmp_path):
    with pytest.raises(OSError):
        parse_corpus(tmp_path / "missing.log")


def test_parse_keystrokes_examples():
    assert parse_keystrokes('[{"time":0,"key":"a"},{"time":5,"key":"Backspace"}]') == [
        KeystrokeEvent.char("a", 0),
        KeystrokeEvent.backspace(5),
    ]
    assert parse_keystrokes("[]") == []
    assert parse_keystrokes('[{"time":3,"key":"Shift"}]') == [KeystrokeEvent.other("Shift", 3)]


def test_whitespace_is_a_character():
    (ev,) = parse_keystrokes('[{"time":3,"key":" "}]')
    assert ev.kind is KeyKind.CHARACTER and ev.value == " "


def test_unordered_keystrokes_stable_sorted_with_flag():
    notes: list[str] = []
    events = parse_keystrokes(
        '[{"time":5,"key":"b"},{"time":1,"key":"a"},{"time":5,"key":"c"}]', warnings=notes
    )
    assert [e.value for e in events] == ["a", "b", "c"]
    assert notes


def test_unordered_row_is_kept_with_warning():
    corpus = parse_corpus(['2023-01-01T12:00:00,u,[{"time":5,"key":"b"},{"time":1,"key":"a"}],"x"'])
    assert corpus.entry_count == 1
    (diag,) = corpus.diagnostics
    assert not diag.skipped


def test_parse_error_has_byte_offset():
    with pytest.raises(KeystrokeParseError) as info:
        parse_keystrokes('[{"time":0,"key":"é"}, oops]')
    # "é" is two bytes in UTF-8, so the byte offset is one past the character offset
    assert info.value.offset == len('[{"time":0,"key":"é"}, '.encode())


def test_seconds_time_unit():
    assert parse_keystrokes('[{"time":1.5,"key":"a"}]', time_unit="s") == [KeystrokeEvent.char("a", 1500)]


def test_profiles():
    profiles, diags = parse_profiles(PROFILES + ["user3,G3,female,20", "user4,g1,F,0"])
    assert profiles["user1"] == UserProfile("user1", Group.G1, Gender.FEMALE, 23)
    assert profiles["user2"] == UserProfile("user2", Group.G2, Gender.MALE, None)
    assert [d.line for d in diags] == [4, 5]


def test_unassigned_users():
    lines = ['2023-01-01T12:00:00,user1,[],""', '2023-01-01T12:00:00,ghost,[],""']
    corpus = parse_corpus(lines, PROFILES)
    assert corpus.unassigned == ["ghost"]


def test_binary_cache_round_trip(tmp_path):
    lines = [
        '2023-01-01T12:00:00,user1,[{"time":1,"key":"a"},{"time":9,"key":"Shift"}],"a"',
        '2023-01-01T12:05:00,user1,[{"time":0,"key":"Backspace"}],""',
        "garbage",
    ]
    corpus = parse_corpus(lines, PROFILES)
    path = tmp_path / "corpus.bin"
    save_corpus(corpus, path)
    first = path.read_bytes()
    assert load_corpus(path) == corpus
    save_corpus(load_corpus(path), path)
    assert path.read_bytes() == first


def test_cache_version_checked():
    data = corpus_to_dict(Corpus())
    data["version"] = 99
    with pytest.raises(ValueError, match="version"):
        corpus_from_dict(data)


key_names = st.one_of(
    st.characters(blacklist_categories=("Cs",)),
    st.sampled_from(["Backspace", "Delete", "Shift", "ArrowLeft", "Enter"]),
)
entries = st.builds(
    lambda user, sec, keys, text: SubmissionEntry(
        user,
        datetime(2023, 1, 1).replace(second=sec % 60, minute=sec // 60 % 60),
        tuple(KeystrokeEvent(t, *_kind(k)) for t, k in sorted(keys, key=lambda p: p[0])),
        text,
    ),
    st.sampled_from(["a", "b", "c"]),
    st.integers(0, 3599),
    st.lists(st.tuples(st.integers(0, 10_000), key_names), max_size=8),
    st.text(max_size=30),
)


def _kind(name: str):
    if name == "Backspace":
        return (KeyKind.BACKSPACE, "")
    if name == "Delete":
        return (KeyKind.DELETE, "")
    if len(name) == 1:
        return (KeyKind.CHARACTER, name)
    return (KeyKind.OTHER, name)


@settings(max_examples=150, deadline=None)
@given(st.lists(entries, max_size=10))
def test_serialize_reparse_round_trip(es):
    corpus = build_corpus(es)
    lines = [json.dumps(entry_to_json(e)) for u in corpus.entries for e in corpus.entries[u]]
    again = parse_corpus(lines)
    assert again.entries == corpus.entries
    assert again.rows_read == corpus.entry_count


@settings(max_examples=50, deadline=None)
@given(st.lists(entries, max_size=10))
def test_order_is_deterministic(es):
    lines = [json.dumps(entry_to_json(e)) for e in es]
    assert parse_corpus(lines) == parse_corpus(lines)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.one_of(st.text(max_size=40), st.just('2023-01-01T00:00:00,u,[],"x"')), max_size=12))
def test_valid_plus_skipped_equals_rows(lines):
    lines = [l.replace("\n", " ").replace("\r", " ") for l in lines]
    corpus = parse_corpus(lines)
    assert corpus.entry_count + len(corpus.skipped) == corpus.rows_read


def test_layouts_may_mix_within_one_log():
    rows = [
        '2023-03-01T10:02:11,u1,[{"time": 0, "character": "B"}],"Boil."',
        '{"ts": "2023-03-01T10:03:00", "user": "u1", "keys": [{"time": 0, "character": "x"}], "text": "Boil!"}',
    ]
    corpus = parse_corpus(rows)
    assert [e.text for e in corpus.entries["u1"]] == ["Boil.", "Boil!"]
    assert not corpus.diagnostics
