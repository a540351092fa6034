"""Seeded synthetic experiment logs with known ground truth.

Each user writes ``recipes_per_user`` recipes on distinct topics. A recipe is a
draft followed by revisions; texts are bags of words from the topic's pool, and
a matching topic-clustered word-vector table is generated alongside so that
texts on one topic are nearly parallel and texts on different topics are not.

Ground-truth feature values are tallied while the keystrokes are generated and
never go through :mod:`revmine.features`.
"""

from __future__ import annotations

import json
import string
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Any

import numpy as np

from .embedding import VectorStore
from .features import EditCounts, FeatureRecord
from .ingest import Corpus, Gender, Group, KeystrokeEvent, SubmissionEntry, UserProfile, build_corpus
from .procmine import END, REVISE, START, write_recipe

DEFAULT_TOPICS: dict[str, list[str]] = {
    "pasta": [
        "pasta", "spaghetti", "penne", "boil", "salted", "water", "drain", "parmesan",
        "basil", "tomato", "sauce", "garlic", "olive", "oil", "al", "dente",
    ],
    "cake": [
        "chocolate", "cake", "flour", "sugar", "butter", "eggs", "cocoa", "bake",
        "oven", "preheat", "whisk", "batter", "frosting", "vanilla", "sponge", "tin",
    ],
    "salad": [
        "lettuce", "cucumber", "salad", "vinaigrette", "feta", "olives", "onion", "radish",
        "toss", "leaves", "dressing", "lemon", "juice", "chop", "crisp", "herbs",
    ],
    "soup": [
        "soup", "broth", "simmer", "carrots", "celery", "leek", "stock", "pot",
        "ladle", "potatoes", "lentils", "cumin", "bowl", "stir", "hearty", "pepper",
    ],
    "curry": [
        "curry", "coconut", "milk", "turmeric", "ginger", "chickpeas", "rice", "coriander",
        "masala", "spinach", "naan", "chili", "paste", "cardamom", "yogurt", "fragrant",
    ],
    "pancakes": [
        "pancakes", "griddle", "syrup", "maple", "blueberries", "fluffy", "flip", "buttermilk",
        "stack", "pan", "golden", "breakfast", "honey", "cinnamon", "ladleful", "skillet",
    ],
}

_TYPED_CHARS = string.ascii_lowercase + " " * 6 + ".,"


class PlanError(ValueError):
    """The simulation plan is inconsistent."""


@dataclass
class SimPlan:
    seed: int = 42
    users_per_group: int = 25
    recipes_per_user: int = 3
    topics: dict[str, list[str]] = field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_TOPICS.items()})
    words_per_text: tuple[int, int] = (20, 40)
    # revisions per recipe ~ round(Normal(mean, sd)) clipped to [min, max]; G1 mean gets the delta
    revision_mean: float = 2.5
    revision_sd: float = 0.8
    group_revision_delta: float = 0.0
    min_revisions: int = 1
    max_revisions: int = 4
    draft_insertions: tuple[int, int] = (150, 400)
    # per-revision edit sizes (Poisson means), per group
    revision_insertions: dict[str, float] = field(default_factory=lambda: {"G1": 40.0, "G2": 40.0})
    revision_deletions: dict[str, float] = field(default_factory=lambda: {"G1": 8.0, "G2": 8.0})
    other_key_prob: float = 0.02
    # inter-key gap ~ 1 + Gamma(shape, mean/shape) ms; female typists use mean * factor
    gap_mean_ms: float = 250.0
    gap_shape: float = 2.0
    female_gap_factor: float = 1.0
    dimension: int = 50
    vector_noise: float = 0.15
    start: str = "2023-01-01T09:00:00"

    def validate(self) -> None:
        if self.users_per_group < 0 or self.recipes_per_user < 1:
            raise PlanError("need users_per_group >= 0 and recipes_per_user >= 1")
        if len(self.topics) < self.recipes_per_user:
            raise PlanError(f"{self.recipes_per_user} recipes need as many topics, got {len(self.topics)}")
        seen: set[str] = set()
        for name, pool in self.topics.items():
            if not pool:
                raise PlanError(f"topic {name!r} has an empty vocabulary pool")
            overlap = seen & set(pool)
            if overlap:
                raise PlanError(f"topic {name!r} shares words with another pool: {sorted(overlap)}")
            seen |= set(pool)
        lo, hi = self.words_per_text
        if not 1 <= lo <= hi:
            raise PlanError("words_per_text must satisfy 1 <= lo <= hi")
        if not 0 <= self.min_revisions <= self.max_revisions:
            raise PlanError("need 0 <= min_revisions <= max_revisions")
        if not 1 <= self.draft_insertions[0] <= self.draft_insertions[1]:
            raise PlanError("draft_insertions must satisfy 1 <= lo <= hi")
        for g in ("G1", "G2"):
            if self.revision_insertions.get(g, -1) < 0 or self.revision_deletions.get(g, -1) < 0:
                raise PlanError(f"edit-size means for {g} must be finite and >= 0")
        numbers = [self.revision_mean, self.revision_sd, self.group_revision_delta, self.gap_mean_ms,
                   self.gap_shape, self.female_gap_factor, self.vector_noise, self.other_key_prob]
        if not all(np.isfinite(numbers)):
            raise PlanError("plan parameters must be finite")
        if self.revision_sd < 0 or self.gap_mean_ms <= 0 or self.gap_shape <= 0 or self.female_gap_factor <= 0:
            raise PlanError("sd must be >= 0; gap mean, gap shape and gender factor must be > 0")
        if not 0 <= self.other_key_prob < 1:
            raise PlanError("other_key_prob must lie in [0, 1)")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SimPlan:
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise PlanError(f"unknown plan field(s): {sorted(unknown)}")
        data = dict(data)
        for key in ("words_per_text", "draft_insertions"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> SimPlan:
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["words_per_text"] = list(self.words_per_text)
        d["draft_insertions"] = list(self.draft_insertions)
        return d


@dataclass
class GroundTruth:
    boundaries: dict[str, tuple[int, ...]] = field(default_factory=dict)
    topics: dict[str, list[str]] = field(default_factory=dict)
    entry_edits: dict[str, list[EditCounts]] = field(default_factory=dict)
    features: list[FeatureRecord] = field(default_factory=list)
    traces: dict[str, list[str]] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "boundaries": {u: list(b) for u, b in self.boundaries.items()},
            "topics": self.topics,
            "entry_edits": {u: [[e.insertions, e.deletions] for e in es] for u, es in self.entry_edits.items()},
            "features": [asdict(f) for f in self.features],
            "traces": self.traces,
        }


@dataclass
class _Tally:
    insertions: int = 0
    deletions: int = 0
    first_ms: int = 0
    last_ms: int = 0
    gap_sum_ms: int = 0
    gap_count: int = 0

    @property
    def span_ms(self) -> int:
        return self.last_ms - self.first_ms if self.gap_count else 0


def topic_vectors(plan: SimPlan) -> VectorStore:
    """Word vectors clustered by topic: unit topic direction plus small isotropic noise."""
    rng = np.random.default_rng([plan.seed, 0x7EC7])
    words: list[str] = []
    rows = []
    sigma = plan.vector_noise / np.sqrt(plan.dimension)
    for name in plan.topics:
        center = rng.standard_normal(plan.dimension)
        center /= np.linalg.norm(center)
        for w in plan.topics[name]:
            words.append(w)
            rows.append(center + sigma * rng.standard_normal(plan.dimension))
    matrix = np.array(rows).reshape(len(rows), plan.dimension)
    return VectorStore(words, matrix, plan.dimension)


def _keystrokes(
    rng: np.random.Generator, n_ins: int, n_del: int, plan: SimPlan, gap_mean: float
) -> tuple[list[KeystrokeEvent], _Tally]:
    n_other = int(rng.binomial(n_ins + n_del, plan.other_key_prob)) if plan.other_key_prob else 0
    kinds = np.array([0] * n_ins + [1] * n_del + [2] * n_other)
    rng.shuffle(kinds)
    t = int(rng.integers(0, 2000))
    tally = _Tally(first_ms=t, last_ms=t)
    events = []
    scale = gap_mean / plan.gap_shape
    for i, k in enumerate(kinds):
        if i:
            gap = 1 + int(rng.gamma(plan.gap_shape, scale))
            t += gap
            tally.gap_sum_ms += gap
            tally.gap_count += 1
            tally.last_ms = t
        if k == 0:
            events.append(KeystrokeEvent.char(_TYPED_CHARS[int(rng.integers(len(_TYPED_CHARS)))], t))
            tally.insertions += 1
        elif k == 1:
            if rng.random() < 0.85:
                events.append(KeystrokeEvent.backspace(t))
            else:
                events.append(KeystrokeEvent.delete(t))
            tally.deletions += 1
        else:
            events.append(KeystrokeEvent.other(("Shift", "ArrowLeft", "Enter", "Tab")[int(rng.integers(4))], t))
    return events, tally


def _revise_text(rng: np.random.Generator, words: list[str], pool: list[str]) -> list[str]:
    words = list(words)
    for _ in range(int(rng.integers(1, 4))):
        op = int(rng.integers(3))
        pos = int(rng.integers(len(words)))
        if op == 0:
            words[pos] = pool[int(rng.integers(len(pool)))]
        elif op == 1:
            words.insert(pos, pool[int(rng.integers(len(pool)))])
        elif len(words) > 1:
            del words[pos]
    return words


def _text(words: list[str], ordinal: int) -> str:
    return f"Recipe {ordinal}) " + " ".join(words).capitalize() + "."


def generate_corpus(plan: SimPlan | None = None) -> tuple[Corpus, GroundTruth]:
    """Build a corpus and the ground truth it was generated from. Same plan, same output."""
    plan = plan or SimPlan()
    plan.validate()
    start = datetime.fromisoformat(plan.start)
    topic_names = list(plan.topics)
    entries: list[SubmissionEntry] = []
    profiles: dict[str, UserProfile] = {}
    truth = GroundTruth()
    n_users = 2 * plan.users_per_group
    width = max(3, len(str(n_users)))
    for ui in range(n_users):
        rng = np.random.default_rng([plan.seed, ui])
        group = "G1" if ui < plan.users_per_group else "G2"
        user = f"u{ui + 1:0{width}d}"
        gender = Gender.FEMALE if ui % 2 == 0 else Gender.MALE
        profiles[user] = UserProfile(user, Group(group), gender, int(rng.integers(18, 35)))
        gap_mean = plan.gap_mean_ms * (plan.female_gap_factor if gender is Gender.FEMALE else 1.0)
        rev_mean = plan.revision_mean + (plan.group_revision_delta if group == "G1" else 0.0)
        topics = [topic_names[int(i)] for i in rng.permutation(len(topic_names))[: plan.recipes_per_user]]

        clock = start + timedelta(hours=ui)
        idx = 0
        bounds: list[int] = []
        edits: list[EditCounts] = []
        trace = [START]
        for ordinal, topic in enumerate(topics, start=1):
            if ordinal > 1:
                bounds.append(idx)
            pool = plan.topics[topic]
            n_rev = int(np.clip(round(rng.normal(rev_mean, plan.revision_sd)), plan.min_revisions, plan.max_revisions))
            words = [pool[int(i)] for i in rng.integers(0, len(pool), int(rng.integers(plan.words_per_text[0], plan.words_per_text[1] + 1)))]
            lo, hi = plan.draft_insertions
            keys, tally = _keystrokes(rng, int(rng.integers(lo, hi + 1)), int(rng.poisson(0.05 * lo)), plan, gap_mean)
            clock += timedelta(seconds=int(rng.integers(60, 600)))
            entries.append(SubmissionEntry(user, clock, tuple(keys), _text(words, ordinal)))
            edits.append(EditCounts(tally.insertions, tally.deletions))
            trace.append(write_recipe(ordinal))
            idx += 1
            all_ins, all_span = tally.insertions, tally.span_ms
            rev_ins = rev_del = rev_span = gap_sum = gap_n = 0
            for _ in range(n_rev):
                words = _revise_text(rng, words, pool)
                n_ins = 1 + int(rng.poisson(plan.revision_insertions[group]))
                n_del = int(rng.poisson(plan.revision_deletions[group]))
                keys, tally = _keystrokes(rng, n_ins, n_del, plan, gap_mean)
                clock += timedelta(seconds=int(rng.integers(30, 400)))
                entries.append(SubmissionEntry(user, clock, tuple(keys), _text(words, ordinal)))
                edits.append(EditCounts(tally.insertions, tally.deletions))
                trace.append(REVISE)
                idx += 1
                rev_ins += tally.insertions
                rev_del += tally.deletions
                rev_span += tally.span_ms
                gap_sum += tally.gap_sum_ms
                gap_n += tally.gap_count
                all_ins += tally.insertions
                all_span += tally.span_ms
            truth.features.append(
                FeatureRecord(
                    user_id=user,
                    recipe_ordinal=ordinal,
                    num_revisions=n_rev,
                    num_edits=rev_ins + rev_del,
                    time_revising_s=rev_span / 1000.0,
                    di_ratio=rev_del / rev_ins if rev_ins else None,
                    efficiency_ins_per_s=all_ins / (all_span / 1000.0) if all_span else None,
                    pause_mean_s=gap_sum / gap_n / 1000.0 if gap_n else None,
                    group=group,
                    gender=gender.value,
                )
            )
        trace.append(END)
        truth.boundaries[user] = tuple(bounds)
        truth.topics[user] = topics
        truth.entry_edits[user] = edits
        truth.traces[user] = trace
    return build_corpus(entries, profiles), truth
