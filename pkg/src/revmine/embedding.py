"""Word-vector table loading, text sum-embeddings and cosine similarity."""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_DIM = 50


class VectorFormatError(ValueError):
    """A line of the vector file does not have the declared dimension."""

    def __init__(self, path: str, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class VectorStore:
    """Immutable word -> vector table, looked up case-insensitively."""

    def __init__(self, words: Sequence[str], matrix: np.ndarray, dimension: int = DEFAULT_DIM):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        matrix = np.asarray(matrix, dtype=np.float64).reshape(len(words), dimension)
        self.dimension = dimension
        self._index: dict[str, int] = {}
        keep = []
        for i, w in enumerate(words):
            w = w.lower()
            if w not in self._index:
                self._index[w] = len(keep)
                keep.append(i)
        self._matrix = matrix[keep].copy()
        self._matrix.setflags(write=False)

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, word: object) -> bool:
        return isinstance(word, str) and word.lower() in self._index

    def __getitem__(self, word: str) -> np.ndarray:
        return self._matrix[self._index[word.lower()]]

    @property
    def words(self) -> list[str]:
        return list(self._index)

    def rows(self, tokens: Iterable[str]) -> list[int]:
        """Row indices of in-vocabulary *tokens*, in order, out-of-vocabulary ones skipped."""
        idx = self._index
        return [idx[t] for t in (tok.lower() for tok in tokens) if t in idx]

    def take(self, rows: Sequence[int]) -> np.ndarray:
        return self._matrix[list(rows)]

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for word, i in self._index.items():
                fh.write(word + " " + " ".join(repr(float(x)) for x in self._matrix[i]) + "\n")


def load_store(path: str | Path, dimension: int = DEFAULT_DIM) -> VectorStore:
    """Load a plain-text ``word c1 ... cd`` table. Duplicate words keep the first row."""
    words: list[str] = []
    rows: list[list[float]] = []
    name = str(path)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").rstrip("\r").split(" ")
            if len(parts) == 1 and not parts[0].strip():
                continue
            if len(parts) - 1 != dimension:
                raise VectorFormatError(
                    name, lineno, f"expected {dimension} components, found {len(parts) - 1}"
                )
            try:
                vec = [float(x) for x in parts[1:]]
            except ValueError as exc:
                raise VectorFormatError(name, lineno, str(exc)) from None
            if not all(math.isfinite(x) for x in vec):
                raise VectorFormatError(name, lineno, "non-finite component")
            words.append(parts[0])
            rows.append(vec)
    matrix = np.array(rows, dtype=np.float64).reshape(len(rows), dimension)
    return VectorStore(words, matrix, dimension)


def preprocess(text: str) -> list[str]:
    """Lowercase, drop everything but letters, digits and whitespace, split on whitespace."""
    cleaned = "".join(c for c in text.lower() if c.isalnum() or c.isspace())
    return cleaned.split()


@dataclass(frozen=True)
class TextVector:
    components: np.ndarray
    matched_tokens: int = 0
    total_tokens: int = 0

    @property
    def dimension(self) -> int:
        return len(self.components)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.components))

    def __add__(self, other: TextVector) -> TextVector:
        return TextVector(
            self.components + other.components,
            self.matched_tokens + other.matched_tokens,
            self.total_tokens + other.total_tokens,
        )


def embed_text(tokens: Sequence[str], store: VectorStore) -> TextVector:
    """Component-wise sum of the vectors of in-vocabulary tokens."""
    rows = store.rows(tokens)
    if rows:
        comps = store.take(rows).sum(axis=0)
    else:
        comps = np.zeros(store.dimension)
    return TextVector(comps, len(rows), len(tokens))


def embed(text: str, store: VectorStore) -> TextVector:
    return embed_text(preprocess(text), store)


def cosine_similarity(a: TextVector | np.ndarray, b: TextVector | np.ndarray) -> float | None:
    """Cosine of the angle between *a* and *b*; ``None`` if either has zero norm."""
    x = a.components if isinstance(a, TextVector) else np.asarray(a, dtype=np.float64)
    y = b.components if isinstance(b, TextVector) else np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    nx = math.sqrt(float(np.dot(x, x)))
    ny = math.sqrt(float(np.dot(y, y)))
    if nx == 0.0 or ny == 0.0:
        return None
    return float(np.dot(x, y)) / (nx * ny)
