"""Closed prompt vocabulary shared by the editor, the embedder, and the
synthetic benchmark.

Color words map to reference RGB values; object nouns are bound to the fixed
base color the synthetic scenes paint them with, so text prototypes and scene
content agree exactly.
"""

from __future__ import annotations

import numpy as np

from .errors import PerceptionError

COLOR_WORDS: dict[str, tuple[float, float, float]] = {
    "red": (0.90, 0.10, 0.10),
    "green": (0.10, 0.80, 0.15),
    "blue": (0.12, 0.20, 0.90),
    "golden": (0.95, 0.78, 0.12),
    "purple": (0.60, 0.15, 0.75),
    "cyan": (0.10, 0.80, 0.80),
    "orange": (0.95, 0.50, 0.10),
    "white": (0.95, 0.95, 0.95),
    "gray": (0.50, 0.50, 0.50),
    "brown": (0.55, 0.35, 0.15),
}

# Object noun -> the color word its synthetic instances are painted with.
OBJECT_WORDS: dict[str, str] = {
    "cube": "gray",
    "box": "white",
    "sphere": "brown",
    "ball": "purple",
}

STOP_WORDS = ("turn", "make", "the", "a", "into", "to", "paint")

NULL_TOKEN = "<null>"

TOKENS: tuple[str, ...] = (
    (NULL_TOKEN,) + STOP_WORDS + tuple(COLOR_WORDS) + tuple(OBJECT_WORDS)
)

TOKEN_IDS: dict[str, int] = {tok: i for i, tok in enumerate(TOKENS)}

VOCAB_SIZE = len(TOKENS)


def tokenize(text: str) -> list[str]:
    return [w for w in text.lower().replace(",", " ").split() if w]


def encode(text: str) -> np.ndarray:
    """Token ids for a prompt; unknown words raise with the full vocabulary."""
    words = tokenize(text)
    ids = []
    for w in words:
        if w not in TOKEN_IDS:
            raise PerceptionError(
                f"unknown prompt token {w!r}; vocabulary: {sorted(TOKEN_IDS)}")
        ids.append(TOKEN_IDS[w])
    if not ids:
        ids = [TOKEN_IDS[NULL_TOKEN]]
    return np.asarray(ids, dtype=np.int64)
