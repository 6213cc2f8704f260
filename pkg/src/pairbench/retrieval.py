"""Brute-force pair ranking: cosine similarity over all A x B pairs.

Descriptors are stored as float32 rows; similarity is accumulated in
float64 so that even D = 8192 dot products keep comfortably more
precision than the 1e-6 agreement the scalar definition is held to.
Ranking order is fully deterministic: descending similarity with ties
broken by (index_a, index_b) ascending.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ._io import atomic_write_text
from .codecs import DescriptorSet
from .errors import ConfigurationError, DataIntegrityError, DegenerateDescriptorError

SIMILARITY_BOUND_SLACK = 1e-6


@dataclass(frozen=True)
class PairRanking:
    """Ranked list of (index_a, index_b, similarity) pairs for one scene."""

    scene_id: str
    method_tag: str
    entries: tuple[tuple[int, int, float], ...]
    elapsed_seconds: float

    def __post_init__(self):
        object.__setattr__(
            self,
            "entries",
            tuple((int(i), int(j), float(s)) for i, j, s in self.entries),
        )
        seen: set[tuple[int, int]] = set()
        previous = None
        for i, j, s in self.entries:
            if not np.isfinite(s) or abs(s) > 1.0 + SIMILARITY_BOUND_SLACK:
                raise DataIntegrityError(
                    f"ranking {self.scene_id!r}: similarity {s} outside [-1, 1]"
                )
            if (i, j) in seen:
                raise DataIntegrityError(
                    f"ranking {self.scene_id!r}: duplicate pair ({i}, {j})"
                )
            seen.add((i, j))
            if previous is not None and s > previous:
                raise DataIntegrityError(
                    f"ranking {self.scene_id!r}: similarities increase at pair ({i}, {j})"
                )
            previous = s

    def __len__(self) -> int:
        return len(self.entries)


def cosine_similarity(d1: np.ndarray, d2: np.ndarray) -> float:
    """Scalar cosine similarity between two descriptor vectors."""
    v1 = np.asarray(d1, dtype=np.float64).reshape(-1)
    v2 = np.asarray(d2, dtype=np.float64).reshape(-1)
    if v1.shape != v2.shape:
        raise ConfigurationError(
            f"descriptor dimensions differ: {v1.shape[0]} vs {v2.shape[0]}"
        )
    n1 = np.linalg.norm(v1)
    n2 = np.linalg.norm(v2)
    if n1 == 0.0 or n2 == 0.0:
        raise DegenerateDescriptorError("cosine similarity of a zero-norm descriptor")
    return float(v1 @ v2 / (n1 * n2))


def similarity_matrix(desc_a: DescriptorSet, desc_b: DescriptorSet) -> np.ndarray:
    """Dense N_A x N_B cosine-similarity matrix.

    Row-normalize then multiply; agrees with the scalar definition within
    1e-6 elementwise.
    """
    if desc_a.dimension != desc_b.dimension:
        raise ConfigurationError(
            f"descriptor dimensions differ: {desc_a.dimension} vs {desc_b.dimension}"
        )
    a = np.asarray(desc_a.data, dtype=np.float64)
    b = np.asarray(desc_b.data, dtype=np.float64)
    a = a / np.linalg.norm(a, axis=1, keepdims=True)
    b = b / np.linalg.norm(b, axis=1, keepdims=True)
    return a @ b.T


def rank_order(similarities: np.ndarray) -> np.ndarray:
    """Indices of the flattened similarity matrix in rank order.

    A stable descending sort of the row-major flattening breaks ties by
    flat index, which is exactly (index_a, index_b) ascending.
    """
    flat = np.asarray(similarities, dtype=np.float64).ravel()
    return np.argsort(-flat, kind="stable")


def top_k_pairs(
    desc_a: DescriptorSet,
    desc_b: DescriptorSet,
    k: int,
    scene_id: str = "",
) -> PairRanking:
    """The k highest-similarity (index_a, index_b) pairs, deterministically ordered."""
    total = desc_a.count * desc_b.count
    if k < 1 or k > total:
        raise ConfigurationError(
            f"k must be within [1, {total}] for a {desc_a.count} x {desc_b.count} grid, got {k}"
        )
    if desc_a.method_tag != desc_b.method_tag:
        raise ConfigurationError(
            f"descriptor sets come from different methods: "
            f"{desc_a.method_tag!r} vs {desc_b.method_tag!r}"
        )
    start = time.perf_counter()
    sims = similarity_matrix(desc_a, desc_b)
    order = rank_order(sims)[:k]
    elapsed = time.perf_counter() - start

    n_b = desc_b.count
    flat = sims.ravel()
    entries = tuple(
        (int(idx // n_b), int(idx % n_b), float(flat[idx])) for idx in order
    )
    return PairRanking(
        scene_id=scene_id,
        method_tag=desc_a.method_tag,
        entries=entries,
        elapsed_seconds=elapsed,
    )


def write_ranking_dump(
    ranking: PairRanking,
    ids_a: Sequence[str],
    ids_b: Sequence[str],
    path: str | Path,
) -> None:
    """JSON-lines dump of (image_id_a, image_id_b, similarity) per rank."""
    lines = []
    for i, j, s in ranking.entries:
        lines.append(
            json.dumps(
                {"image_id_a": ids_a[i], "image_id_b": ids_b[j], "similarity": s},
                sort_keys=True,
                separators=(",", ":"),
            )
        )
    atomic_write_text(path, "\n".join(lines) + "\n")
