"""Retrieval metrics per scene plus dataset-level aggregation.

Definitions, over one scene's ranked pair list and its ground truth:

* P@k: fraction of the top k pairs that are true matches.
* R@k: 1 if any of the top k pairs is a true match, else 0. Binary per
  scene; dataset recall is the mean of these indicators.
* AP@k: sum over relevant ranks r <= k of P@r, normalized by
  min(k, total_positives). A scene with no positive pair has no defined
  AP and is excluded from the mAP mean (the exclusion count is reported).

The AP normalizer min(k, total_positives) keeps AP@k within [0, 1] and
makes AP@1 coincide with R@1 for every scene that has at least one
positive, which carries the identity mAP@1 = R@1 up to dataset level.

Timing statistics treat the evaluated scenes as the whole population, so
sigma_t is the population standard deviation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, DataIntegrityError
from .groundtruth import GroundTruthMatrix
from .retrieval import PairRanking

DEFAULT_K_VALUES = (1, 5, 10)


def relevance_vector(ranking: PairRanking, gt: GroundTruthMatrix, k: int) -> np.ndarray:
    """Binary vector: element r is 1 iff the pair at rank r+1 is a true match."""
    if len(ranking.entries) < k:
        raise ConfigurationError(
            f"ranking holds {len(ranking.entries)} entries, need at least {k}"
        )
    n_a, n_b = len(gt.ids_a), len(gt.ids_b)
    rel = np.zeros(k, dtype=np.int64)
    for r, (i, j, _sim) in enumerate(ranking.entries[:k]):
        if not (0 <= i < n_a and 0 <= j < n_b):
            raise DataIntegrityError(
                f"ranking pair ({i}, {j}) outside the {n_a} x {n_b} ground-truth grid"
            )
        rel[r] = 1 if gt.label_at(i, j).is_match else 0
    return rel


def precision_at_k(rel: np.ndarray, k: int) -> float:
    rel = np.asarray(rel)
    if rel.shape[0] < k:
        raise ConfigurationError(f"relevance vector shorter than k={k}")
    return float(np.sum(rel[:k])) / k


def recall_at_k(rel: np.ndarray, k: int) -> float:
    rel = np.asarray(rel)
    if rel.shape[0] < k:
        raise ConfigurationError(f"relevance vector shorter than k={k}")
    return 1.0 if np.any(rel[:k]) else 0.0


def average_precision_at_k(rel: np.ndarray, k: int, total_positives: int) -> float | None:
    """AP@k, or None when the scene has no positives (undefined)."""
    rel = np.asarray(rel)
    if rel.shape[0] < k:
        raise ConfigurationError(f"relevance vector shorter than k={k}")
    if total_positives < 0:
        raise ConfigurationError(f"total_positives must be >= 0, got {total_positives}")
    if total_positives == 0:
        return None
    hits = 0
    score = 0.0
    for r in range(1, k + 1):
        if rel[r - 1]:
            hits += 1
            score += hits / r
    return score / min(k, total_positives)


@dataclass(frozen=True)
class SceneMetrics:
    """Per-scene metric values at every requested k."""

    scene_id: str
    k_values: tuple[int, ...]
    p_at_k: Mapping[int, float]
    r_at_k: Mapping[int, float]
    ap_at_k: Mapping[int, float | None]
    total_positives: int
    elapsed_seconds: float

    def __post_init__(self):
        object.__setattr__(self, "k_values", tuple(self.k_values))
        object.__setattr__(self, "p_at_k", dict(self.p_at_k))
        object.__setattr__(self, "r_at_k", dict(self.r_at_k))
        object.__setattr__(self, "ap_at_k", dict(self.ap_at_k))
        for k in self.k_values:
            p, r, ap = self.p_at_k[k], self.r_at_k[k], self.ap_at_k[k]
            if not (0.0 <= p <= 1.0):
                raise DataIntegrityError(f"scene {self.scene_id!r}: P@{k}={p} outside [0,1]")
            if r not in (0.0, 1.0):
                raise DataIntegrityError(f"scene {self.scene_id!r}: R@{k}={r} is not binary")
            if self.ap_excluded:
                if ap is not None:
                    raise DataIntegrityError(
                        f"scene {self.scene_id!r}: AP defined despite zero positives"
                    )
            elif ap is None or not (0.0 <= ap <= 1.0):
                raise DataIntegrityError(f"scene {self.scene_id!r}: AP@{k}={ap} outside [0,1]")
        if 1 in self.k_values and not self.ap_excluded:
            if abs(self.ap_at_k[1] - self.r_at_k[1]) > 1e-15:
                raise DataIntegrityError(
                    f"scene {self.scene_id!r}: AP@1={self.ap_at_k[1]} does not equal "
                    f"R@1={self.r_at_k[1]}"
                )

    @property
    def ap_excluded(self) -> bool:
        return self.total_positives == 0


def compute_scene_metrics(
    ranking: PairRanking,
    gt: GroundTruthMatrix,
    k_values: Sequence[int] = DEFAULT_K_VALUES,
) -> SceneMetrics:
    ks = tuple(sorted(int(k) for k in k_values))
    if not ks or ks[0] < 1:
        raise ConfigurationError(f"k values must be >= 1, got {list(k_values)}")
    total_positives = gt.total_positives()
    rel = relevance_vector(ranking, gt, ks[-1])
    return SceneMetrics(
        scene_id=gt.scene_id,
        k_values=ks,
        p_at_k={k: precision_at_k(rel, k) for k in ks},
        r_at_k={k: recall_at_k(rel, k) for k in ks},
        ap_at_k={k: average_precision_at_k(rel, k, total_positives) for k in ks},
        total_positives=total_positives,
        elapsed_seconds=ranking.elapsed_seconds,
    )


@dataclass(frozen=True)
class DatasetMetrics:
    """Arithmetic means over a dataset's scenes plus timing statistics.

    ``map_at_k`` values are means over the AP-included scenes only and are
    None when every scene was excluded. ``mu_t``/``sigma_t`` cover the
    ranking computation alone (descriptor extraction happens upstream and
    its cost never reaches this harness).
    """

    dataset_tag: str
    method_tag: str
    scene_count: int
    ap_included_count: int
    p_at_k: Mapping[int, float]
    r_at_k: Mapping[int, float]
    map_at_k: Mapping[int, float | None]
    mu_t: float
    sigma_t: float

    def __post_init__(self):
        object.__setattr__(self, "p_at_k", dict(self.p_at_k))
        object.__setattr__(self, "r_at_k", dict(self.r_at_k))
        object.__setattr__(self, "map_at_k", dict(self.map_at_k))
        if self.scene_count < 1:
            raise ConfigurationError("dataset metrics need at least one scene")
        if not (0 <= self.ap_included_count <= self.scene_count):
            raise DataIntegrityError(
                f"ap_included_count {self.ap_included_count} outside "
                f"[0, {self.scene_count}]"
            )
        if self.sigma_t < 0:
            raise DataIntegrityError(f"sigma_t must be >= 0, got {self.sigma_t}")

    @property
    def ap_excluded_count(self) -> int:
        return self.scene_count - self.ap_included_count


def aggregate_dataset(
    scenes: Sequence[SceneMetrics],
    dataset_tag: str,
    method_tag: str,
) -> DatasetMetrics:
    """Mean each metric over scenes; mAP averages only AP-defined scenes."""
    if not scenes:
        raise ConfigurationError("cannot aggregate an empty scene list")
    ks = scenes[0].k_values
    for s in scenes[1:]:
        if s.k_values != ks:
            raise ConfigurationError(
                f"scene {s.scene_id!r} was computed at k={s.k_values}, expected {ks}"
            )
    included = [s for s in scenes if not s.ap_excluded]
    map_at_k: dict[int, float | None] = {}
    for k in ks:
        if included:
            map_at_k[k] = float(np.mean([s.ap_at_k[k] for s in included]))
        else:
            map_at_k[k] = None
    times = np.array([s.elapsed_seconds for s in scenes], dtype=np.float64)
    return DatasetMetrics(
        dataset_tag=dataset_tag,
        method_tag=method_tag,
        scene_count=len(scenes),
        ap_included_count=len(included),
        p_at_k={k: float(np.mean([s.p_at_k[k] for s in scenes])) for k in ks},
        r_at_k={k: float(np.mean([s.r_at_k[k] for s in scenes])) for k in ks},
        map_at_k=map_at_k,
        mu_t=float(np.mean(times)),
        sigma_t=float(np.std(times)),
    )
