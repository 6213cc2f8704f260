"""Seeded RANSAC around the five-point solver with Sampson-error gating.

The winning model is the raw minimal-sample solution; no consensus refit
is performed. Determinism is total for a fixed (correspondences, seed,
config) triple: the sampling stream comes from a seeded PCG64 generator
and all tie-breaking rules are explicit.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSampleError
from .fivepoint import estimate_essential_minimal
from .geometry import (
    EssentialMatrix,
    GeometryConfig,
    fx_reference,
    normalize_correspondences,
    sampson_distance,
)
from .scene import CameraIntrinsics


class RansacStatus(enum.Enum):
    OK = "ok"
    INSUFFICIENT_MATCHES = "insufficient_matches"
    ESTIMATION_FAILED = "estimation_failed"


@dataclass(frozen=True)
class RansacResult:
    """Outcome of one robust estimation run.

    ``essential`` and ``inlier_mask`` are present only when status is OK.
    ``inlier_ratio`` is the winner's inlier count over M, and zero for the
    two non-OK statuses.
    """

    status: RansacStatus
    essential: EssentialMatrix | None
    inlier_mask: np.ndarray | None
    inlier_ratio: float
    iterations_run: int
    seed: int

    @property
    def ok(self) -> bool:
        return self.status is RansacStatus.OK


def _adaptive_bound(inlier_fraction: float, confidence: float, cap: int) -> int:
    """Standard RANSAC stopping rule: iterations needed to hit a clean
    5-sample with the requested confidence, capped."""
    w5 = min(inlier_fraction, 1.0) ** 5
    if w5 >= 1.0:
        return 1  # every sample is clean; one draw suffices
    log_outlier = math.log1p(-w5)
    if log_outlier == 0.0:
        return cap
    needed = math.log(1.0 - confidence) / log_outlier
    if not math.isfinite(needed):
        return cap
    return int(min(cap, max(1.0, math.ceil(needed))))


def ransac_essential(
    correspondences,
    k_a: CameraIntrinsics,
    k_b: CameraIntrinsics,
    config: GeometryConfig,
    seed: int,
) -> RansacResult:
    """Estimate an essential matrix from pixel correspondences.

    Args:
        correspondences: a CorrespondenceSet or an M x 4 pixel array.
        k_a, k_b: intrinsics of the two cameras; used both for coordinate
            normalization and for expressing Sampson errors in pixels.
        config: thresholds and iteration policy.
        seed: u64 generator seed; identical inputs and seed reproduce the
            result bit-for-bit.

    Candidates are ranked by inlier count, then lower total inlier Sampson
    error, then earlier iteration index.
    """
    points = normalize_correspondences(correspondences, k_a, k_b)
    m = len(points)
    if m < config.min_correspondences:
        return RansacResult(
            status=RansacStatus.INSUFFICIENT_MATCHES,
            essential=None,
            inlier_mask=None,
            inlier_ratio=0.0,
            iterations_run=0,
            seed=seed,
        )
    fx_ref = fx_reference(k_a, k_b)
    rng = np.random.default_rng(seed)

    best_essential: EssentialMatrix | None = None
    best_mask: np.ndarray | None = None
    best_count = 0
    best_error = math.inf
    bound = config.ransac_max_iters
    iteration = 0
    while iteration < min(bound, config.ransac_max_iters):
        sample = rng.choice(m, size=5, replace=False)
        try:
            candidates = estimate_essential_minimal(points[sample])
        except DegenerateSampleError:
            # A degenerate draw still consumes an iteration of the budget.
            iteration += 1
            continue
        for candidate in candidates:
            distances = sampson_distance(candidate, points, fx_ref)
            mask = distances < config.tau_in
            count = int(np.count_nonzero(mask))
            if count < 5:
                continue
            total_error = float(distances[mask].sum())
            if count > best_count or (count == best_count and total_error < best_error):
                best_essential = candidate
                best_mask = mask
                best_count = count
                best_error = total_error
                bound = _adaptive_bound(count / m, config.ransac_confidence, config.ransac_max_iters)
        iteration += 1

    if best_essential is None:
        return RansacResult(
            status=RansacStatus.ESTIMATION_FAILED,
            essential=None,
            inlier_mask=None,
            inlier_ratio=0.0,
            iterations_run=iteration,
            seed=seed,
        )
    best_mask.setflags(write=False)
    return RansacResult(
        status=RansacStatus.OK,
        essential=best_essential,
        inlier_mask=best_mask,
        inlier_ratio=best_count / m,
        iterations_run=iteration,
        seed=seed,
    )
