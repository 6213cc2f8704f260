"""Epipolar and rotational geometry used by the ground-truth criteria.

View directions and angles feed criterion 1; essential-matrix machinery
(Sampson gating, SVD decomposition with cheirality voting, geodesic
rotation distance) feeds criterion 2. All rotations are world-to-camera.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CheiralityAmbiguousError, ConfigurationError, NumericalError
from .scene import CameraIntrinsics, Pose

_BACK_VECTOR = np.array([0.0, 0.0, -1.0])

# W rotates the left singular frame onto the two rotation candidates.
_W = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class GeometryConfig:
    """Thresholds and RANSAC policy for ground-truth labeling.

    ``tau_in`` is a Sampson-error threshold expressed in pixels; normalized
    errors are rescaled by the geometric mean of the two cameras' fx before
    comparison, so the value is resolution-meaningful.
    """

    tau_view_deg: float = 75.0
    tau_dev_deg: float = 10.0
    tau_in: float = 0.25
    ransac_max_iters: int = 1000
    ransac_confidence: float = 0.999
    min_correspondences: int = 15

    def __post_init__(self):
        if not (self.tau_view_deg > 0 and self.tau_dev_deg > 0 and self.tau_in > 0):
            raise ConfigurationError("all thresholds must be positive")
        if not (0.0 < self.ransac_confidence < 1.0):
            raise ConfigurationError(
                f"ransac_confidence must lie in (0, 1), got {self.ransac_confidence}"
            )
        if self.ransac_max_iters < 1:
            raise ConfigurationError("ransac_max_iters must be >= 1")
        if self.min_correspondences < 5:
            raise ConfigurationError(
                "min_correspondences must be >= 5 (the minimal sample size)"
            )


@dataclass(frozen=True)
class EssentialMatrix:
    """A 3x3 essential matrix, validated to be rank 2 with equal nonzero
    singular values (the defining property of the essential manifold)."""

    e: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.e, dtype=np.float64)
        if e.shape != (3, 3) or not np.all(np.isfinite(e)):
            raise NumericalError("essential matrix must be a finite 3x3 matrix")
        s = np.linalg.svd(e, compute_uv=False)
        if s[0] <= 0.0:
            raise NumericalError("essential matrix is identically zero")
        if s[2] >= 1e-6 * s[0]:
            raise NumericalError(
                f"essential matrix is not rank 2 (singular values {s})"
            )
        if (s[0] - s[1]) >= 1e-6 * s[0]:
            raise NumericalError(
                f"nonzero singular values are not equal (singular values {s})"
            )
        e = e.copy()
        e.setflags(write=False)
        object.__setattr__(self, "e", e)


@dataclass(frozen=True)
class RelativePose:
    """Rotation plus unit translation direction recovered from an essential
    matrix; the translation scale is unobservable."""

    rotation: np.ndarray
    translation_dir: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation_dir, dtype=np.float64).reshape(3)
        if np.linalg.norm(r.T @ r - np.eye(3)) >= 1e-9 or abs(np.linalg.det(r) - 1.0) >= 1e-9:
            raise NumericalError("recovered rotation is not in SO(3)")
        if abs(np.linalg.norm(t) - 1.0) >= 1e-12:
            raise NumericalError("translation_dir must be unit length")
        r = r.copy()
        t = t.copy()
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation_dir", t)


# ---------------------------------------------------------------------------
# Criterion 1: view directions


def view_direction(pose: Pose) -> np.ndarray:
    """The camera's viewing direction in world coordinates, R^T (0, 0, -1)."""
    return pose.rotation.T @ _BACK_VECTOR


def view_angle(pose_a: Pose, pose_b: Pose) -> float:
    """Angle between the two viewing directions, in degrees within [0, 180]."""
    cosine = float(np.dot(view_direction(pose_a), view_direction(pose_b)))
    return math.degrees(math.acos(max(-1.0, min(1.0, cosine))))


def check_view_criterion(phi_view_deg: float, config: GeometryConfig) -> bool:
    """Criterion 1: the view angle may equal the threshold (inclusive)."""
    return phi_view_deg <= config.tau_view_deg


# ---------------------------------------------------------------------------
# Relative pose and rotation distance


def relative_rotation(pose_a: Pose, pose_b: Pose) -> np.ndarray:
    """Rotation taking camera-a coordinates to camera-b coordinates, R_B R_A^T."""
    return pose_b.rotation @ pose_a.rotation.T


def relative_translation(pose_a: Pose, pose_b: Pose) -> np.ndarray:
    """Translation of the a-to-b transform: t_B - R_B R_A^T t_A."""
    return pose_b.translation - relative_rotation(pose_a, pose_b) @ pose_a.translation


def geodesic_distance(r1: np.ndarray, r2: np.ndarray) -> float:
    """Geodesic distance on SO(3) in radians, arccos((trace(r1 r2^T) - 1) / 2).

    The arccos argument is clamped to [-1, 1] so that floating-point drift
    in nearly-identical or nearly-antipodal rotations cannot produce NaN.
    Bitwise-equal inputs short-circuit to exactly zero; arccos loses half
    the significand near 1, so the computed distance of a matrix to itself
    would otherwise come out at ~1e-8 instead of 0.
    """
    if r1 is r2 or np.array_equal(r1, r2):
        return 0.0
    argument = (float(np.trace(r1 @ r2.T)) - 1.0) / 2.0
    return math.acos(max(-1.0, min(1.0, argument)))


def check_geometry_criterion(d_r_radians: float, config: GeometryConfig) -> bool:
    """Criterion 2: the rotation deviation must stay strictly below the
    threshold; a deviation exactly at tau_dev fails."""
    return math.degrees(d_r_radians) < config.tau_dev_deg


# ---------------------------------------------------------------------------
# Calibrated coordinates and Sampson error


def normalize_correspondences(points, k_a: CameraIntrinsics, k_b: CameraIntrinsics) -> np.ndarray:
    """Map pixel correspondences to normalized camera coordinates.

    Accepts an M x 4 array of (x_a, y_a, x_b, y_b) pixels (a CorrespondenceSet's
    ``points`` attribute works directly) and applies each camera's own
    intrinsics: (x - cx) / fx, (y - cy) / fy.
    """
    pts = np.asarray(getattr(points, "points", points), dtype=np.float64)
    if pts.size == 0:
        return pts.reshape(0, 4)
    out = np.empty_like(pts)
    out[:, 0] = (pts[:, 0] - k_a.cx) / k_a.fx
    out[:, 1] = (pts[:, 1] - k_a.cy) / k_a.fy
    out[:, 2] = (pts[:, 2] - k_b.cx) / k_b.fx
    out[:, 3] = (pts[:, 3] - k_b.cy) / k_b.fy
    return out


def fx_reference(k_a: CameraIntrinsics, k_b: CameraIntrinsics) -> float:
    """Geometric mean of the two fx values; converts normalized Sampson
    errors into pixel units."""
    return math.sqrt(k_a.fx * k_b.fx)


def sampson_distance(e: EssentialMatrix | np.ndarray, points: np.ndarray, fx_ref: float) -> np.ndarray | float:
    """First-order Sampson error in pixels for normalized correspondences.

    ``points`` may be one correspondence (shape (4,)) or a batch (M, 4);
    the return value is a scalar or an (M,) vector accordingly. A vanishing
    gradient denominator yields +inf, which no threshold can admit.
    """
    mat = e.e if isinstance(e, EssentialMatrix) else np.asarray(e, dtype=np.float64)
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    ones = np.ones(len(pts))
    x1 = np.column_stack([pts[:, 0], pts[:, 1], ones])
    x2 = np.column_stack([pts[:, 2], pts[:, 3], ones])
    ex1 = x1 @ mat.T          # row i = E @ x1_i
    etx2 = x2 @ mat           # row i = E^T @ x2_i
    residual = np.einsum("ij,ij->i", x2, ex1)
    denom_sq = ex1[:, 0] ** 2 + ex1[:, 1] ** 2 + etx2[:, 0] ** 2 + etx2[:, 1] ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        dist = np.where(denom_sq > 0.0, np.abs(residual) / np.sqrt(denom_sq), np.inf)
    dist = fx_ref * dist
    return float(dist[0]) if single else dist


# ---------------------------------------------------------------------------
# Triangulation and decomposition


def triangulate_points(rotation: np.ndarray, translation: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Linear (DLT) triangulation for cameras [I|0] and [R|t].

    Returns homogeneous 4-vectors, one per correspondence. Keeping the
    homogeneous form lets depth signs be evaluated without dividing by a
    possibly tiny w component.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    m = len(pts)
    p2 = np.hstack([rotation, np.reshape(translation, (3, 1))])
    systems = np.zeros((m, 4, 4))
    systems[:, 0, 0] = -1.0
    systems[:, 0, 2] = pts[:, 0]
    systems[:, 1, 1] = -1.0
    systems[:, 1, 2] = pts[:, 1]
    systems[:, 2] = pts[:, 2, None] * p2[2] - p2[0]
    systems[:, 3] = pts[:, 3, None] * p2[2] - p2[1]
    _, _, vt = np.linalg.svd(systems)
    return vt[:, -1, :]


def _positive_depth_votes(rotation, translation, points) -> int:
    xh = triangulate_points(rotation, translation, points)
    w = xh[:, 3]
    depth_a = xh[:, 2] * w
    depth_b = (xh[:, :3] @ rotation[2] + translation[2] * w) * w
    return int(np.count_nonzero((depth_a > 0) & (depth_b > 0)))


def decompose_essential(e: EssentialMatrix, inlier_points: np.ndarray) -> RelativePose:
    """Recover (R, unit t) from an essential matrix by cheirality voting.

    The four SVD candidates are scored by how many inlier correspondences
    triangulate with positive depth in both cameras; the winner must hold a
    strict majority, otherwise the configuration is ambiguous.
    """
    pts = np.atleast_2d(np.asarray(inlier_points, dtype=np.float64))
    if len(pts) < 1:
        raise CheiralityAmbiguousError("at least one inlier correspondence is required")
    u, _, vt = np.linalg.svd(e.e)
    if np.linalg.det(u) < 0:
        u = -u
    if np.linalg.det(vt) < 0:
        vt = -vt
    t = u[:, 2]
    candidates = [
        (u @ _W @ vt, t),
        (u @ _W @ vt, -t),
        (u @ _W.T @ vt, t),
        (u @ _W.T @ vt, -t),
    ]
    votes = [_positive_depth_votes(r, tr, pts) for r, tr in candidates]
    winner = int(np.argmax(votes))
    if 2 * votes[winner] <= len(pts):
        raise CheiralityAmbiguousError(
            f"no decomposition candidate won a strict depth majority "
            f"(votes {votes} over {len(pts)} inliers)"
        )
    rotation, translation = candidates[winner]
    # Re-project onto SO(3): u and vt are orthonormal only to SVD precision.
    ru, _, rvt = np.linalg.svd(rotation)
    rotation = ru @ np.diag([1.0, 1.0, np.linalg.det(ru @ rvt)]) @ rvt
    return RelativePose(rotation=rotation, translation_dir=translation / np.linalg.norm(translation))
