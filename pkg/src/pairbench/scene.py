"""Scene model: images, cameras, poses, manifests, and A/B splitting.

A scene is a set of images of one place with known world-to-camera poses.
The manifest is a JSON document that lists the images, assigns each to
subset A or B, and points at the pose source files (a COLMAP text export
or a KITTI odometry sequence). Everything downstream consumes the
in-memory :class:`SceneManifest` built here.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ._io import atomic_write_text
from .errors import ConfigurationError, InsufficientDataError, PoseValidityError

DATASET_TAGS = ("TT", "SNGS", "KITTI", "CUSTOM")
SUBSETS = ("A", "B")

# Target subset size range; outside it we warn but keep going.
TARGET_MIN = 30
TARGET_MAX = 60

ROTATION_TOL = 1e-6


@dataclass(frozen=True)
class ImageRecord:
    """One image's identity and subset membership within a scene."""

    image_id: str
    file_path: str
    subset: str
    width: int
    height: int

    def __post_init__(self):
        if not self.image_id:
            raise ConfigurationError("image_id must be a non-empty string")
        if self.subset not in SUBSETS:
            raise ConfigurationError(
                f"image {self.image_id!r}: subset must be one of {SUBSETS}, got {self.subset!r}"
            )
        if self.width <= 0 or self.height <= 0:
            raise ConfigurationError(
                f"image {self.image_id!r}: width and height must be positive"
            )


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics in pixels; zero skew, undistorted images assumed."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ConfigurationError(
                f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}"
            )


@dataclass(frozen=True)
class Pose:
    """World-to-camera rigid transform.

    ``rotation`` maps world coordinates into the camera frame and
    ``translation`` is the camera-frame offset, i.e. x_cam = R x_world + t.
    Both arrays are float64 and frozen read-only after construction.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if r.shape != (3, 3):
            raise PoseValidityError(f"rotation must be 3x3, got {r.shape}")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(t))):
            raise PoseValidityError("pose contains non-finite values")
        ortho_err = np.linalg.norm(r.T @ r - np.eye(3))
        if ortho_err >= ROTATION_TOL:
            raise PoseValidityError(
                f"rotation is not orthonormal (|R^T R - I|_F = {ortho_err:.3e})"
            )
        if abs(np.linalg.det(r) - 1.0) >= ROTATION_TOL:
            raise PoseValidityError(
                f"rotation determinant {np.linalg.det(r):.6f} is not +1"
            )
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)


@dataclass(frozen=True)
class SceneManifest:
    """A fully resolved scene: images with subset labels, poses, intrinsics.

    ``provenance`` keeps the pose-source descriptor from the manifest file
    so the document can be re-emitted and the origin of poses is auditable.
    """

    scene_id: str
    dataset_tag: str
    images: tuple[ImageRecord, ...]
    poses: Mapping[str, Pose]
    intrinsics: Mapping[str, CameraIntrinsics]
    provenance: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if not self.scene_id:
            raise ConfigurationError("scene_id must be non-empty")
        if self.dataset_tag not in DATASET_TAGS:
            raise ConfigurationError(
                f"dataset_tag must be one of {DATASET_TAGS}, got {self.dataset_tag!r}"
            )
        object.__setattr__(self, "images", tuple(self.images))
        seen: set[str] = set()
        for rec in self.images:
            if rec.image_id in seen:
                raise ConfigurationError(
                    f"scene {self.scene_id!r}: duplicate image_id {rec.image_id!r}"
                )
            seen.add(rec.image_id)
        missing_pose = [r.image_id for r in self.images if r.image_id not in self.poses]
        if missing_pose:
            raise ConfigurationError(
                f"scene {self.scene_id!r}: images without a pose: {missing_pose}"
            )
        missing_k = [r.image_id for r in self.images if r.image_id not in self.intrinsics]
        if missing_k:
            raise ConfigurationError(
                f"scene {self.scene_id!r}: images without intrinsics: {missing_k}"
            )
        for subset in SUBSETS:
            size = sum(1 for r in self.images if r.subset == subset)
            if size == 0:
                raise ConfigurationError(
                    f"scene {self.scene_id!r}: subset {subset} is empty"
                )
            if not (TARGET_MIN <= size <= TARGET_MAX):
                warnings.warn(
                    f"scene {self.scene_id!r}: subset {subset} has {size} images, "
                    f"outside the target range {TARGET_MIN}-{TARGET_MAX}",
                    stacklevel=2,
                )

    @property
    def subset_a(self) -> tuple[ImageRecord, ...]:
        return tuple(r for r in self.images if r.subset == "A")

    @property
    def subset_b(self) -> tuple[ImageRecord, ...]:
        return tuple(r for r in self.images if r.subset == "B")

    def pose_of(self, image_id: str) -> Pose:
        return self.poses[image_id]

    def intrinsics_of(self, image_id: str) -> CameraIntrinsics:
        return self.intrinsics[image_id]


# ---------------------------------------------------------------------------
# Split policies


@dataclass(frozen=True)
class ExplicitRanges:
    """Inclusive index ranges per subset, e.g. A=[(0, 29)], B=[(30, 59)]."""

    ranges_a: tuple[tuple[int, int], ...]
    ranges_b: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "ranges_a", tuple((int(a), int(b)) for a, b in self.ranges_a))
        object.__setattr__(self, "ranges_b", tuple((int(a), int(b)) for a, b in self.ranges_b))
        for lo, hi in (*self.ranges_a, *self.ranges_b):
            if lo < 0 or hi < lo:
                raise ConfigurationError(f"invalid index range [{lo}, {hi}]")


@dataclass(frozen=True)
class ContiguousHalves:
    """First half to A, second half to B, optional per-subset size cap."""

    cap: int | None = None

    def __post_init__(self):
        if self.cap is not None and self.cap < 1:
            raise ConfigurationError(f"cap must be >= 1, got {self.cap}")


SplitPolicy = ExplicitRanges | ContiguousHalves


def _expand_ranges(ranges: Sequence[tuple[int, int]], n: int, name: str) -> list[int]:
    out: list[int] = []
    for lo, hi in ranges:
        if hi >= n:
            raise ConfigurationError(
                f"range [{lo}, {hi}] for subset {name} exceeds image count {n}"
            )
        out.extend(range(lo, hi + 1))
    return out


def _subsample_uniform(indices: list[int], cap: int) -> list[int]:
    n = len(indices)
    if n <= cap:
        return indices
    return [indices[(i * n) // cap] for i in range(cap)]


def split_scene(ordered_images: Sequence, policy: SplitPolicy) -> tuple[list, list]:
    """Partition an ordered image list into disjoint subsets A and B.

    Elements are treated as opaque; only their positions matter. Order
    within each subset follows the input order.
    """
    n = len(ordered_images)
    if n < 2:
        raise InsufficientDataError(f"need at least 2 images to split, got {n}")
    if isinstance(policy, ExplicitRanges):
        idx_a = _expand_ranges(policy.ranges_a, n, "A")
        idx_b = _expand_ranges(policy.ranges_b, n, "B")
        if not idx_a or not idx_b:
            raise ConfigurationError("both subsets must receive at least one index")
        if len(set(idx_a)) != len(idx_a) or len(set(idx_b)) != len(idx_b):
            raise ConfigurationError("explicit ranges repeat an index within a subset")
        overlap = set(idx_a) & set(idx_b)
        if overlap:
            raise ConfigurationError(
                f"explicit ranges overlap between subsets at indices {sorted(overlap)[:10]}"
            )
    elif isinstance(policy, ContiguousHalves):
        half = n // 2
        idx_a = list(range(half))
        idx_b = list(range(half, n))
        if policy.cap is not None:
            idx_a = _subsample_uniform(idx_a, policy.cap)
            idx_b = _subsample_uniform(idx_b, policy.cap)
    else:
        raise ConfigurationError(f"unknown split policy {policy!r}")
    return ([ordered_images[i] for i in idx_a], [ordered_images[i] for i in idx_b])


# ---------------------------------------------------------------------------
# Manifest JSON document

_POSE_SOURCE_KINDS = ("colmap_text", "kitti")


def _resolve(base: Path, rel: str) -> Path:
    p = Path(rel)
    return p if p.is_absolute() else base / p


def _colmap_key(record: ImageRecord, table: Mapping[str, tuple]) -> str | None:
    """COLMAP keys images by name; accept the manifest path, its basename, or the id."""
    for key in (record.file_path, Path(record.file_path).name, record.image_id):
        if key in table:
            return key
    return None


def load_manifest(path: str | Path) -> SceneManifest:
    """Read a scene manifest JSON file and resolve its pose source.

    Pose source paths are interpreted relative to the manifest's directory.
    For KITTI scenes each image needs a frame index, taken from an optional
    ``frame_index`` field or else parsed from the file path stem.
    """
    from . import poses as pose_io

    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigurationError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"manifest {path} is not valid JSON: {exc}") from exc

    for key in ("scene_id", "dataset_tag", "pose_source", "images"):
        if key not in doc:
            raise ConfigurationError(f"manifest {path} is missing field {key!r}")
    source = doc["pose_source"]
    kind = source.get("kind")
    if kind not in _POSE_SOURCE_KINDS:
        raise ConfigurationError(
            f"manifest {path}: pose_source.kind must be one of {_POSE_SOURCE_KINDS}, got {kind!r}"
        )

    records = []
    for entry in doc["images"]:
        try:
            records.append(
                ImageRecord(
                    image_id=entry["image_id"],
                    file_path=entry["file_path"],
                    subset=entry["subset"],
                    width=int(entry["width"]),
                    height=int(entry["height"]),
                )
            )
        except KeyError as exc:
            raise ConfigurationError(
                f"manifest {path}: image entry missing field {exc}"
            ) from exc

    base = path.parent
    poses: dict[str, Pose] = {}
    intrinsics: dict[str, CameraIntrinsics] = {}
    if kind == "colmap_text":
        images_path = _resolve(base, source["images_path"])
        cameras_path = _resolve(base, source["cameras_path"])
        table = pose_io.parse_colmap_poses(
            images_path.read_text(encoding="utf-8"),
            cameras_path.read_text(encoding="utf-8"),
            images_name=str(images_path),
            cameras_name=str(cameras_path),
        )
        for rec in records:
            key = _colmap_key(rec, table)
            if key is None:
                raise ConfigurationError(
                    f"manifest {path}: no COLMAP pose found for image {rec.image_id!r} "
                    f"(tried {rec.file_path!r} and its basename)"
                )
            poses[rec.image_id], intrinsics[rec.image_id] = table[key]
    else:
        poses_path = _resolve(base, source["poses_path"])
        calib_path = _resolve(base, source["calib_path"])
        table = pose_io.parse_kitti_poses(
            poses_path.read_text(encoding="utf-8"),
            calib_path.read_text(encoding="utf-8"),
            poses_name=str(poses_path),
            calib_name=str(calib_path),
        )
        by_entry = {e.get("image_id"): e for e in doc["images"]}
        for rec in records:
            entry = by_entry[rec.image_id]
            if "frame_index" in entry:
                frame = int(entry["frame_index"])
            else:
                stem = Path(rec.file_path).stem
                try:
                    frame = int(stem)
                except ValueError:
                    raise ConfigurationError(
                        f"manifest {path}: image {rec.image_id!r} has no frame_index and "
                        f"its file stem {stem!r} is not an integer"
                    ) from None
            if frame not in table:
                raise ConfigurationError(
                    f"manifest {path}: frame {frame} not present in {poses_path}"
                )
            poses[rec.image_id], intrinsics[rec.image_id] = table[frame]

    return SceneManifest(
        scene_id=doc["scene_id"],
        dataset_tag=doc["dataset_tag"],
        images=tuple(records),
        poses=poses,
        intrinsics=intrinsics,
        provenance=dict(source),
    )


def write_manifest(manifest: SceneManifest, path: str | Path) -> None:
    """Emit the manifest JSON document (images plus pose-source pointer)."""
    doc = {
        "scene_id": manifest.scene_id,
        "dataset_tag": manifest.dataset_tag,
        "pose_source": dict(manifest.provenance),
        "images": [
            {
                "image_id": r.image_id,
                "file_path": r.file_path,
                "subset": r.subset,
                "width": r.width,
                "height": r.height,
            }
            for r in manifest.images
        ],
    }
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_manifest_dir(directory: str | Path) -> list[SceneManifest]:
    """Load every ``*.json`` manifest under a directory, sorted by scene_id."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigurationError(f"manifest directory {directory} does not exist")
    manifests = [load_manifest(p) for p in sorted(directory.glob("*.json"))]
    if not manifests:
        raise ConfigurationError(f"no manifest files (*.json) under {directory}")
    ids = [m.scene_id for m in manifests]
    if len(set(ids)) != len(ids):
        raise ConfigurationError(f"duplicate scene_id among manifests in {directory}")
    return sorted(manifests, key=lambda m: m.scene_id)
