"""Per-pair ground-truth labeling over the full A x B grid, with caching.

A pair is a positive match when two criteria hold in sequence: the view
angle between the cameras stays within tau_view, and the rotation of the
RANSAC-estimated essential matrix agrees with the SfM relative rotation
within tau_dev. Every failure mode is encoded as a status rather than an
exception so the grid is always complete.
"""
from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from ._io import atomic_write_text, safe_file_stem
from .codecs import CorrespondenceSet, read_correspondence_file
from .errors import CheiralityAmbiguousError, DataIntegrityError, NumericalError
from .geometry import (
    GeometryConfig,
    check_geometry_criterion,
    check_view_criterion,
    decompose_essential,
    geodesic_distance,
    normalize_correspondences,
    relative_rotation,
    view_angle,
)
from .ransac import RansacStatus, ransac_essential
from .scene import CameraIntrinsics, Pose, SceneManifest

CACHE_KIND = "pairbench-ground-truth"
CACHE_VERSION = 1

CorrespondenceLookup = Callable[[str, str], "CorrespondenceSet | None"]


class LabelStatus(enum.Enum):
    PASS = "PASS"
    FAIL_VIEW = "FAIL_VIEW"
    FAIL_GEOM = "FAIL_GEOM"
    INSUFFICIENT_MATCHES = "INSUFFICIENT_MATCHES"
    ESTIMATION_FAILED = "ESTIMATION_FAILED"
    CHEIRALITY_AMBIGUOUS = "CHEIRALITY_AMBIGUOUS"


@dataclass(frozen=True)
class GroundTruthLabel:
    """Verdict and diagnostics for one ordered (a, b) pair.

    ``d_r_deg`` and ``inlier_ratio`` are None whenever the corresponding
    stage never ran: criterion 2 is skipped entirely on a view-angle
    failure, and no inlier ratio exists unless RANSAC produced a model.
    """

    image_id_a: str
    image_id_b: str
    is_match: bool
    phi_view_deg: float
    d_r_deg: float | None
    inlier_ratio: float | None
    status: LabelStatus

    def __post_init__(self):
        if self.is_match != (self.status is LabelStatus.PASS):
            raise DataIntegrityError(
                f"label ({self.image_id_a}, {self.image_id_b}): is_match must "
                f"mirror status PASS, got is_match={self.is_match}, status={self.status}"
            )
        if self.status is LabelStatus.FAIL_VIEW and self.d_r_deg is not None:
            raise DataIntegrityError(
                "FAIL_VIEW labels must not carry a rotation deviation "
                "(criterion 2 is never evaluated)"
            )


def pair_seed(base_seed: int, scene_id: str, image_id_a: str, image_id_b: str) -> int:
    """Stable per-pair RANSAC seed.

    Hashing (base seed, scene, both ids) makes labels independent of grid
    evaluation order and of any parallel scheduling.
    """
    key = f"{base_seed}:{scene_id}:{image_id_a}:{image_id_b}".encode("utf-8")
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def config_fingerprint(config: GeometryConfig, base_seed: int) -> str:
    """Hash of everything that can change a label: thresholds, RANSAC
    policy, and the base seed."""
    payload = {
        "cache_version": CACHE_VERSION,
        "tau_view_deg": config.tau_view_deg,
        "tau_dev_deg": config.tau_dev_deg,
        "tau_in": config.tau_in,
        "ransac_max_iters": config.ransac_max_iters,
        "ransac_confidence": config.ransac_confidence,
        "min_correspondences": config.min_correspondences,
        "seed": base_seed,
    }
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def label_pair(
    pose_a: Pose,
    pose_b: Pose,
    k_a: CameraIntrinsics,
    k_b: CameraIntrinsics,
    correspondences: CorrespondenceSet | None,
    config: GeometryConfig,
    seed: int,
    image_id_a: str = "a",
    image_id_b: str = "b",
) -> GroundTruthLabel:
    """Label one ordered pair.

    Criterion 1 is evaluated first and short-circuits all geometry work.
    Absent or too-few correspondences are a negative label, not an error,
    so partial correspondence extractions degrade visibly but gracefully.
    """
    phi_view = view_angle(pose_a, pose_b)

    def negative(status: LabelStatus, d_r=None, ratio=None) -> GroundTruthLabel:
        return GroundTruthLabel(
            image_id_a=image_id_a,
            image_id_b=image_id_b,
            is_match=False,
            phi_view_deg=phi_view,
            d_r_deg=d_r,
            inlier_ratio=ratio,
            status=status,
        )

    if not check_view_criterion(phi_view, config):
        return negative(LabelStatus.FAIL_VIEW)
    if correspondences is None or len(correspondences) < config.min_correspondences:
        return negative(LabelStatus.INSUFFICIENT_MATCHES)

    result = ransac_essential(correspondences, k_a, k_b, config, seed)
    if result.status is RansacStatus.INSUFFICIENT_MATCHES:
        return negative(LabelStatus.INSUFFICIENT_MATCHES)
    if result.status is RansacStatus.ESTIMATION_FAILED:
        return negative(LabelStatus.ESTIMATION_FAILED)

    normalized = normalize_correspondences(correspondences, k_a, k_b)
    inliers = normalized[result.inlier_mask]
    try:
        relative = decompose_essential(result.essential, inliers)
    except CheiralityAmbiguousError:
        return negative(LabelStatus.CHEIRALITY_AMBIGUOUS, ratio=result.inlier_ratio)
    except NumericalError:
        return negative(LabelStatus.ESTIMATION_FAILED, ratio=result.inlier_ratio)

    d_r = geodesic_distance(relative.rotation, relative_rotation(pose_a, pose_b))
    d_r_deg = np.degrees(d_r)
    if check_geometry_criterion(d_r, config):
        return GroundTruthLabel(
            image_id_a=image_id_a,
            image_id_b=image_id_b,
            is_match=True,
            phi_view_deg=phi_view,
            d_r_deg=float(d_r_deg),
            inlier_ratio=result.inlier_ratio,
            status=LabelStatus.PASS,
        )
    return negative(LabelStatus.FAIL_GEOM, d_r=float(d_r_deg), ratio=result.inlier_ratio)


@dataclass(frozen=True)
class GroundTruthMatrix:
    """Complete grid of labels over ordered pairs (a in A, b in B)."""

    scene_id: str
    fingerprint: str
    ids_a: tuple[str, ...]
    ids_b: tuple[str, ...]
    labels: tuple[tuple[GroundTruthLabel, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "ids_a", tuple(self.ids_a))
        object.__setattr__(self, "ids_b", tuple(self.ids_b))
        object.__setattr__(self, "labels", tuple(tuple(row) for row in self.labels))
        if len(self.labels) != len(self.ids_a) or any(
            len(row) != len(self.ids_b) for row in self.labels
        ):
            raise DataIntegrityError(
                f"scene {self.scene_id!r}: ground-truth grid is not "
                f"{len(self.ids_a)} x {len(self.ids_b)}"
            )
        for i, row in enumerate(self.labels):
            for j, label in enumerate(row):
                if label.image_id_a != self.ids_a[i] or label.image_id_b != self.ids_b[j]:
                    raise DataIntegrityError(
                        f"scene {self.scene_id!r}: label at ({i}, {j}) carries ids "
                        f"({label.image_id_a}, {label.image_id_b})"
                    )

    def label(self, image_id_a: str, image_id_b: str) -> GroundTruthLabel:
        try:
            i = self.ids_a.index(image_id_a)
            j = self.ids_b.index(image_id_b)
        except ValueError:
            raise DataIntegrityError(
                f"scene {self.scene_id!r}: no ground-truth cell for "
                f"({image_id_a!r}, {image_id_b!r})"
            ) from None
        return self.labels[i][j]

    def label_at(self, i: int, j: int) -> GroundTruthLabel:
        return self.labels[i][j]

    def iter_labels(self) -> Iterator[GroundTruthLabel]:
        for row in self.labels:
            yield from row

    def total_positives(self) -> int:
        return sum(1 for label in self.iter_labels() if label.is_match)

    def status_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {status.value: 0 for status in LabelStatus}
        for label in self.iter_labels():
            counts[label.status.value] += 1
        return counts


def label_scene(
    manifest: SceneManifest,
    correspondence_lookup: CorrespondenceLookup | None,
    config: GeometryConfig,
    base_seed: int,
) -> GroundTruthMatrix:
    """Label the full A x B grid of a scene.

    ``correspondence_lookup`` maps (image_id_a, image_id_b) to a
    CorrespondenceSet or None; None stands for a missing extraction and
    produces INSUFFICIENT_MATCHES labels.
    """
    ids_a = [r.image_id for r in manifest.subset_a]
    ids_b = [r.image_id for r in manifest.subset_b]
    rows = []
    for ida in ids_a:
        row = []
        for idb in ids_b:
            corr = correspondence_lookup(ida, idb) if correspondence_lookup else None
            row.append(
                label_pair(
                    manifest.pose_of(ida),
                    manifest.pose_of(idb),
                    manifest.intrinsics_of(ida),
                    manifest.intrinsics_of(idb),
                    corr,
                    config,
                    pair_seed(base_seed, manifest.scene_id, ida, idb),
                    image_id_a=ida,
                    image_id_b=idb,
                )
            )
        rows.append(tuple(row))
    return GroundTruthMatrix(
        scene_id=manifest.scene_id,
        fingerprint=config_fingerprint(config, base_seed),
        ids_a=tuple(ids_a),
        ids_b=tuple(ids_b),
        labels=tuple(rows),
    )


# ---------------------------------------------------------------------------
# Cache: JSON-lines, one header line then one label per grid cell (row-major)


def _label_to_json(label: GroundTruthLabel) -> str:
    return json.dumps(
        {
            "a": label.image_id_a,
            "b": label.image_id_b,
            "match": label.is_match,
            "status": label.status.value,
            "phi_view_deg": label.phi_view_deg,
            "d_r_deg": label.d_r_deg,
            "inlier_ratio": label.inlier_ratio,
        },
        sort_keys=True,
        separators=(",", ":"),
    )


def write_ground_truth_cache(matrix: GroundTruthMatrix, path: str | Path) -> None:
    header = json.dumps(
        {
            "kind": CACHE_KIND,
            "version": CACHE_VERSION,
            "scene_id": matrix.scene_id,
            "fingerprint": matrix.fingerprint,
            "ids_a": list(matrix.ids_a),
            "ids_b": list(matrix.ids_b),
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    lines = [header]
    lines.extend(_label_to_json(label) for label in matrix.iter_labels())
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_ground_truth_cache(path: str | Path) -> GroundTruthMatrix:
    path = Path(path)
    try:
        content = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataIntegrityError(f"cannot read ground-truth cache {path}: {exc}") from exc
    lines = content.splitlines()
    if not lines:
        raise DataIntegrityError(f"{path}: empty ground-truth cache")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise DataIntegrityError(f"{path}: bad cache header: {exc}") from exc
    if header.get("kind") != CACHE_KIND or header.get("version") != CACHE_VERSION:
        raise DataIntegrityError(
            f"{path}: not a version-{CACHE_VERSION} ground-truth cache"
        )
    ids_a = tuple(header["ids_a"])
    ids_b = tuple(header["ids_b"])
    expected = len(ids_a) * len(ids_b)
    body = lines[1:]
    if len(body) != expected:
        raise DataIntegrityError(
            f"{path}: cache holds {len(body)} labels, expected {expected}"
        )
    labels: list[GroundTruthLabel] = []
    for lineno, line in enumerate(body, start=2):
        try:
            doc = json.loads(line)
            labels.append(
                GroundTruthLabel(
                    image_id_a=doc["a"],
                    image_id_b=doc["b"],
                    is_match=doc["match"],
                    phi_view_deg=doc["phi_view_deg"],
                    d_r_deg=doc["d_r_deg"],
                    inlier_ratio=doc["inlier_ratio"],
                    status=LabelStatus(doc["status"]),
                )
            )
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise DataIntegrityError(f"{path}, line {lineno}: bad label: {exc}") from exc
    n_b = len(ids_b)
    grid = tuple(
        tuple(labels[i * n_b : (i + 1) * n_b]) for i in range(len(ids_a))
    )
    return GroundTruthMatrix(
        scene_id=header["scene_id"],
        fingerprint=header["fingerprint"],
        ids_a=ids_a,
        ids_b=ids_b,
        labels=grid,
    )


def cache_path_for(cache_dir: str | Path, scene_id: str) -> Path:
    return Path(cache_dir) / f"{safe_file_stem(scene_id)}.jsonl"


def load_or_compute_scene(
    manifest: SceneManifest,
    correspondence_lookup: CorrespondenceLookup | None,
    config: GeometryConfig,
    base_seed: int,
    cache_dir: str | Path,
) -> tuple[GroundTruthMatrix, bool]:
    """Return the scene's ground truth, reusing a cache file when its
    fingerprint matches. The boolean reports whether the cache was hit."""
    path = cache_path_for(cache_dir, manifest.scene_id)
    wanted = config_fingerprint(config, base_seed)
    if path.exists():
        cached = read_ground_truth_cache(path)
        if cached.fingerprint == wanted and cached.scene_id == manifest.scene_id:
            return cached, True
    matrix = label_scene(manifest, correspondence_lookup, config, base_seed)
    write_ground_truth_cache(matrix, path)
    return matrix, False


def directory_correspondence_lookup(
    directory: str | Path, scene_id: str
) -> CorrespondenceLookup:
    """Lookup over ``<dir>/<scene>/<ida>__<idb>.vprc`` files.

    Missing files map to None (labeled INSUFFICIENT_MATCHES), letting a
    partially populated correspondence directory evaluate end to end.
    """
    base = Path(directory) / safe_file_stem(scene_id)

    def lookup(image_id_a: str, image_id_b: str) -> CorrespondenceSet | None:
        path = base / f"{safe_file_stem(image_id_a)}__{safe_file_stem(image_id_b)}.vprc"
        if not path.exists():
            return None
        cset = read_correspondence_file(path)
        if cset.image_id_a != image_id_a or cset.image_id_b != image_id_b:
            raise DataIntegrityError(
                f"{path}: file claims pair ({cset.image_id_a!r}, {cset.image_id_b!r}), "
                f"expected ({image_id_a!r}, {image_id_b!r})"
            )
        return cset

    return lookup


def correspondence_file_path(
    directory: str | Path, scene_id: str, image_id_a: str, image_id_b: str
) -> Path:
    """Canonical location of one pair's correspondence file."""
    return (
        Path(directory)
        / safe_file_stem(scene_id)
        / f"{safe_file_stem(image_id_a)}__{safe_file_stem(image_id_b)}.vprc"
    )
