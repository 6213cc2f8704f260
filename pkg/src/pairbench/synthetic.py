"""Synthetic scene construction for tests and demos.

Everything here builds inputs whose ground truth is known by construction:
camera pairs with an exact relative pose and essential matrix, pixel
correspondences projected from shared 3D points (optionally noised and
contaminated with outliers), rings of cameras with analytically known
view-angle overlap, and descriptors correlated with viewing direction.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._io import atomic_write_text, safe_file_stem
from .codecs import CorrespondenceSet, DescriptorSet
from .scene import CameraIntrinsics, ImageRecord, Pose, SceneManifest


def rotation_about(axis: np.ndarray, angle_rad: float) -> np.ndarray:
    """Rodrigues rotation about an arbitrary axis."""
    unit = np.asarray(axis, dtype=np.float64)
    unit = unit / np.linalg.norm(unit)
    k = skew(unit)
    return np.eye(3) + math.sin(angle_rad) * k + (1.0 - math.cos(angle_rad)) * (k @ k)


def rot_x(deg: float) -> np.ndarray:
    return rotation_about(np.array([1.0, 0.0, 0.0]), math.radians(deg))


def rot_y(deg: float) -> np.ndarray:
    return rotation_about(np.array([0.0, 1.0, 0.0]), math.radians(deg))


def rot_z(deg: float) -> np.ndarray:
    return rotation_about(np.array([0.0, 0.0, 1.0]), math.radians(deg))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation via a normalized Gaussian quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def skew(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    return np.array(
        [
            [0.0, -t[2], t[1]],
            [t[2], 0.0, -t[0]],
            [-t[1], t[0], 0.0],
        ]
    )


def essential_from_motion(rotation: np.ndarray, translation: np.ndarray) -> np.ndarray:
    """The essential matrix [t]x R of an a-to-b camera motion, unit Frobenius."""
    e = skew(translation) @ rotation
    return e / np.linalg.norm(e)


def look_at_rotation(position: np.ndarray, target: np.ndarray, up=(0.0, 0.0, 1.0)) -> np.ndarray:
    """World-to-camera rotation for a camera at ``position`` viewing ``target``.

    The rows of the result are the camera axes in world coordinates; the
    viewing direction convention R^T (0,0,-1) then points from the camera
    toward the target.
    """
    forward = np.asarray(target, dtype=np.float64) - np.asarray(position, dtype=np.float64)
    forward = forward / np.linalg.norm(forward)
    z_cam = -forward
    x_cam = np.cross(np.asarray(up, dtype=np.float64), z_cam)
    norm = np.linalg.norm(x_cam)
    if norm < 1e-12:
        raise ValueError("viewing direction is parallel to the up vector")
    x_cam = x_cam / norm
    y_cam = np.cross(z_cam, x_cam)
    return np.stack([x_cam, y_cam, z_cam])


def pose_at(position: np.ndarray, rotation: np.ndarray) -> Pose:
    """World-to-camera Pose of a camera at a world position with rotation rows."""
    position = np.asarray(position, dtype=np.float64)
    return Pose(rotation=rotation, translation=-rotation @ position)


# ---------------------------------------------------------------------------
# Relative two-view problems


@dataclass(frozen=True)
class RelativeScene:
    """A two-camera problem with camera a at the identity pose.

    ``points`` are normalized correspondences (x_a, y_a, x_b, y_b);
    ``inlier_mask`` marks rows that were not replaced by outliers.
    """

    rotation: np.ndarray
    translation: np.ndarray
    points: np.ndarray
    inlier_mask: np.ndarray

    @property
    def essential(self) -> np.ndarray:
        return essential_from_motion(self.rotation, self.translation)


def make_relative_scene(
    rng: np.random.Generator,
    n_points: int = 5,
    rotation: np.ndarray | None = None,
    translation: np.ndarray | None = None,
    max_rotation_deg: float = 30.0,
    half_fov: float = 0.6,
    depth_range: tuple[float, float] = (3.0, 8.0),
    noise_px: float = 0.0,
    outlier_fraction: float = 0.0,
    fx: float = 700.0,
) -> RelativeScene:
    """Generate correspondences between camera a at identity and camera b.

    Points are sampled in camera a's frustum and rejected unless they also
    project in front of (and roughly inside the frustum of) camera b.
    Pixel-scale Gaussian noise of ``noise_px`` is applied to the b-side
    observations; ``outlier_fraction`` of the rows have their b-side
    replaced by uniform draws over the viewing window.
    """
    if rotation is None:
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        angle = math.radians(rng.uniform(2.0, max_rotation_deg))
        rotation = rotation_about(axis, angle)
    if translation is None:
        translation = rng.normal(size=3)
        translation = translation / np.linalg.norm(translation)
    translation = np.asarray(translation, dtype=np.float64)

    rows = []
    attempts = 0
    max_attempts = 200 * max(n_points, 1)
    while len(rows) < n_points:
        attempts += 1
        if attempts > max_attempts:
            raise RuntimeError(
                "could not sample enough mutually visible points; "
                "the requested camera motion leaves almost no shared frustum"
            )
        xn = rng.uniform(-half_fov, half_fov, size=2)
        depth = rng.uniform(*depth_range)
        point = np.array([xn[0] * depth, xn[1] * depth, depth])
        in_b = rotation @ point + translation
        if in_b[2] <= 0.1:
            continue
        xb, yb = in_b[0] / in_b[2], in_b[1] / in_b[2]
        if abs(xb) > 1.2 * half_fov or abs(yb) > 1.2 * half_fov:
            continue
        rows.append([xn[0], xn[1], xb, yb])
    points = np.array(rows, dtype=np.float64)

    inlier_mask = np.ones(n_points, dtype=bool)
    n_outliers = int(round(outlier_fraction * n_points))
    if n_outliers:
        outlier_rows = rng.choice(n_points, size=n_outliers, replace=False)
        points[outlier_rows, 2:] = rng.uniform(-half_fov, half_fov, size=(n_outliers, 2))
        inlier_mask[outlier_rows] = False
    if noise_px > 0.0:
        points[:, 2:] += rng.normal(0.0, noise_px / fx, size=(n_points, 2))
    return RelativeScene(
        rotation=np.asarray(rotation, dtype=np.float64),
        translation=translation,
        points=points,
        inlier_mask=inlier_mask,
    )


def pixel_correspondences(
    image_id_a: str,
    image_id_b: str,
    normalized_points: np.ndarray,
    k_a: CameraIntrinsics,
    k_b: CameraIntrinsics,
) -> CorrespondenceSet:
    """Lift normalized correspondences back into pixel coordinates."""
    pts = np.asarray(normalized_points, dtype=np.float64).copy()
    pts[:, 0] = pts[:, 0] * k_a.fx + k_a.cx
    pts[:, 1] = pts[:, 1] * k_a.fy + k_a.cy
    pts[:, 2] = pts[:, 2] * k_b.fx + k_b.cx
    pts[:, 3] = pts[:, 3] * k_b.fy + k_b.cy
    return CorrespondenceSet(
        image_id_a=image_id_a, image_id_b=image_id_b, points=pts.astype(np.float32)
    )


def correspondences_for_pose_pair(
    rng: np.random.Generator,
    pose_a: Pose,
    pose_b: Pose,
    k_a: CameraIntrinsics,
    k_b: CameraIntrinsics,
    image_id_a: str,
    image_id_b: str,
    n_points: int = 40,
    half_fov: float = 0.6,
    noise_px: float = 0.0,
) -> CorrespondenceSet:
    """Project shared 3D points into an arbitrary posed camera pair.

    World points are sampled inside camera a's frustum at depths comparable
    to the camera separation, then kept only when in front of camera b.
    """
    from .geometry import relative_rotation, relative_translation

    rotation = relative_rotation(pose_a, pose_b)
    translation = relative_translation(pose_a, pose_b)
    baseline = float(np.linalg.norm(translation))
    # Depth scale: distance to the scene content should dominate the baseline.
    scale = max(baseline, 1e-6)
    depth_range = (2.0 * scale, 6.0 * scale)
    if baseline < 1e-9:
        depth_range = (2.0, 6.0)

    rows = []
    attempts = 0
    max_attempts = 500 * max(n_points, 1)
    while len(rows) < n_points:
        attempts += 1
        if attempts > max_attempts:
            break
        xn = rng.uniform(-half_fov, half_fov, size=2)
        depth = rng.uniform(*depth_range)
        in_a = np.array([xn[0] * depth, xn[1] * depth, depth])
        in_b = rotation @ in_a + translation
        if in_b[2] <= 1e-3 * scale:
            continue
        rows.append([xn[0], xn[1], in_b[0] / in_b[2], in_b[1] / in_b[2]])
    if not rows:
        points = np.zeros((0, 4))
    else:
        points = np.array(rows)
        if noise_px > 0.0:
            points[:, 2:] += rng.normal(0.0, noise_px / k_b.fx, size=(len(points), 2))
    return pixel_correspondences(image_id_a, image_id_b, points, k_a, k_b)


# ---------------------------------------------------------------------------
# Ring scenes with analytic overlap


@dataclass(frozen=True)
class RingScene:
    """A manifest whose two subsets sit on arcs of a circle looking at the
    center, so the view angle of a pair equals the angular separation of
    the camera positions (known analytically)."""

    manifest: SceneManifest
    angles_a: np.ndarray
    angles_b: np.ndarray

    def view_angle_deg(self, i: int, j: int) -> float:
        delta = abs(self.angles_a[i] - self.angles_b[j]) % 360.0
        return min(delta, 360.0 - delta)


def make_ring_scene(
    scene_id: str = "ring",
    n_per_subset: int = 40,
    arc_a: tuple[float, float] = (0.0, 210.0),
    arc_b: tuple[float, float] = (142.5, 352.5),
    radius: float = 10.0,
    intrinsics: CameraIntrinsics | None = None,
    dataset_tag: str = "CUSTOM",
) -> RingScene:
    """Cameras on two arcs of one circle, all aimed at the center.

    View directions are the inward radials, so the pairwise view angle is
    exactly the angular separation along the circle; overlap under any
    view-angle threshold is known in closed form.

    The default arcs are offset by half a camera step so that no A camera
    coincides with a B camera (a zero baseline would make the essential
    matrix undefined) and no pair sits closer than 2.5 degrees to the
    default 75-degree view threshold.
    """
    if intrinsics is None:
        intrinsics = CameraIntrinsics(fx=700.0, fy=700.0, cx=640.0, cy=360.0)
    angles_a = np.linspace(arc_a[0], arc_a[1], n_per_subset)
    angles_b = np.linspace(arc_b[0], arc_b[1], n_per_subset)

    records = []
    poses = {}
    k_table = {}
    center = np.zeros(3)
    for subset, angles in (("A", angles_a), ("B", angles_b)):
        for idx, theta in enumerate(angles):
            image_id = f"{subset.lower()}{idx:03d}"
            rad = math.radians(theta)
            position = np.array([radius * math.cos(rad), radius * math.sin(rad), 0.0])
            rotation = look_at_rotation(position, center)
            records.append(
                ImageRecord(
                    image_id=image_id,
                    file_path=f"{image_id}.png",
                    subset=subset,
                    width=1280,
                    height=720,
                )
            )
            poses[image_id] = pose_at(position, rotation)
            k_table[image_id] = intrinsics
    manifest = SceneManifest(
        scene_id=scene_id,
        dataset_tag=dataset_tag,
        images=tuple(records),
        poses=poses,
        intrinsics=k_table,
        provenance={"kind": "synthetic", "generator": "ring"},
    )
    return RingScene(manifest=manifest, angles_a=angles_a, angles_b=angles_b)


def rotation_to_quaternion(rotation: np.ndarray) -> np.ndarray:
    """Unit quaternion (w, x, y, z) of a rotation matrix, w >= 0.

    Branches on the largest diagonal element for numerical stability near
    180-degree rotations.
    """
    r = np.asarray(rotation, dtype=np.float64)
    trace = r[0, 0] + r[1, 1] + r[2, 2]
    if trace > 0.0:
        s = math.sqrt(trace + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s]
        )
    elif r[0, 0] >= r[1, 1] and r[0, 0] >= r[2, 2]:
        s = math.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2.0
        q = np.array(
            [(r[2, 1] - r[1, 2]) / s, 0.25 * s, (r[0, 1] + r[1, 0]) / s, (r[0, 2] + r[2, 0]) / s]
        )
    elif r[1, 1] >= r[2, 2]:
        s = math.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2]) * 2.0
        q = np.array(
            [(r[0, 2] - r[2, 0]) / s, (r[0, 1] + r[1, 0]) / s, 0.25 * s, (r[1, 2] + r[2, 1]) / s]
        )
    else:
        s = math.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1]) * 2.0
        q = np.array(
            [(r[1, 0] - r[0, 1]) / s, (r[0, 2] + r[2, 0]) / s, (r[1, 2] + r[2, 1]) / s, 0.25 * s]
        )
    q = q / np.linalg.norm(q)
    return -q if q[0] < 0.0 else q


def export_scene_colmap(manifest: SceneManifest, directory: str | Path) -> Path:
    """Write a scene out as a manifest plus COLMAP-style text pose files.

    Produces ``cameras.txt``, ``images.txt``, and ``<scene>.json`` under
    ``directory`` so that synthetic scenes can drive the whole pipeline
    through the same file-based entry points as real reconstructions.
    Returns the manifest path.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stem = safe_file_stem(manifest.scene_id)

    camera_ids: dict[tuple, int] = {}
    camera_lines = ["# camera_id model width height params"]
    image_lines = ["# image_id qw qx qy qz tx ty tz camera_id name"]
    for index, record in enumerate(manifest.images, start=1):
        k = manifest.intrinsics_of(record.image_id)
        key = (k.fx, k.fy, k.cx, k.cy, record.width, record.height)
        if key not in camera_ids:
            camera_ids[key] = len(camera_ids) + 1
            params = " ".join(repr(float(v)) for v in (k.fx, k.fy, k.cx, k.cy))
            camera_lines.append(
                f"{camera_ids[key]} PINHOLE {record.width} {record.height} {params}"
            )
        pose = manifest.pose_of(record.image_id)
        q = rotation_to_quaternion(pose.rotation)
        t = pose.translation
        fields = [str(index)]
        fields += [repr(float(v)) for v in (*q, *t)]
        fields += [str(camera_ids[key]), record.file_path]
        image_lines.append(" ".join(fields))
        image_lines.append("")  # the 2D-point line; empty, no triangulated points

    atomic_write_text(directory / f"{stem}_cameras.txt", "\n".join(camera_lines) + "\n")
    atomic_write_text(directory / f"{stem}_images.txt", "\n".join(image_lines) + "\n")

    doc = {
        "scene_id": manifest.scene_id,
        "dataset_tag": manifest.dataset_tag,
        "pose_source": {
            "kind": "colmap_text",
            "images_path": f"{stem}_images.txt",
            "cameras_path": f"{stem}_cameras.txt",
        },
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
    manifest_path = directory / f"{stem}.json"
    atomic_write_text(manifest_path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return manifest_path


def view_direction_descriptors(
    manifest: SceneManifest,
    subset: str,
    rng: np.random.Generator,
    method_tag: str = "viewdir",
    dimension: int = 3,
    noise: float = 0.01,
) -> DescriptorSet:
    """Descriptors built from each camera's viewing direction plus noise.

    Cosine similarity of two such descriptors is monotone in the pairwise
    view angle (up to the noise), which makes retrieval quality analytically
    predictable.
    """
    from .geometry import view_direction

    records = [r for r in manifest.images if r.subset == subset]
    data = np.zeros((len(records), dimension), dtype=np.float64)
    for row, record in enumerate(records):
        direction = view_direction(manifest.pose_of(record.image_id))
        data[row, :3] = direction
        data[row] += noise * rng.normal(size=dimension)
    return DescriptorSet(
        subset=subset,
        image_ids=tuple(r.image_id for r in records),
        data=data.astype(np.float32),
        method_tag=method_tag,
    )
