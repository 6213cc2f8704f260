"""Pose-file parsers: COLMAP text models and KITTI odometry sequences.

Both parsers hand back world-to-camera poses. COLMAP stores that
convention natively; KITTI stores camera-to-world matrices, which are
inverted here at the boundary. Rotations are re-projected onto SO(3)
when within a parse tolerance so the strict Pose invariants hold exactly.
"""
from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import ParseError, PoseValidityError, UnsupportedCameraModelError
from .scene import CameraIntrinsics, Pose

# How far a parsed rotation may sit from the orthonormal manifold before
# it is rejected instead of projected.
PARSE_ROTATION_TOL = 1e-4

_SUPPORTED_MODELS = ("PINHOLE", "SIMPLE_PINHOLE")


def quaternion_to_rotation(qw: float, qx: float, qy: float, qz: float) -> np.ndarray:
    """Convert a (w, x, y, z) quaternion to a rotation matrix.

    The quaternion is normalized first; a near-zero norm is rejected.
    """
    q = np.array([qw, qx, qy, qz], dtype=np.float64)
    norm = np.linalg.norm(q)
    if not np.isfinite(norm) or norm < 1e-12:
        raise PoseValidityError(f"quaternion norm {norm:.3e} too small to normalize")
    w, x, y, z = q / norm
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def project_to_so3(matrix: np.ndarray, tol: float = PARSE_ROTATION_TOL) -> np.ndarray:
    """Snap a near-rotation onto SO(3), rejecting matrices beyond ``tol``.

    The projection is the orthogonal Procrustes solution; the deviation is
    measured as the Frobenius distance between input and projection.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise PoseValidityError("rotation block must be a finite 3x3 matrix")
    u, _, vt = np.linalg.svd(m)
    r = u @ np.diag([1.0, 1.0, np.linalg.det(u @ vt)]) @ vt
    deviation = float(np.linalg.norm(m - r))
    if deviation > tol:
        raise PoseValidityError(
            f"rotation deviates from orthonormal by {deviation:.3e} (tolerance {tol:.0e})"
        )
    return r


def _floats(tokens: Iterable[str], source: str, line: int) -> list[float]:
    out = []
    for tok in tokens:
        try:
            out.append(float(tok))
        except ValueError:
            raise ParseError(source, line, f"expected a number, got {tok!r}") from None
    return out


def _parse_colmap_cameras(text: str, source: str) -> dict:
    cameras: dict[int, CameraIntrinsics] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) < 4:
            raise ParseError(source, lineno, "camera line has fewer than 4 fields")
        try:
            camera_id = int(tokens[0])
        except ValueError:
            raise ParseError(source, lineno, f"bad camera id {tokens[0]!r}") from None
        model = tokens[1]
        params = _floats(tokens[4:], source, lineno)
        if model == "PINHOLE":
            if len(params) != 4:
                raise ParseError(source, lineno, "PINHOLE expects 4 parameters")
            fx, fy, cx, cy = params
        elif model == "SIMPLE_PINHOLE":
            if len(params) != 3:
                raise ParseError(source, lineno, "SIMPLE_PINHOLE expects 3 parameters")
            f, cx, cy = params
            fx = fy = f
        else:
            raise UnsupportedCameraModelError(
                f"{source}, line {lineno}: camera model {model!r} is not supported "
                f"(supported: {', '.join(_SUPPORTED_MODELS)})"
            )
        cameras[camera_id] = CameraIntrinsics(fx=fx, fy=fy, cx=cx, cy=cy)
    return cameras


def parse_colmap_poses(
    images_text: str,
    cameras_text: str,
    images_name: str = "images.txt",
    cameras_name: str = "cameras.txt",
) -> dict:
    """Parse a COLMAP text model into ``{image_name: (Pose, CameraIntrinsics)}``.

    Args:
        images_text: content of images.txt. Each image contributes two
            lines, the second listing 2D points; that line is consumed and
            ignored (it may be empty).
        cameras_text: content of cameras.txt.
        images_name, cameras_name: labels used in error messages.

    Only PINHOLE and SIMPLE_PINHOLE camera models are accepted.
    """
    cameras = _parse_colmap_cameras(cameras_text, cameras_name)

    table: dict[str, tuple] = {}
    expecting_points = False
    for lineno, raw in enumerate(images_text.splitlines(), start=1):
        if expecting_points:
            # The 2D-point line belongs to the previous image; it may be blank.
            expecting_points = False
            continue
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) < 10:
            raise ParseError(images_name, lineno, "image line has fewer than 10 fields")
        qw, qx, qy, qz, tx, ty, tz = _floats(tokens[1:8], images_name, lineno)
        try:
            camera_id = int(tokens[8])
        except ValueError:
            raise ParseError(images_name, lineno, f"bad camera id {tokens[8]!r}") from None
        name = " ".join(tokens[9:])
        if camera_id not in cameras:
            raise ParseError(
                images_name, lineno, f"image {name!r} references unknown camera {camera_id}"
            )
        if name in table:
            raise ParseError(images_name, lineno, f"duplicate image name {name!r}")
        rotation = project_to_so3(quaternion_to_rotation(qw, qx, qy, qz))
        table[name] = (
            Pose(rotation=rotation, translation=np.array([tx, ty, tz])),
            cameras[camera_id],
        )
        expecting_points = True
    return table


def _parse_kitti_calib(text: str, source: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line.startswith("P0:"):
            continue
        values = _floats(line.split()[1:], source, lineno)
        if len(values) != 12:
            raise ParseError(source, lineno, f"P0 row has {len(values)} values, expected 12")
        # Row-major 3x4 projection: fx and fy on the diagonal, principal
        # point in the last column of the upper-left 3x3 block.
        return CameraIntrinsics(fx=values[0], fy=values[5], cx=values[2], cy=values[6])
    raise ParseError(source, None, "no P0 row found")


def parse_kitti_poses(
    poses_text: str,
    calib_text: str,
    poses_name: str = "poses.txt",
    calib_name: str = "calib.txt",
) -> dict:
    """Parse KITTI odometry files into ``{frame_index: (Pose, CameraIntrinsics)}``.

    Args:
        poses_text: content of poses.txt; line i holds the 12 row-major
            values of the 3x4 camera-to-world matrix of frame i.
        calib_text: content of calib.txt; intrinsics come from the P0 row.

    The camera-to-world input is inverted so the returned Poses follow the
    world-to-camera convention used everywhere else.
    """
    intrinsics = _parse_kitti_calib(calib_text, calib_name)
    table: dict[int, tuple] = {}
    frame = 0
    for lineno, raw in enumerate(poses_text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        values = _floats(line.split(), poses_name, lineno)
        if len(values) != 12:
            raise ParseError(
                poses_name, lineno, f"pose line has {len(values)} values, expected 12"
            )
        mat = np.array(values, dtype=np.float64).reshape(3, 4)
        r_cw = project_to_so3(mat[:, :3])
        t_cw = mat[:, 3]
        # Invert the rigid transform: world-to-camera R = R_cw^T, t = -R_cw^T t_cw.
        rotation = r_cw.T
        table[frame] = (
            Pose(rotation=rotation, translation=-rotation @ t_cw),
            intrinsics,
        )
        frame += 1
    return table
