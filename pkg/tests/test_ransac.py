"""Robust essential-matrix estimation: accuracy, masks, determinism, statuses."""
import numpy as np
import pytest

from pairbench.geometry import (
    GeometryConfig,
    decompose_essential,
    geodesic_distance,
    normalize_correspondences,
)
from pairbench.ransac import RansacStatus, ransac_essential
from pairbench.scene import CameraIntrinsics
from pairbench.synthetic import random_rotation

K = CameraIntrinsics(fx=700.0, fy=700.0, cx=320.0, cy=240.0)


def pixel_pairs(rng, rotation, translation, n, noise_px=0.0):
    """Exact correspondences of the motion (rotation, translation), in pixels."""
    rows = []
    while len(rows) < n:
        xn = rng.uniform(-0.5, 0.5, size=2)
        depth = rng.uniform(2.0, 6.0)
        p1 = np.array([xn[0] * depth, xn[1] * depth, depth])
        p2 = rotation @ p1 + translation
        if p2[2] < 0.1:
            continue
        rows.append(
            [
                xn[0] * K.fx + K.cx,
                xn[1] * K.fy + K.cy,
                p2[0] / p2[2] * K.fx + K.cx,
                p2[1] / p2[2] * K.fy + K.cy,
            ]
        )
    pts = np.array(rows)
    if noise_px > 0.0:
        pts[:, 2:] += rng.normal(0.0, noise_px, size=(n, 2))
    return pts


def overlap_motion(rng):
    while True:
        rotation = random_rotation(rng)
        translation = rng.normal(size=3)
        translation /= np.linalg.norm(translation)
        probe = rotation @ np.array([0.0, 0.0, 4.0]) + translation
        if probe[2] > 0.5:
            return rotation, translation


def recovered_rotation(result, pixels):
    normalized = normalize_correspondences(pixels, K, K)
    pose = decompose_essential(result.essential, normalized[result.inlier_mask])
    return pose.rotation


class TestCleanData:
    def test_all_inliers_and_exact_rotation(self):
        rng = np.random.default_rng(41)
        for _ in range(5):
            rotation, translation, = overlap_motion(rng)
            pixels = pixel_pairs(rng, rotation, translation, 100)
            result = ransac_essential(pixels, K, K, GeometryConfig(), seed=7)
            assert result.status is RansacStatus.OK and result.ok
            assert result.inlier_ratio == 1.0
            assert result.inlier_mask.all()
            got = recovered_rotation(result, pixels)
            assert geodesic_distance(got, rotation) < 1e-6

    def test_adaptive_bound_stops_after_one_clean_iteration(self):
        rng = np.random.default_rng(42)
        rotation, translation = overlap_motion(rng)
        pixels = pixel_pairs(rng, rotation, translation, 50)
        result = ransac_essential(pixels, K, K, GeometryConfig(), seed=3)
        assert result.iterations_run == 1


class TestOutliers:
    def contaminated(self, rng, n=100, n_out=30):
        rotation, translation = overlap_motion(rng)
        pixels = pixel_pairs(rng, rotation, translation, n)
        pixels[n - n_out:, 2] = rng.uniform(0.0, 2.0 * K.cx, size=n_out)
        pixels[n - n_out:, 3] = rng.uniform(0.0, 2.0 * K.cy, size=n_out)
        return rotation, pixels, n - n_out

    def test_mask_identifies_true_inliers(self):
        rng = np.random.default_rng(43)
        rotation, pixels, n_in = self.contaminated(rng)
        result = ransac_essential(pixels, K, K, GeometryConfig(), seed=11)
        assert result.ok
        assert result.inlier_mask[:n_in].all()
        # an outlier may land inside the Sampson band by chance, but rarely
        assert int(result.inlier_mask[n_in:].sum()) <= 2
        assert geodesic_distance(recovered_rotation(result, pixels), rotation) < 1e-6

    def test_rotation_under_pixel_noise(self):
        rng = np.random.default_rng(44)
        config = GeometryConfig(tau_in=1.0)
        hits = 0
        for trial in range(12):
            rotation, translation = overlap_motion(rng)
            pixels = pixel_pairs(rng, rotation, translation, 100, noise_px=1.0)
            pixels[70:, 2] = rng.uniform(0.0, 2.0 * K.cx, size=30)
            pixels[70:, 3] = rng.uniform(0.0, 2.0 * K.cy, size=30)
            result = ransac_essential(pixels, K, K, config, seed=trial)
            if not result.ok:
                continue
            gap = geodesic_distance(recovered_rotation(result, pixels), rotation)
            if np.degrees(gap) < 1.0:
                hits += 1
        assert hits >= 10


class TestDeterminism:
    def test_bitwise_reproducible(self):
        rng = np.random.default_rng(45)
        rotation, translation = overlap_motion(rng)
        pixels = pixel_pairs(rng, rotation, translation, 60, noise_px=0.5)
        pixels[40:, 2:] = rng.uniform(0.0, 600.0, size=(20, 2))
        config = GeometryConfig(tau_in=1.0)
        first = ransac_essential(pixels, K, K, config, seed=99)
        second = ransac_essential(pixels, K, K, config, seed=99)
        assert first.status == second.status
        assert first.iterations_run == second.iterations_run
        assert first.inlier_ratio == second.inlier_ratio
        assert np.array_equal(first.essential.e, second.essential.e)
        assert np.array_equal(first.inlier_mask, second.inlier_mask)

    def test_seed_recorded(self):
        rng = np.random.default_rng(46)
        rotation, translation = overlap_motion(rng)
        pixels = pixel_pairs(rng, rotation, translation, 30)
        result = ransac_essential(pixels, K, K, GeometryConfig(), seed=1234)
        assert result.seed == 1234


class TestFailureStatuses:
    def test_insufficient_matches(self):
        rng = np.random.default_rng(47)
        rotation, translation = overlap_motion(rng)
        pixels = pixel_pairs(rng, rotation, translation, 14)  # below the 15 floor
        result = ransac_essential(pixels, K, K, GeometryConfig(), seed=1)
        assert result.status is RansacStatus.INSUFFICIENT_MATCHES
        assert not result.ok
        assert result.essential is None and result.inlier_mask is None
        assert result.inlier_ratio == 0.0
        assert result.iterations_run == 0

    def test_estimation_failed_when_every_sample_degenerate(self):
        pixels = np.tile([100.0, 120.0, 300.0, 310.0], (20, 1))
        config = GeometryConfig(ransac_max_iters=40)
        result = ransac_essential(pixels, K, K, config, seed=5)
        assert result.status is RansacStatus.ESTIMATION_FAILED
        assert result.iterations_run == 40
        assert result.essential is None

    def test_custom_min_correspondences(self):
        rng = np.random.default_rng(48)
        rotation, translation = overlap_motion(rng)
        pixels = pixel_pairs(rng, rotation, translation, 10)
        config = GeometryConfig(min_correspondences=5)
        result = ransac_essential(pixels, K, K, config, seed=2)
        assert result.ok
