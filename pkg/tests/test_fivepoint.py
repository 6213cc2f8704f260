"""Minimal five-point essential solver: exactness, candidates, degeneracy."""
import math

import numpy as np
import pytest

from pairbench.errors import DegenerateSampleError
from pairbench.fivepoint import estimate_essential_minimal
from pairbench.geometry import decompose_essential, geodesic_distance
from pairbench.synthetic import random_rotation


def skew(v):
    return np.array(
        [[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]]
    )


def unit_essential(rotation, translation):
    e = skew(translation) @ rotation
    return e / np.linalg.norm(e)


def minimal_problem(rng):
    """Random motion with a unit baseline plus five exact correspondences."""
    while True:
        rotation = random_rotation(rng)
        translation = rng.normal(size=3)
        translation /= np.linalg.norm(translation)
        pts = []
        for _ in range(200):
            xn = rng.uniform(-0.6, 0.6, size=2)
            depth = rng.uniform(2.0, 6.0)
            p1 = np.array([xn[0] * depth, xn[1] * depth, depth])
            p2 = rotation @ p1 + translation
            if p2[2] > 0.1:
                pts.append([xn[0], xn[1], p2[0] / p2[2], p2[1] / p2[2]])
            if len(pts) == 5:
                return rotation, translation, np.array(pts)


def best_candidate_distance(candidates, rotation, translation):
    e_true = unit_essential(rotation, translation)
    best = np.inf
    for cand in candidates:
        e_hat = cand.e / np.linalg.norm(cand.e)
        gap = min(
            np.linalg.norm(e_hat - e_true), np.linalg.norm(e_hat + e_true)
        )
        best = min(best, gap)
    return best


def epipolar_residuals(e, pts):
    q1 = np.column_stack([pts[:, 0], pts[:, 1], np.ones(len(pts))])
    q2 = np.column_stack([pts[:, 2], pts[:, 3], np.ones(len(pts))])
    return np.abs(np.einsum("ni,ij,nj->n", q2, e, q1))


class TestMinimalSolver:
    def test_recovers_random_motions(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            rotation, translation, pts = minimal_problem(rng)
            candidates = estimate_essential_minimal(pts)
            assert 1 <= len(candidates) <= 10
            assert best_candidate_distance(candidates, rotation, translation) < 1e-8

    def test_candidates_satisfy_input_constraints(self):
        rng = np.random.default_rng(32)
        for _ in range(20):
            _, _, pts = minimal_problem(rng)
            for cand in estimate_essential_minimal(pts):
                assert np.max(epipolar_residuals(cand.e, pts)) < 1e-8
                assert np.linalg.norm(cand.e) == pytest.approx(1.0, abs=1e-12)

    def test_rotation_recoverable_through_decomposition(self):
        rng = np.random.default_rng(33)
        hits = 0
        for _ in range(25):
            rotation, translation, pts = minimal_problem(rng)
            candidates = estimate_essential_minimal(pts)
            for cand in candidates:
                try:
                    recovered = decompose_essential(cand, pts)
                except Exception:
                    continue
                if geodesic_distance(recovered.rotation, rotation) < 1e-6:
                    hits += 1
                    break
        assert hits == 25

    def test_known_y_rotation(self):
        deg = math.radians(20.0)
        c, s = math.cos(deg), math.sin(deg)
        rotation = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
        translation = np.array([0.0, 0.0, 1.0])
        rng = np.random.default_rng(34)
        pts = []
        while len(pts) < 5:
            xn = rng.uniform(-0.5, 0.5, size=2)
            depth = rng.uniform(3.0, 6.0)
            p1 = np.array([xn[0] * depth, xn[1] * depth, depth])
            p2 = rotation @ p1 + translation
            if p2[2] > 0.1:
                pts.append([xn[0], xn[1], p2[0] / p2[2], p2[1] / p2[2]])
        pts = np.array(pts)
        found = False
        for cand in estimate_essential_minimal(pts):
            try:
                recovered = decompose_essential(cand, pts)
            except Exception:
                continue
            if geodesic_distance(recovered.rotation, rotation) < 1e-6:
                found = True
        assert found

    def test_deterministic(self):
        rng = np.random.default_rng(35)
        _, _, pts = minimal_problem(rng)
        first = estimate_essential_minimal(pts)
        second = estimate_essential_minimal(pts)
        assert len(first) == len(second)
        for e1, e2 in zip(first, second):
            assert np.array_equal(e1.e, e2.e)


class TestDegenerateInputs:
    def test_wrong_shape(self):
        with pytest.raises(DegenerateSampleError, match="5x4"):
            estimate_essential_minimal(np.zeros((4, 4)))

    def test_repeated_point(self):
        rng = np.random.default_rng(36)
        _, _, pts = minimal_problem(rng)
        pts[1] = pts[0]
        with pytest.raises(DegenerateSampleError):
            estimate_essential_minimal(pts)

    def test_all_identical_points(self):
        pts = np.tile([0.1, 0.2, 0.3, 0.4], (5, 1))
        with pytest.raises(DegenerateSampleError):
            estimate_essential_minimal(pts)
