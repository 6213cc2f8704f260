"""Retrieval metrics against hand-worked values and brute-force loops."""
import numpy as np
import pytest

from pairbench.errors import ConfigurationError, DataIntegrityError
from pairbench.groundtruth import GroundTruthLabel, GroundTruthMatrix, LabelStatus
from pairbench.metrics import (
    DEFAULT_K_VALUES,
    SceneMetrics,
    aggregate_dataset,
    average_precision_at_k,
    compute_scene_metrics,
    precision_at_k,
    recall_at_k,
    relevance_vector,
)
from pairbench.retrieval import PairRanking


def naive_precision(rel, k):
    return sum(rel[:k]) / k


def naive_recall(rel, k):
    return 1.0 if sum(rel[:k]) > 0 else 0.0


def naive_ap(rel, k, total_positives):
    if total_positives == 0:
        return None
    score = 0.0
    hits = 0
    for r in range(k):
        if rel[r]:
            hits += 1
            score += hits / (r + 1)
    return score / min(k, total_positives)


class TestPointMetrics:
    def test_precision_example(self):
        assert precision_at_k([1, 0, 1, 0, 1], 5) == pytest.approx(0.6, abs=1e-15)

    def test_precision_at_one(self):
        assert precision_at_k([1, 0], 1) == 1.0
        assert precision_at_k([0, 1], 1) == 0.0

    def test_recall_binary(self):
        assert recall_at_k([0, 0, 1], 3) == 1.0
        assert recall_at_k([0, 0, 0], 3) == 0.0

    def test_ap_example(self):
        got = average_precision_at_k([1, 0, 1, 0, 0], 5, total_positives=4)
        # hits at ranks 1 and 3: (1/1 + 2/3) / min(5, 4)
        assert got == pytest.approx((1.0 + 2.0 / 3.0) / 4.0, abs=1e-15)
        assert got == pytest.approx(0.4166666666666667, abs=1e-12)

    def test_ap_undefined_without_positives(self):
        assert average_precision_at_k([0, 0, 0], 3, total_positives=0) is None

    def test_ap_perfect_prefix(self):
        assert average_precision_at_k([1, 1, 1], 3, total_positives=3) == 1.0

    def test_ap_at_one_equals_recall_at_one(self):
        rng = np.random.default_rng(80)
        for _ in range(200):
            k_max = int(rng.integers(1, 12))
            rel = (rng.random(k_max) < 0.4).astype(int)
            tp = int(rel.sum()) + int(rng.integers(0, 5))
            if tp == 0:
                continue
            ap1 = average_precision_at_k(rel, 1, tp)
            assert ap1 == recall_at_k(rel, 1)

    def test_matches_naive_loops(self):
        rng = np.random.default_rng(81)
        for _ in range(500):
            k_max = int(rng.integers(1, 20))
            rel = (rng.random(k_max) < 0.3).astype(int)
            extra = int(rng.integers(0, 10))
            tp = int(rel.sum()) + extra
            for k in range(1, k_max + 1):
                assert precision_at_k(rel, k) == pytest.approx(
                    naive_precision(rel, k), abs=1e-12
                )
                assert recall_at_k(rel, k) == naive_recall(rel, k)
                want = naive_ap(rel, k, tp)
                got = average_precision_at_k(rel, k, tp)
                if want is None:
                    assert got is None
                else:
                    assert got == pytest.approx(want, abs=1e-12)

    def test_recall_monotone_in_k(self):
        rng = np.random.default_rng(82)
        for _ in range(100):
            rel = (rng.random(15) < 0.2).astype(int)
            values = [recall_at_k(rel, k) for k in range(1, 16)]
            assert values == sorted(values)

    def test_short_vector_rejected(self):
        with pytest.raises(ConfigurationError, match="shorter"):
            precision_at_k([1, 0], 5)
        with pytest.raises(ConfigurationError, match="shorter"):
            average_precision_at_k([1], 2, 1)


def grid_from_bools(match_grid, scene_id="s"):
    """GroundTruthMatrix with the given boolean layout; non-matches FAIL_VIEW."""
    match_grid = np.asarray(match_grid, dtype=bool)
    n_a, n_b = match_grid.shape
    ids_a = tuple(f"a{i}" for i in range(n_a))
    ids_b = tuple(f"b{j}" for j in range(n_b))
    labels = []
    for i in range(n_a):
        row = []
        for j in range(n_b):
            m = bool(match_grid[i, j])
            row.append(
                GroundTruthLabel(
                    image_id_a=ids_a[i],
                    image_id_b=ids_b[j],
                    is_match=m,
                    phi_view_deg=10.0 if m else 120.0,
                    d_r_deg=0.5 if m else None,
                    inlier_ratio=1.0 if m else None,
                    status=LabelStatus.PASS if m else LabelStatus.FAIL_VIEW,
                )
            )
        labels.append(tuple(row))
    return GroundTruthMatrix(
        scene_id=scene_id,
        fingerprint="0" * 64,
        ids_a=ids_a,
        ids_b=ids_b,
        labels=tuple(labels),
    )


def ranking_over(grid, order, scene_id="s", elapsed=0.0):
    """Ranking visiting the given (i, j) cells with descending similarities."""
    sims = np.linspace(0.9, 0.1, num=len(order))
    entries = tuple((i, j, float(s)) for (i, j), s in zip(order, sims))
    return PairRanking(
        scene_id=scene_id, method_tag="m", entries=entries, elapsed_seconds=elapsed
    )


class TestRelevanceVector:
    def test_reads_grid_in_rank_order(self):
        gt = grid_from_bools([[True, False], [False, True]])
        ranking = ranking_over(gt, [(0, 0), (0, 1), (1, 1), (1, 0)])
        assert list(relevance_vector(ranking, gt, 4)) == [1, 0, 1, 0]

    def test_out_of_bounds_index(self):
        gt = grid_from_bools([[True]])
        ranking = PairRanking(
            scene_id="s", method_tag="m", entries=((0, 5, 0.5),), elapsed_seconds=0.0
        )
        with pytest.raises(DataIntegrityError, match="outside"):
            relevance_vector(ranking, gt, 1)

    def test_ranking_shorter_than_k(self):
        gt = grid_from_bools([[True, True]])
        ranking = ranking_over(gt, [(0, 0)])
        with pytest.raises(ConfigurationError, match="at least"):
            relevance_vector(ranking, gt, 2)


class TestComputeSceneMetrics:
    def test_mixed_grid(self):
        gt = grid_from_bools(
            [
                [True, False, False, False],
                [False, False, True, False],
                [False, False, False, False],
            ]
        )
        order = [(0, 0), (0, 1), (1, 2), (2, 3), (1, 0), (0, 2), (2, 0), (1, 1), (0, 3), (2, 1)]
        ranking = ranking_over(gt, order, elapsed=0.25)
        metrics = compute_scene_metrics(ranking, gt, k_values=(1, 5, 10))
        assert metrics.total_positives == 2
        assert metrics.p_at_k[1] == 1.0
        assert metrics.p_at_k[5] == pytest.approx(0.4)
        assert metrics.p_at_k[10] == pytest.approx(0.2)
        assert metrics.r_at_k[1] == 1.0 and metrics.r_at_k[5] == 1.0
        assert metrics.ap_at_k[5] == pytest.approx((1.0 + 2.0 / 3.0) / 2.0)
        assert metrics.elapsed_seconds == 0.25
        assert not metrics.ap_excluded

    def test_no_positives_excludes_ap(self):
        gt = grid_from_bools([[False, False], [False, False]])
        ranking = ranking_over(gt, [(0, 0), (0, 1), (1, 0), (1, 1)])
        metrics = compute_scene_metrics(ranking, gt, k_values=(1, 4))
        assert metrics.total_positives == 0
        assert metrics.ap_excluded
        assert metrics.ap_at_k[1] is None and metrics.ap_at_k[4] is None
        assert metrics.p_at_k[4] == 0.0
        assert metrics.r_at_k[4] == 0.0

    def test_default_k_values(self):
        gt = grid_from_bools(np.ones((4, 4), dtype=bool))
        order = [(i, j) for i in range(4) for j in range(4)]
        metrics = compute_scene_metrics(ranking_over(gt, order), gt)
        assert metrics.k_values == DEFAULT_K_VALUES == (1, 5, 10)

    def test_invalid_k(self):
        gt = grid_from_bools([[True]])
        ranking = ranking_over(gt, [(0, 0)])
        with pytest.raises(ConfigurationError, match=">= 1"):
            compute_scene_metrics(ranking, gt, k_values=(0, 1))


class TestSceneMetricsValidation:
    def base_kwargs(self):
        return dict(
            scene_id="s",
            k_values=(1,),
            p_at_k={1: 1.0},
            r_at_k={1: 1.0},
            ap_at_k={1: 1.0},
            total_positives=3,
            elapsed_seconds=0.1,
        )

    def test_rejects_non_binary_recall(self):
        kwargs = self.base_kwargs()
        kwargs["r_at_k"] = {1: 0.5}
        with pytest.raises(DataIntegrityError, match="binary"):
            SceneMetrics(**kwargs)

    def test_rejects_ap_recall_disagreement_at_one(self):
        kwargs = self.base_kwargs()
        kwargs["ap_at_k"] = {1: 0.0}
        with pytest.raises(DataIntegrityError, match="AP@1"):
            SceneMetrics(**kwargs)


def scene(scene_id, p, r, ap, tp=5, elapsed=1.0, ks=(1,)):
    return SceneMetrics(
        scene_id=scene_id,
        k_values=ks,
        p_at_k={k: p for k in ks},
        r_at_k={k: r for k in ks},
        ap_at_k={k: (r if k == 1 and tp else ap) for k in ks},
        total_positives=tp,
        elapsed_seconds=elapsed,
    )


class TestAggregation:
    def test_means_and_population_std(self):
        scenes = [
            scene("s1", p=1.0, r=1.0, ap=1.0, elapsed=1.0),
            scene("s2", p=0.5, r=1.0, ap=1.0, elapsed=3.0),
        ]
        agg = aggregate_dataset(scenes, "CUSTOM", "m")
        assert agg.p_at_k[1] == pytest.approx(0.75)
        assert agg.r_at_k[1] == 1.0
        assert agg.mu_t == pytest.approx(2.0, abs=1e-15)
        assert agg.sigma_t == pytest.approx(1.0, abs=1e-15)  # population, not sample
        assert agg.scene_count == 2 and agg.ap_included_count == 2

    def test_single_scene_sigma_zero(self):
        agg = aggregate_dataset([scene("s", 1.0, 1.0, 1.0, elapsed=0.7)], "CUSTOM", "m")
        assert agg.mu_t == pytest.approx(0.7)
        assert agg.sigma_t == 0.0

    def test_map_skips_excluded_scenes(self):
        scenes = [
            scene("s1", p=1.0, r=1.0, ap=1.0, tp=4),
            scene("s2", p=0.0, r=0.0, ap=None, tp=0),
            scene("s3", p=0.0, r=0.0, ap=0.0, tp=2),
        ]
        agg = aggregate_dataset(scenes, "CUSTOM", "m")
        # P/R average all three scenes, mAP only the two with positives
        assert agg.p_at_k[1] == pytest.approx(1.0 / 3.0)
        assert agg.map_at_k[1] == pytest.approx(0.5)
        assert agg.ap_included_count == 2
        assert agg.ap_excluded_count == 1

    def test_map_none_when_all_excluded(self):
        scenes = [scene("s1", 0.0, 0.0, None, tp=0), scene("s2", 0.0, 0.0, None, tp=0)]
        agg = aggregate_dataset(scenes, "CUSTOM", "m")
        assert agg.map_at_k[1] is None
        assert agg.ap_included_count == 0

    def test_map_at_one_equals_mean_recall_when_all_included(self):
        rng = np.random.default_rng(83)
        scenes = [
            scene(f"s{i}", p=float(rng.random()), r=float(rng.integers(0, 2)), ap=None, tp=3)
            for i in range(10)
        ]
        agg = aggregate_dataset(scenes, "CUSTOM", "m")
        assert agg.map_at_k[1] == pytest.approx(agg.r_at_k[1], abs=1e-15)

    def test_mismatched_k_tuples_rejected(self):
        scenes = [scene("s1", 1.0, 1.0, 1.0, ks=(1,)), scene("s2", 1.0, 1.0, 1.0, ks=(1, 5))]
        with pytest.raises(ConfigurationError, match="computed at k"):
            aggregate_dataset(scenes, "CUSTOM", "m")

    def test_empty_rejected(self):
        with pytest.raises(ConfigurationError, match="empty"):
            aggregate_dataset([], "CUSTOM", "m")


class TestPrefixConsistency:
    def test_metrics_from_longer_ranking_prefix_agree(self):
        rng = np.random.default_rng(84)
        gt = grid_from_bools(rng.random((6, 6)) < 0.3)
        order = [(i, j) for i in range(6) for j in range(6)]
        rng.shuffle(order)
        full = ranking_over(gt, order)
        short = PairRanking(
            scene_id="s", method_tag="m", entries=full.entries[:10], elapsed_seconds=0.0
        )
        m_full = compute_scene_metrics(full, gt, k_values=(1, 5, 10))
        m_short = compute_scene_metrics(short, gt, k_values=(1, 5, 10))
        assert m_full.p_at_k == m_short.p_at_k
        assert m_full.r_at_k == m_short.r_at_k
        assert m_full.ap_at_k == m_short.ap_at_k
