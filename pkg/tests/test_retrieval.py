"""Cosine ranking over the full pair grid, including its tie-break contract."""
import json

import numpy as np
import pytest

from pairbench.codecs import DescriptorSet
from pairbench.errors import ConfigurationError, DataIntegrityError, DegenerateDescriptorError
from pairbench.retrieval import (
    PairRanking,
    cosine_similarity,
    rank_order,
    similarity_matrix,
    top_k_pairs,
    write_ranking_dump,
)


def dset(data, subset="A", tag="m"):
    data = np.asarray(data, dtype=np.float32)
    ids = tuple(f"{subset.lower()}{i}" for i in range(data.shape[0]))
    return DescriptorSet(subset=subset, image_ids=ids, data=data, method_tag=tag)


def random_sets(rng, n_a, n_b, dim, tag="m"):
    return (
        dset(rng.normal(size=(n_a, dim)), "A", tag),
        dset(rng.normal(size=(n_b, dim)), "B", tag),
    )


class TestCosineSimilarity:
    def test_identical_vectors(self):
        v = np.array([3.0, 4.0, 0.0])
        assert cosine_similarity(v, v) == pytest.approx(1.0, abs=1e-15)

    def test_orthogonal_vectors(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 5.0]) == pytest.approx(0.0, abs=1e-15)

    def test_forty_five_degrees(self):
        got = cosine_similarity([1.0, 0.0], [1.0, 1.0])
        assert got == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-12)

    def test_opposite_vectors(self):
        assert cosine_similarity([1.0, 2.0], [-1.0, -2.0]) == pytest.approx(-1.0, abs=1e-15)

    def test_zero_norm_rejected(self):
        with pytest.raises(DegenerateDescriptorError):
            cosine_similarity([0.0, 0.0], [1.0, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigurationError, match="dimensions differ"):
            cosine_similarity([1.0, 0.0], [1.0, 0.0, 0.0])


class TestSimilarityMatrix:
    def test_agrees_with_scalar_loop(self):
        rng = np.random.default_rng(70)
        for dim in (64, 512):
            a, b = random_sets(rng, 50, 40, dim)
            sims = similarity_matrix(a, b)
            assert sims.shape == (50, 40)
            for i in range(50):
                for j in range(40):
                    want = cosine_similarity(a.data[i], b.data[j])
                    assert abs(sims[i, j] - want) < 1e-6

    def test_values_bounded(self):
        rng = np.random.default_rng(71)
        a, b = random_sets(rng, 30, 30, 128)
        sims = similarity_matrix(a, b)
        assert np.all(np.abs(sims) <= 1.0 + 1e-9)

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(72)
        a = dset(rng.normal(size=(5, 16)), "A")
        b = dset(rng.normal(size=(5, 32)), "B")
        with pytest.raises(ConfigurationError, match="dimensions differ"):
            similarity_matrix(a, b)


class TestRankOrder:
    def test_plain_descending(self):
        sims = np.array([[0.1, 0.9], [0.5, 0.3]])
        assert list(rank_order(sims)) == [1, 2, 3, 0]

    def test_ties_break_by_flat_index(self):
        sims = np.array([[0.5, 0.7], [0.7, 0.5]])
        # two 0.7s: (0,1) before (1,0); two 0.5s: (0,0) before (1,1)
        assert list(rank_order(sims)) == [1, 2, 0, 3]

    def test_all_equal_is_row_major(self):
        sims = np.full((3, 4), 0.25)
        assert list(rank_order(sims)) == list(range(12))


class TestTopKPairs:
    def test_matches_naive_enumeration(self):
        rng = np.random.default_rng(73)
        for _ in range(20):
            n_a = int(rng.integers(3, 20))
            n_b = int(rng.integers(3, 20))
            a, b = random_sets(rng, n_a, n_b, 32)
            k = int(rng.integers(1, n_a * n_b + 1))
            ranking = top_k_pairs(a, b, k, scene_id="s")

            sims = similarity_matrix(a, b)
            naive = sorted(
                ((i, j) for i in range(n_a) for j in range(n_b)),
                key=lambda ij: (-sims[ij[0], ij[1]], ij[0], ij[1]),
            )[:k]
            assert [(i, j) for i, j, _ in ranking.entries] == naive
            for i, j, s in ranking.entries:
                assert s == sims[i, j]

    def test_forced_ties_follow_index_order(self):
        # identical descriptor rows make every similarity 1.0 exactly
        a = dset(np.tile([1.0, 2.0], (3, 1)), "A")
        b = dset(np.tile([1.0, 2.0], (4, 1)), "B")
        ranking = top_k_pairs(a, b, 12)
        assert [(i, j) for i, j, _ in ranking.entries] == [
            (i, j) for i in range(3) for j in range(4)
        ]

    def test_prefix_property(self):
        rng = np.random.default_rng(74)
        a, b = random_sets(rng, 12, 10, 64)
        full = top_k_pairs(a, b, 120)
        for k in (1, 5, 10, 60):
            assert top_k_pairs(a, b, k).entries == full.entries[:k]

    def test_scale_invariance(self):
        rng = np.random.default_rng(75)
        a, b = random_sets(rng, 15, 15, 48)
        scaled_a = dset(a.data * np.float32(7.5), "A")
        scaled_b = dset(b.data * np.float32(0.25), "B")
        want = [(i, j) for i, j, _ in top_k_pairs(a, b, 225).entries]
        got = [(i, j) for i, j, _ in top_k_pairs(scaled_a, scaled_b, 225).entries]
        assert got == want

    def test_deterministic_apart_from_timing(self):
        rng = np.random.default_rng(76)
        a, b = random_sets(rng, 20, 20, 256)
        r1 = top_k_pairs(a, b, 50, scene_id="x")
        r2 = top_k_pairs(a, b, 50, scene_id="x")
        assert r1.entries == r2.entries
        assert r1.method_tag == r2.method_tag == "m"
        assert r1.elapsed_seconds >= 0.0

    def test_k_out_of_range(self):
        rng = np.random.default_rng(77)
        a, b = random_sets(rng, 4, 4, 8)
        with pytest.raises(ConfigurationError, match="within"):
            top_k_pairs(a, b, 0)
        with pytest.raises(ConfigurationError, match="within"):
            top_k_pairs(a, b, 17)

    def test_method_tag_mismatch(self):
        rng = np.random.default_rng(78)
        a = dset(rng.normal(size=(4, 8)), "A", tag="one")
        b = dset(rng.normal(size=(4, 8)), "B", tag="two")
        with pytest.raises(ConfigurationError, match="different methods"):
            top_k_pairs(a, b, 1)


class TestPairRankingValidation:
    def test_rejects_increasing_similarity(self):
        with pytest.raises(DataIntegrityError, match="increase"):
            PairRanking(
                scene_id="s",
                method_tag="m",
                entries=((0, 0, 0.1), (0, 1, 0.9)),
                elapsed_seconds=0.0,
            )

    def test_rejects_duplicate_pair(self):
        with pytest.raises(DataIntegrityError, match="duplicate"):
            PairRanking(
                scene_id="s",
                method_tag="m",
                entries=((0, 0, 0.9), (0, 0, 0.8)),
                elapsed_seconds=0.0,
            )

    def test_rejects_out_of_bound_similarity(self):
        with pytest.raises(DataIntegrityError, match="outside"):
            PairRanking(
                scene_id="s",
                method_tag="m",
                entries=((0, 0, 1.5),),
                elapsed_seconds=0.0,
            )

    def test_accepts_boundary_with_slack(self):
        ranking = PairRanking(
            scene_id="s",
            method_tag="m",
            entries=((0, 0, 1.0000005), (0, 1, -1.0000005)),
            elapsed_seconds=0.0,
        )
        assert len(ranking) == 2


class TestRankingDump:
    def test_jsonl_layout(self, tmp_path):
        rng = np.random.default_rng(79)
        a, b = random_sets(rng, 3, 3, 8)
        ranking = top_k_pairs(a, b, 4, scene_id="s")
        path = tmp_path / "out.jsonl"
        write_ranking_dump(ranking, a.image_ids, b.image_ids, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 4
        first = json.loads(lines[0])
        i, j, s = ranking.entries[0]
        assert first == {
            "image_id_a": a.image_ids[i],
            "image_id_b": b.image_ids[j],
            "similarity": s,
        }
