import math
import random

import numpy as np
import pytest

from causalevents.corpus import MentionCausalSet
from causalevents.similarity import (
    EmbeddingTable,
    ParaphraseTable,
    SimilarityError,
    SimilarityMatrix,
    combined_similarity,
    cosine,
    event_cluster_similarity,
    load_embeddings,
    load_paraphrases,
    save_embeddings,
    save_paraphrases,
)


class TestCosine:
    def test_identity(self):
        v = np.array([0.3, -1.2, 4.0])
        assert cosine(v, v) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == \
            pytest.approx(0.0)

    def test_scaling_invariance(self):
        assert cosine(np.array([1.0, 2.0]), np.array([2.0, 4.0])) == \
            pytest.approx(1.0)

    def test_zero_norm_error(self):
        with pytest.raises(SimilarityError):
            cosine(np.array([0.0, 0.0]), np.array([1.0, 0.0]))

    def test_dim_mismatch(self):
        with pytest.raises(SimilarityError):
            cosine(np.array([1.0]), np.array([1.0, 0.0]))


class TestCombinedSimilarity:
    def setup_method(self):
        self.emb = EmbeddingTable(vectors={
            "x": np.array([1.0, 0.0]),
            "y": np.array([1.0, 0.0]),
            "z": np.array([-1.0, 0.0]),
        }, dim=2)

    def test_causal_pair_is_zero(self):
        causal = MentionCausalSet(pairs=frozenset({("x", "y")}))
        phr = ParaphraseTable(scores={("x", "y"): 1.0})
        assert combined_similarity("x", "y", self.emb, phr, causal) == 0.0
        assert combined_similarity("y", "x", self.emb, phr, causal) == 0.0

    def test_upper_bound(self, empty_causal):
        phr = ParaphraseTable(scores={("x", "y"): 1.0})
        assert combined_similarity("x", "y", self.emb, phr,
                                   empty_causal) == pytest.approx(1.0)

    def test_hand_value(self, empty_causal):
        # cos = 0.6 via crafted vectors, phr = 0.8 -> 0.5 * 1.4 = 0.7
        emb = EmbeddingTable(vectors={
            "a": np.array([1.0, 0.0]),
            "b": np.array([0.6, 0.8]),
        }, dim=2)
        phr = ParaphraseTable(scores={("a", "b"): 0.8})
        assert combined_similarity("a", "b", emb, phr, empty_causal) == \
            pytest.approx(0.7)

    def test_negative_cosine_clamped(self, empty_causal):
        phr = ParaphraseTable(scores={}, default=0.4)
        # raw cosine is -1; clamped to 0 before averaging
        assert combined_similarity("x", "z", self.emb, phr,
                                   empty_causal) == pytest.approx(0.2)

    def test_missing_embedding(self, empty_causal):
        phr = ParaphraseTable(scores={})
        with pytest.raises(SimilarityError, match="ghost"):
            combined_similarity("x", "ghost", self.emb, phr, empty_causal)

    def test_symmetry_property(self, empty_causal):
        rng = random.Random(11)
        ids = [f"m{i}" for i in range(8)]
        emb = EmbeddingTable(vectors={
            m: np.array([rng.gauss(0, 1) for _ in range(4)]) for m in ids
        }, dim=4)
        phr = ParaphraseTable(scores={
            (a, b): rng.random() for a in ids for b in ids if a < b
        })
        causal = MentionCausalSet(pairs=frozenset({("m0", "m3")}))
        for a in ids:
            for b in ids:
                if a == b:
                    continue
                left = combined_similarity(a, b, emb, phr, causal)
                right = combined_similarity(b, a, emb, phr, causal)
                assert left == pytest.approx(right, abs=1e-12)
                assert 0.0 <= left <= 1.0


class TestSimilarityMatrix:
    def test_from_tables_matches_scalar_path(self, empty_causal):
        rng = random.Random(5)
        ids = [f"m{i}" for i in range(10)]
        emb = EmbeddingTable(vectors={
            m: np.array([rng.gauss(0, 1) for _ in range(6)]) for m in ids
        }, dim=6)
        phr = ParaphraseTable(scores={
            (a, b): rng.random() for a in ids for b in ids if a < b
        }, default=0.1)
        causal = MentionCausalSet(pairs=frozenset({("m1", "m4"),
                                                   ("m2", "m7")}))
        S = SimilarityMatrix.from_tables(ids, emb, phr, causal,
                                         dtype=np.float64)
        for a in ids:
            for b in ids:
                if a == b:
                    assert S.get(a, a) == 1.0
                else:
                    expect = combined_similarity(a, b, emb, phr, causal)
                    assert S.get(a, b) == pytest.approx(expect, abs=1e-9)

    def test_causal_zero_scan(self):
        rng = random.Random(9)
        ids = [f"m{i}" for i in range(12)]
        emb = EmbeddingTable(vectors={
            m: np.array([rng.gauss(0, 1) for _ in range(4)]) for m in ids
        }, dim=4)
        pairs = set()
        while len(pairs) < 6:
            a, b = rng.sample(ids, 2)
            if (b, a) not in pairs:
                pairs.add((a, b))
        causal = MentionCausalSet(pairs=frozenset(pairs))
        S = SimilarityMatrix.from_tables(ids, emb, ParaphraseTable(), causal)
        for c, e in pairs:
            assert S.get(c, e) == 0.0
            assert S.get(e, c) == 0.0
        # symmetry within tolerance
        assert np.allclose(S.scores, S.scores.T, atol=1e-6)
        assert S.scores.min() >= 0.0 and S.scores.max() <= 1.0

    def test_zero_norm_vector_rejected(self, empty_causal):
        emb = EmbeddingTable(vectors={"a": np.zeros(3),
                                      "b": np.ones(3)}, dim=3)
        with pytest.raises(SimilarityError, match="zero-norm"):
            SimilarityMatrix.from_tables(["a", "b"], emb, ParaphraseTable(),
                                         empty_causal)


class TestEventClusterSimilarity:
    def make_matrix(self):
        ids = ["x1", "x2", "y"]
        scores = np.array([
            [1.0, 0.9, 0.4],
            [0.9, 1.0, 0.6],
            [0.4, 0.6, 1.0],
        ])
        return SimilarityMatrix(ids=ids, scores=scores)

    def test_singleton(self):
        S = self.make_matrix()
        assert event_cluster_similarity("y", ["x1"], S) == pytest.approx(0.4)

    def test_hand_average(self):
        S = self.make_matrix()
        assert event_cluster_similarity("y", ["x1", "x2"], S) == \
            pytest.approx(0.5)

    def test_self_excluded(self):
        S = self.make_matrix()
        assert event_cluster_similarity("y", ["y", "x1"], S) == \
            pytest.approx(0.4)

    def test_empty_cluster(self):
        S = self.make_matrix()
        with pytest.raises(SimilarityError):
            event_cluster_similarity("y", [], S)
        with pytest.raises(SimilarityError):
            event_cluster_similarity("y", ["y"], S)


class TestFileFormats:
    def test_embeddings_round_trip(self, tmp_path):
        emb = EmbeddingTable(vectors={
            "a": np.array([0.5, -1.25, 3.0]),
            "b": np.array([1.0, 2.0, -0.125]),
        }, dim=3)
        path = tmp_path / "emb.tsv"
        save_embeddings(emb, path)
        loaded = load_embeddings(path)
        assert loaded.dim == 3
        for mid in emb.vectors:
            assert np.allclose(loaded.vectors[mid], emb.vectors[mid])

    def test_embeddings_header_required(self, tmp_path):
        path = tmp_path / "emb.tsv"
        path.write_text("a\t1 2 3\n")
        with pytest.raises(SimilarityError, match="header"):
            load_embeddings(path)

    def test_embeddings_dim_checked(self, tmp_path):
        path = tmp_path / "emb.tsv"
        path.write_text("d=3\na\t1 2\n")
        with pytest.raises(SimilarityError, match="expected 3"):
            load_embeddings(path)

    def test_paraphrases_round_trip(self, tmp_path):
        phr = ParaphraseTable(scores={("a", "b"): 0.75, ("b", "c"): 0.5},
                              default=0.2)
        path = tmp_path / "phr.tsv"
        save_paraphrases(phr, path)
        loaded = load_paraphrases(path, default=0.2)
        assert loaded.get("b", "a") == 0.75
        assert loaded.get("c", "b") == 0.5
        assert loaded.get("a", "zzz") == 0.2

    def test_paraphrase_range_checked(self):
        with pytest.raises(SimilarityError):
            ParaphraseTable(scores={("a", "b"): 1.5})
