import itertools
import random

import numpy as np
import pytest

from causalevents.clustering import (
    Cluster,
    ClusterSet,
    ClusteringError,
    candidate_clusters_for_outlier,
    enforce_causal_consistency,
    is_causally_consistent,
    load_clusters,
    pivot_cluster,
    prune_clusters,
    save_clusters,
)
from causalevents.corpus import MentionCausalSet
from causalevents.similarity import SimilarityMatrix

from conftest import block_similarity


def matrix(ids, entries):
    """Symmetric matrix from a dict of unordered pair scores."""
    n = len(ids)
    scores = np.zeros((n, n))
    np.fill_diagonal(scores, 1.0)
    index = {m: i for i, m in enumerate(ids)}
    for (a, b), v in entries.items():
        scores[index[a], index[b]] = v
        scores[index[b], index[a]] = v
    return SimilarityMatrix(ids=list(ids), scores=scores)


def all_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in all_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


class TestPivotCluster:
    def test_two_block_instance_matches_bruteforce(self):
        ids = ["a", "b", "c", "d"]
        S = matrix(ids, {("a", "b"): 0.9, ("c", "d"): 0.8})
        causal = MentionCausalSet(pairs=frozenset({("a", "c")}))
        cs = pivot_cluster(ids, S, causal, seed=1)
        got = sorted(tuple(sorted(cl.members)) for cl in cs.clusters)
        assert got == [("a", "b"), ("c", "d")]
        assert cs.outliers == set()

        # brute-force correlation clustering: maximize sum of
        # (similarity - threshold) over within-cluster pairs
        def objective(partition):
            total = 0.0
            for block in partition:
                for x, y in itertools.combinations(block, 2):
                    total += S.get(x, y) - 0.70
            return total

        best = max(all_partitions(ids), key=objective)
        best_blocks = sorted(tuple(sorted(b)) for b in best if len(b) > 1)
        assert best_blocks == got

    def test_all_below_threshold_all_outliers(self):
        ids = ["a", "b", "c"]
        S = matrix(ids, {("a", "b"): 0.5, ("a", "c"): 0.3, ("b", "c"): 0.6})
        causal = MentionCausalSet(pairs=frozenset())
        cs = pivot_cluster(ids, S, causal, seed=3)
        assert cs.clusters == []
        assert cs.outliers == set(ids)

    def test_deterministic_given_seed(self):
        rng = random.Random(0)
        ids = [f"m{i}" for i in range(20)]
        entries = {(a, b): rng.random()
                   for a, b in itertools.combinations(ids, 2)}
        S = matrix(ids, entries)
        pairs = set()
        while len(pairs) < 6:
            a, b = rng.sample(ids, 2)
            if (b, a) not in pairs:
                pairs.add((a, b))
        causal = MentionCausalSet(pairs=frozenset(pairs))
        one = pivot_cluster(ids, S, causal, seed=42)
        two = pivot_cluster(ids, S, causal, seed=42)
        assert [sorted(c.members) for c in one.clusters] == \
            [sorted(c.members) for c in two.clusters]
        assert one.outliers == two.outliers

    def test_partition_property(self):
        rng = random.Random(8)
        for trial in range(20):
            ids = [f"m{i}" for i in range(rng.randint(3, 15))]
            entries = {(a, b): rng.random()
                       for a, b in itertools.combinations(ids, 2)}
            S = matrix(ids, entries)
            pairs = set()
            for _ in range(rng.randint(0, 5)):
                a, b = rng.sample(ids, 2)
                if (b, a) not in pairs:
                    pairs.add((a, b))
            causal = MentionCausalSet(pairs=frozenset(pairs))
            cs = pivot_cluster(ids, S, causal, seed=trial)
            assert cs.universe == set(ids)

    def test_empty_mentions_error(self):
        S = matrix(["a"], {})
        with pytest.raises(ClusteringError):
            pivot_cluster([], S, MentionCausalSet(pairs=frozenset()), seed=0)

    def test_tie_breaks_to_higher_similarity_pivot(self):
        # m is above threshold to both pivots; joins the closer one
        ids = ["p1", "p2", "m"]
        S = matrix(ids, {("p1", "m"): 0.8, ("p2", "m"): 0.9,
                         ("p1", "p2"): 0.0})
        causal = MentionCausalSet(pairs=frozenset({("p1", "p2")}))
        cs = pivot_cluster(ids, S, causal, seed=0)
        assignment = cs.assignment()
        assert assignment["m"] == assignment["p2"]


class TestPruneClusters:
    def test_small_and_dissimilar_removed(self):
        ids = ["a", "b", "c"]
        S = matrix(ids, {("a", "b"): 0.4, ("a", "c"): 0.2, ("b", "c"): 0.3})
        cs = ClusterSet(clusters=[Cluster("c0", {"a", "b", "c"})],
                        outliers=set())
        out = prune_clusters(cs, S)
        assert out.clusters == []
        assert out.outliers == {"a", "b", "c"}

    def test_small_but_similar_kept(self):
        ids = ["a", "b", "c"]
        S = matrix(ids, {("a", "b"): 0.9, ("a", "c"): 0.2, ("b", "c"): 0.3})
        cs = ClusterSet(clusters=[Cluster("c0", {"a", "b", "c"})],
                        outliers=set())
        out = prune_clusters(cs, S)
        assert len(out.clusters) == 1

    def test_large_but_dissimilar_kept(self):
        ids = [f"m{i}" for i in range(12)]
        S = matrix(ids, {(a, b): 0.1
                         for a, b in itertools.combinations(ids, 2)})
        cs = ClusterSet(clusters=[Cluster("c0", set(ids))], outliers=set())
        out = prune_clusters(cs, S)
        assert len(out.clusters) == 1


class TestEnforceCausalConsistency:
    def test_intra_pair_forces_split(self):
        cs = ClusterSet(clusters=[Cluster("c0", {"a", "b"})], outliers=set())
        causal = MentionCausalSet(pairs=frozenset({("a", "b")}))
        out = enforce_causal_consistency(cs, causal)
        assert sorted(tuple(sorted(c.members)) for c in out.clusters) == \
            [("a",), ("b",)]

    def test_bidirectional_pair_resolved_minimally(self):
        cs = ClusterSet(clusters=[Cluster("A", {"a1", "a2"}),
                                  Cluster("B", {"b1", "b2"})],
                        outliers=set())
        causal = MentionCausalSet(pairs=frozenset({("a1", "b1"),
                                                   ("b2", "a2")}))
        out = enforce_causal_consistency(cs, causal)
        assert is_causally_consistent(out, causal)
        assert out.universe == {"a1", "a2", "b1", "b2"}
        # brute force: some 3-cluster split fixes the violation, so the
        # greedy result must not use more than 3 clusters
        sizes = sorted(len(c.members) for c in out.clusters)
        assert len(out.clusters) == 3 and sizes == [1, 1, 2]

    def test_consistent_input_unchanged(self):
        cs = ClusterSet(clusters=[Cluster("A", {"a1", "a2"}),
                                  Cluster("B", {"b1"})], outliers={"o"})
        causal = MentionCausalSet(pairs=frozenset({("a1", "b1")}))
        out = enforce_causal_consistency(cs, causal)
        assert sorted(tuple(sorted(c.members)) for c in out.clusters) == \
            [("a1", "a2"), ("b1",)]
        assert out.outliers == {"o"}

    def test_fully_entangled_pair_resolves(self):
        # every member of both clusters carries links in both directions,
        # so no single canonical carve-out applies; the splitter must
        # peel members until the pair untangles
        cs = ClusterSet(clusters=[Cluster("A", {"a1", "a2"}),
                                  Cluster("B", {"b1", "b2"})], outliers=set())
        causal = MentionCausalSet(pairs=frozenset({
            ("a1", "b1"), ("a2", "b2"),
            ("b1", "a2"), ("b2", "a1"),
        }))
        out = enforce_causal_consistency(cs, causal)
        assert is_causally_consistent(out, causal)
        assert out.universe == {"a1", "a2", "b1", "b2"}

    def test_heavy_noise_instances_reach_consistency(self):
        rng = random.Random(77)
        for trial in range(200):
            n = rng.randint(6, 30)
            ids = [f"m{i}" for i in range(n)]
            k = rng.randint(1, 4)
            buckets = [set() for _ in range(k)]
            for m in ids:
                buckets[rng.randrange(k)].add(m)
            clusters = [Cluster(f"c{j}", b)
                        for j, b in enumerate(buckets) if b]
            pairs = set()
            density = rng.choice([0.1, 0.3, 0.6])
            for a, b in itertools.combinations(ids, 2):
                if rng.random() < density:
                    if rng.random() < 0.5:
                        a, b = b, a
                    if (b, a) not in pairs:
                        pairs.add((a, b))
            causal = MentionCausalSet(pairs=frozenset(pairs))
            cs = ClusterSet(clusters=clusters, outliers=set())
            out = enforce_causal_consistency(cs, causal)
            assert is_causally_consistent(out, causal), trial
            assert out.universe == set(ids), trial

    def test_random_instances_reach_consistency(self):
        rng = random.Random(21)
        for trial in range(40):
            n = rng.randint(4, 14)
            ids = [f"m{i}" for i in range(n)]
            k = rng.randint(1, 3)
            buckets = [set() for _ in range(k)]
            for m in ids:
                buckets[rng.randrange(k)].add(m)
            clusters = [Cluster(f"c{j}", b)
                        for j, b in enumerate(buckets) if b]
            pairs = set()
            for _ in range(rng.randint(0, n)):
                a, b = rng.sample(ids, 2)
                if (b, a) not in pairs:
                    pairs.add((a, b))
            causal = MentionCausalSet(pairs=frozenset(pairs))
            cs = ClusterSet(clusters=clusters, outliers=set())
            out = enforce_causal_consistency(cs, causal)
            assert is_causally_consistent(out, causal), trial
            assert out.universe == set(ids)
            # invariant scan from the module contract
            for cl in out.clusters:
                for x, y in itertools.combinations(sorted(cl.members), 2):
                    assert not causal.is_causal(x, y)


class TestCandidateClusters:
    def build(self):
        cs = ClusterSet(
            clusters=[Cluster("C1", {"m1"}), Cluster("C2", {"m2"}),
                      Cluster("C3", {"m3"})],
            outliers={"o"},
        )
        return cs

    def test_causally_linked_cluster_excluded(self):
        cs = self.build()
        causal = MentionCausalSet(pairs=frozenset({("o", "m1"),
                                                   ("m1", "m2")}))
        cands = candidate_clusters_for_outlier("o", cs, causal)
        assert "C1" not in cands

    def test_no_links_all_clusters(self):
        cs = self.build()
        causal = MentionCausalSet(pairs=frozenset({("m1", "m2")}))
        cands = candidate_clusters_for_outlier("o", cs, causal)
        assert cands == ["C1", "C2", "C3"]

    def test_reverse_direction_cluster_excluded(self):
        cs = self.build()
        # existing C1 -> C2; o causes a member of C1, so placing o in C2
        # would add C2 -> C1 and flip the pair bidirectional
        causal = MentionCausalSet(pairs=frozenset({("m1", "m2"),
                                                   ("o", "m1")}))
        cands = candidate_clusters_for_outlier("o", cs, causal)
        assert cands == ["C3"]

    def test_matches_insertion_enumeration(self):
        rng = random.Random(13)
        for trial in range(30):
            n_clusters = rng.randint(2, 4)
            clusters = []
            ids = []
            for j in range(n_clusters):
                members = {f"m{j}{k}" for k in range(rng.randint(1, 3))}
                ids.extend(members)
                clusters.append(Cluster(f"C{j}", members))
            pairs = set()
            universe = ids + ["o"]
            for _ in range(rng.randint(0, 6)):
                a, b = rng.sample(universe, 2)
                if (b, a) not in pairs:
                    pairs.add((a, b))
            causal = MentionCausalSet(pairs=frozenset(pairs))
            base = [Cluster(c.cluster_id, set(c.members)) for c in clusters]
            cs = ClusterSet(clusters=base, outliers={"o"})
            if not is_causally_consistent(cs, causal):
                continue
            got = candidate_clusters_for_outlier("o", cs, causal)
            expected = []
            for j in range(len(clusters)):
                trial_clusters = [Cluster(c.cluster_id, set(c.members))
                                  for c in clusters]
                trial_clusters[j].members.add("o")
                trial_cs = ClusterSet(clusters=trial_clusters, outliers=set())
                if is_causally_consistent(trial_cs, causal):
                    expected.append(clusters[j].cluster_id)
            assert got == expected, trial

    def test_unknown_outlier(self):
        cs = self.build()
        with pytest.raises(ClusteringError):
            candidate_clusters_for_outlier("nope", cs,
                                           MentionCausalSet(frozenset()))


def test_clusters_file_round_trip(tmp_path):
    cs = ClusterSet(
        clusters=[Cluster("c0", {"a", "b"}, topic="a person get a job"),
                  Cluster("c1", {"c", "d"}, topic=None)],
        outliers={"e"},
        seed=7,
    )
    path = tmp_path / "clusters.json"
    save_clusters(cs, path)
    loaded = load_clusters(path)
    assert loaded.seed == 7
    assert loaded.outliers == {"e"}
    assert {c.cluster_id: sorted(c.members) for c in loaded.clusters} == \
        {"c0": ["a", "b"], "c1": ["c", "d"]}
    assert loaded.cluster("c0").topic == "a person get a job"


def test_partition_validation():
    with pytest.raises(ClusteringError):
        ClusterSet(clusters=[Cluster("c0", {"a"}), Cluster("c1", {"a"})],
                   outliers=set())
    with pytest.raises(ClusteringError):
        ClusterSet(clusters=[Cluster("c0", {"a"})], outliers={"a"})
