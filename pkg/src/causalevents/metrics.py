"""Partition- and text-quality metrics for cluster evaluation.

Self-loop and bi-directional ratios measure residual causal inconsistency
of a clustering; the silhouette variant and homogeneity score measure
cohesion against the similarity matrix; ARI/NMI compare a predicted
labeling with a reference; BLEU scores generated abstraction text.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .clustering import ClusterSet
from .corpus import MentionCausalSet
from .similarity import SimilarityMatrix


class MetricError(ValueError):
    pass


def intercluster_count_matrix(cs: ClusterSet,
                              causal: MentionCausalSet) -> np.ndarray:
    """k x k matrix A where A[i, j] counts mentions of cluster i annotated
    as causing at least one mention of cluster j (distinct sources)."""
    order = [cl.cluster_id for cl in cs.clusters]
    index = {cid: i for i, cid in enumerate(order)}
    where = cs.assignment()
    sources: dict[tuple[int, int], set[str]] = {}
    for cause, effect in causal.pairs:
        a, b = where.get(cause), where.get(effect)
        if a is None or b is None:
            continue
        sources.setdefault((index[a], index[b]), set()).add(cause)
    A = np.zeros((len(order), len(order)), dtype=np.int64)
    for (i, j), src in sources.items():
        A[i, j] = len(src)
    return A


def self_loop_ratio(cs: ClusterSet, A: np.ndarray) -> float:
    """Mean over clusters of A[i, i] / (2 |C_i|)."""
    k = len(cs.clusters)
    if k == 0:
        raise MetricError("self-loop ratio undefined for empty cluster set")
    if A.shape != (k, k):
        raise MetricError(f"count matrix {A.shape} does not match {k} clusters")
    total = 0.0
    for i, cl in enumerate(cs.clusters):
        total += A[i, i] / (2.0 * len(cl.members))
    return total / k


def bidirectional_ratio(A: np.ndarray) -> float:
    """Mean over cluster pairs of min(A_ij, A_ji) / max(A_ij, A_ji)."""
    k = A.shape[0]
    if k < 2:
        raise MetricError("bi-directional ratio needs at least 2 clusters")
    total = 0.0
    for i in range(k - 1):
        for j in range(i + 1, k):
            hi = max(A[i, j], A[j, i])
            if hi > 0:
                total += min(A[i, j], A[j, i]) / hi
    return 2.0 * total / (k * k - k)


def silhouette(assignments: dict[str, str], S: SimilarityMatrix) -> float:
    """Similarity-based silhouette with denominator 1 - min(a_x, b_x).

    a_x is the mean similarity of x to the rest of its own cluster and b_x
    the mean similarity to the nearest other cluster. Instances in
    singleton clusters, and instances where the denominator vanishes,
    contribute 0.
    """
    by_cluster: dict[str, list[str]] = {}
    for m, c in assignments.items():
        by_cluster.setdefault(c, []).append(m)
    if len(by_cluster) < 2:
        raise MetricError("silhouette needs at least 2 clusters")
    if all(len(ms) == 1 for ms in by_cluster.values()):
        raise MetricError("silhouette undefined when every cluster is a "
                          "singleton")
    total = 0.0
    n = 0
    for cid, members in sorted(by_cluster.items()):
        for x in sorted(members):
            n += 1
            own = [S.get(x, o) for o in members if o != x]
            if not own:
                continue  # singleton cluster: no cohesion term
            a_x = float(np.mean(own))
            b_x = max(
                float(np.mean([S.get(x, o) for o in other]))
                for oc, other in sorted(by_cluster.items()) if oc != cid
            )
            denom = 1.0 - min(a_x, b_x)
            if denom > 0.0:
                total += (a_x - b_x) / denom
    return total / n


def homogeneity(cs: ClusterSet, S: SimilarityMatrix) -> float:
    """Mean over clusters (size >= 2) of mean pairwise member similarity."""
    scores = []
    for cl in cs.clusters:
        members = sorted(cl.members)
        if len(members) < 2:
            continue
        vals = [S.get(members[i], members[j])
                for i in range(len(members))
                for j in range(i + 1, len(members))]
        scores.append(float(np.mean(vals)))
    if not scores:
        raise MetricError("homogeneity needs a cluster with >= 2 members")
    return float(np.mean(scores))


def _contingency(pred, truth):
    if len(pred) != len(truth):
        raise MetricError(
            f"labelings differ in length: {len(pred)} vs {len(truth)}")
    table: dict[tuple, int] = Counter(zip(truth, pred))
    row = Counter(truth)
    col = Counter(pred)
    return table, row, col


def adjusted_rand_index(pred, truth) -> float:
    """Chance-adjusted pair-counting agreement between two labelings."""
    table, row, col = _contingency(pred, truth)
    n = len(pred)
    sum_comb = sum(math.comb(v, 2) for v in table.values())
    sum_row = sum(math.comb(v, 2) for v in row.values())
    sum_col = sum(math.comb(v, 2) for v in col.values())
    total = math.comb(n, 2)
    if total == 0:
        return 1.0
    expected = sum_row * sum_col / total
    maximum = 0.5 * (sum_row + sum_col)
    if maximum == expected:
        return 1.0  # both labelings are trivial partitions
    return (sum_comb - expected) / (maximum - expected)


def normalized_mutual_information(pred, truth) -> float:
    """Mutual information normalized by the arithmetic mean of entropies."""
    table, row, col = _contingency(pred, truth)
    n = len(pred)
    if n == 0:
        raise MetricError("empty labelings")
    h_row = -sum((v / n) * math.log(v / n) for v in row.values())
    h_col = -sum((v / n) * math.log(v / n) for v in col.values())
    if h_row == 0.0 and h_col == 0.0:
        return 1.0
    mi = 0.0
    for (t, p), v in table.items():
        mi += (v / n) * math.log(v * n / (row[t] * col[p]))
    mi = max(0.0, mi)
    return mi / (0.5 * (h_row + h_col))


def _ngram_counts(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: str, references: list[str], max_n: int = 4) -> float:
    """Sentence BLEU with brevity penalty.

    Modified n-gram precisions up to max_n; orders >= 2 are smoothed by
    adding one to both numerator and denominator. Reference length for the
    brevity penalty is the one closest to the candidate length.
    """
    if not candidate.strip() or not references:
        raise MetricError("bleu needs a non-empty candidate and references")
    cand = candidate.split()
    refs = [r.split() for r in references]
    if any(not r for r in refs):
        raise MetricError("bleu references must be non-empty")

    log_sum = 0.0
    for n in range(1, max_n + 1):
        cand_counts = _ngram_counts(cand, n)
        total = sum(cand_counts.values())
        clipped = 0
        for gram, cnt in cand_counts.items():
            best = max(_ngram_counts(r, n).get(gram, 0) for r in refs)
            clipped += min(cnt, best)
        if n == 1:
            if total == 0 or clipped == 0:
                return 0.0
            p = clipped / total
        else:
            p = (clipped + 1) / (total + 1)
        log_sum += math.log(p) / max_n

    c = len(cand)
    r = min((abs(len(ref) - c), len(ref)) for ref in refs)[1]
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    return bp * math.exp(log_sum)
