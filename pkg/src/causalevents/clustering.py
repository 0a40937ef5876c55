"""Phase-1 abstraction extraction.

Correlation clustering seeded by annotated cause-effect pivot pairs,
followed by pruning of weak clusters and post-processing that restores
causal consistency: no causally related mentions inside one cluster, and
at most one causal direction between any two clusters.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import MentionCausalSet, StoryCollection
from .similarity import SimilarityMatrix


class ClusteringError(ValueError):
    pass


@dataclass
class Cluster:
    cluster_id: str
    members: set[str]
    topic: str | None = None

    def __post_init__(self):
        if not self.members:
            raise ClusteringError(f"cluster {self.cluster_id!r} is empty")


@dataclass
class ClusterSet:
    """A partition of the mention universe into clusters plus outliers."""

    clusters: list[Cluster]
    outliers: set[str]
    seed: int | None = None

    def __post_init__(self):
        seen: set[str] = set()
        for cl in self.clusters:
            overlap = seen & cl.members
            if overlap:
                raise ClusteringError(
                    f"mention(s) {sorted(overlap)} appear in two clusters")
            seen |= cl.members
        overlap = seen & self.outliers
        if overlap:
            raise ClusteringError(
                f"mention(s) {sorted(overlap)} are both clustered and outliers")

    @property
    def universe(self) -> set[str]:
        out = set(self.outliers)
        for cl in self.clusters:
            out |= cl.members
        return out

    def assignment(self) -> dict[str, str]:
        """mention_id -> cluster_id for clustered mentions only."""
        out = {}
        for cl in self.clusters:
            for m in cl.members:
                out[m] = cl.cluster_id
        return out

    def cluster(self, cluster_id: str) -> Cluster:
        for cl in self.clusters:
            if cl.cluster_id == cluster_id:
                return cl
        raise KeyError(cluster_id)


def pivot_cluster(mentions, S: SimilarityMatrix, causal: MentionCausalSet,
                  seed: int, threshold: float = 0.70) -> ClusterSet:
    """Iterative pivot clustering driven by annotated cause-effect pairs.

    Each round draws a random annotated pair with both endpoints still
    unassigned and opens one cluster per pivot; every unassigned mention
    with similarity >= threshold to a pivot joins that pivot (ties go to
    the more similar pivot, then to the lexicographically smaller pivot
    id). When no annotated pair remains, single random pivots are drawn.
    Clusters that end up with a single member are demoted to outliers.
    """
    mention_ids = sorted(mentions)
    if not mention_ids:
        raise ClusteringError("cannot cluster an empty mention set")
    if not 0.0 < threshold < 1.0:
        raise ClusteringError(f"threshold {threshold} outside (0, 1)")
    rng = random.Random(seed)
    idx = S.index
    unassigned = set(mention_ids)
    raw_clusters: list[list[str]] = []

    causal_pairs = sorted(
        (c, e) for c, e in causal.pairs
        if c in unassigned and e in unassigned
    )

    while unassigned:
        live_pairs = [(c, e) for c, e in causal_pairs
                      if c in unassigned and e in unassigned]
        if live_pairs:
            pivots = list(rng.choice(live_pairs))
        else:
            pivots = [rng.choice(sorted(unassigned))]
        unassigned.difference_update(pivots)
        groups = {p: [p] for p in pivots}

        candidates = sorted(unassigned)
        if candidates:
            rows = np.array([[S.scores[idx[p], idx[m]] for m in candidates]
                             for p in pivots])
            for j, m in enumerate(candidates):
                sims = rows[:, j]
                best, best_sim = None, -1.0
                for k, p in enumerate(pivots):
                    s = float(sims[k])
                    if s < threshold:
                        continue
                    if s > best_sim or (s == best_sim and p < best):
                        best, best_sim = p, s
                if best is not None:
                    groups[best].append(m)
                    unassigned.discard(m)
        for p in pivots:
            raw_clusters.append(groups[p])

    clusters = []
    outliers = set()
    counter = 0
    for members in raw_clusters:
        if len(members) < 2:
            outliers.update(members)
            continue
        clusters.append(Cluster(cluster_id=f"c{counter:04d}",
                                members=set(members)))
        counter += 1
    return ClusterSet(clusters=clusters, outliers=outliers, seed=seed)


def prune_clusters(cs: ClusterSet, S: SimilarityMatrix, min_size: int = 10,
                   sim_floor: float = 0.50) -> ClusterSet:
    """Drop clusters that are both small and internally dissimilar.

    A cluster is removed only when |members| < min_size AND its maximum
    pairwise similarity is below sim_floor; removed members become
    outliers. Singletons have maximum pairwise similarity 0.
    """
    kept = []
    outliers = set(cs.outliers)
    for cl in cs.clusters:
        members = sorted(cl.members)
        if len(members) < min_size:
            max_sim = 0.0
            for i in range(len(members)):
                for j in range(i + 1, len(members)):
                    max_sim = max(max_sim, S.get(members[i], members[j]))
            if max_sim < sim_floor:
                outliers.update(members)
                continue
        kept.append(cl)
    return ClusterSet(clusters=kept, outliers=outliers, seed=cs.seed)


def _next_id(existing: set[str]) -> str:
    n = 0
    while f"c{n:04d}" in existing:
        n += 1
    return f"c{n:04d}"


def _cluster_links(clusters: list[Cluster], causal: MentionCausalSet):
    """Mention-level links grouped by ordered cluster pair."""
    where = {}
    for cl in clusters:
        for m in cl.members:
            where[m] = cl.cluster_id
    links: dict[tuple[str, str], list[tuple[str, str]]] = {}
    for cause, effect in causal.pairs:
        a, b = where.get(cause), where.get(effect)
        if a is None or b is None or a == b:
            continue
        links.setdefault((a, b), []).append((cause, effect))
    return links


def enforce_causal_consistency(cs: ClusterSet,
                               causal: MentionCausalSet) -> ClusterSet:
    """Split clusters until the partition is causally consistent.

    Consistency means (a) no cluster contains a causally annotated mention
    pair and (b) between any two clusters all annotated links point in one
    direction. Splits are greedy and deterministic given member ordering:
    intra-cluster conflicts are resolved by sequential graph coloring, and
    bidirectional cluster pairs by carving out the smallest set of members
    whose removal kills one direction.
    """
    # (a) no causal pair inside a cluster: greedy coloring on conflicts
    ids_in_use = {cl.cluster_id for cl in cs.clusters}
    clusters: list[Cluster] = []
    for cl in cs.clusters:
        members = sorted(cl.members)
        conflicts = {
            m: {o for o in members
                if o != m and causal.is_causal(m, o)}
            for m in members
        }
        parts: list[list[str]] = []
        for m in members:
            placed = False
            for part in parts:
                if not conflicts[m].intersection(part):
                    part.append(m)
                    placed = True
                    break
            if not placed:
                parts.append([m])
        clusters.append(Cluster(cl.cluster_id, set(parts[0]), cl.topic))
        for part in parts[1:]:
            new_id = _next_id(ids_in_use)
            ids_in_use.add(new_id)
            clusters.append(Cluster(new_id, set(part)))

    # (b) one causal direction per cluster pair: iterative carve-outs
    while True:
        links = _cluster_links(clusters, causal)
        violation = None
        for (a, b) in sorted(links):
            if a < b and (b, a) in links:
                violation = (a, b)
                break
        if violation is None:
            break
        a, b = violation
        by_id = {cl.cluster_id: cl for cl in clusters}
        fwd, bwd = links[(a, b)], links[(b, a)]
        options = [
            (a, {c for c, _ in fwd}),   # drop sources of a->b links from a
            (b, {e for _, e in fwd}),   # drop targets of a->b links from b
            (b, {c for c, _ in bwd}),   # drop sources of b->a links from b
            (a, {e for _, e in bwd}),   # drop targets of b->a links from a
        ]
        best = None
        for cid, removal in options:
            if removal == by_id[cid].members:
                continue  # carving out everything changes nothing
            if best is None or len(removal) < len(best[1]):
                best = (cid, removal)
        if best is None:
            # every member of both clusters is entangled in links both
            # ways; peel a single member off the larger cluster so the
            # canonical carve-outs become available at a smaller size
            # (two singletons both ways would need a mention 2-cycle,
            # which the corpus rejects)
            cid = max((a, b), key=lambda c: (len(by_id[c].members), c))
            best = (cid, {min(by_id[cid].members)})
        cid, removal = best
        host = by_id[cid]
        host.members = host.members - removal
        new_id = _next_id(ids_in_use)
        ids_in_use.add(new_id)
        clusters.append(Cluster(new_id, set(removal)))

    return ClusterSet(clusters=clusters, outliers=set(cs.outliers),
                      seed=cs.seed)


def is_causally_consistent(cs: ClusterSet, causal: MentionCausalSet) -> bool:
    """Direct scan of both consistency conditions."""
    for cl in cs.clusters:
        members = sorted(cl.members)
        for i, m in enumerate(members):
            for o in members[i + 1:]:
                if causal.is_causal(m, o):
                    return False
    links = _cluster_links(cs.clusters, causal)
    for (a, b) in links:
        if a < b and (b, a) in links:
            return False
    return True


def candidate_clusters_for_outlier(o: str, cs: ClusterSet,
                                   causal: MentionCausalSet) -> list[str]:
    """Clusters that could absorb an outlier without breaking consistency."""
    if o not in cs.outliers:
        raise ClusteringError(f"{o!r} is not an outlier of this cluster set")
    where = cs.assignment()
    out_links: dict[str, set[str]] = {}   # cluster -> directions {'fwd','bwd'}
    linked_members: set[str] = set()
    for cause, effect in causal.pairs:
        if cause == o and effect in where:
            out_links.setdefault(where[effect], set()).add("fwd")
            linked_members.add(effect)
        elif effect == o and cause in where:
            out_links.setdefault(where[cause], set()).add("bwd")
            linked_members.add(cause)

    links = _cluster_links(cs.clusters, causal)
    candidates = []
    for cl in cs.clusters:
        cid = cl.cluster_id
        if linked_members & cl.members:
            continue  # condition (a): o is causally tied to a member
        ok = True
        for other, dirs in out_links.items():
            if other == cid:
                continue
            existing = set()
            if (cid, other) in links:
                existing.add("fwd")
            if (other, cid) in links:
                existing.add("bwd")
            if len(existing | dirs) > 1:
                ok = False
                break
        if ok:
            candidates.append(cid)
    return candidates


def assign_topics(cs: ClusterSet, col: StoryCollection,
                  S: SimilarityMatrix) -> ClusterSet:
    """Label each cluster with the generalization of its medoid member."""
    clusters = []
    for cl in cs.clusters:
        members = sorted(cl.members)
        best, best_score = members[0], -1.0
        for m in members:
            score = float(np.mean([S.get(m, o) for o in members if o != m])) \
                if len(members) > 1 else 1.0
            if score > best_score:
                best, best_score = m, score
        mention = col.mentions[best]
        topic = mention.generalization or mention.text
        clusters.append(Cluster(cl.cluster_id, set(cl.members), topic))
    return ClusterSet(clusters=clusters, outliers=set(cs.outliers),
                      seed=cs.seed)


def drop_unlinked_clusters(cs: ClusterSet,
                           causal: MentionCausalSet) -> ClusterSet:
    """Demote clusters with no inter-cluster causal link to outliers.

    Removing a cluster can orphan its former neighbors, so iterate to a
    fixed point. Guarantees every surviving cluster is in a cause-effect
    relation with at least one other cluster.
    """
    clusters = list(cs.clusters)
    outliers = set(cs.outliers)
    while True:
        links = _cluster_links(clusters, causal)
        connected = {a for a, _ in links} | {b for _, b in links}
        dropped = [cl for cl in clusters if cl.cluster_id not in connected]
        if not dropped:
            break
        for cl in dropped:
            outliers.update(cl.members)
        clusters = [cl for cl in clusters if cl.cluster_id in connected]
    return ClusterSet(clusters=clusters, outliers=outliers, seed=cs.seed)


def phase_one(col: StoryCollection, S: SimilarityMatrix, seed: int,
              threshold: float = 0.70, min_size: int = 10,
              sim_floor: float = 0.50,
              require_linked: bool = True) -> ClusterSet:
    """Full abstraction-extraction pipeline over a loaded corpus."""
    cs = pivot_cluster(sorted(col.mentions), S, col.causal, seed=seed,
                       threshold=threshold)
    cs = enforce_causal_consistency(cs, col.causal)
    cs = prune_clusters(cs, S, min_size=min_size, sim_floor=sim_floor)
    if require_linked:
        cs = drop_unlinked_clusters(cs, col.causal)
    cs = assign_topics(cs, col, S)
    return cs


def save_clusters(cs: ClusterSet, path: str | Path) -> None:
    doc = {
        "seed": cs.seed,
        "clusters": [
            {"cluster_id": cl.cluster_id, "topic": cl.topic,
             "members": sorted(cl.members)}
            for cl in sorted(cs.clusters, key=lambda c: c.cluster_id)
        ],
        "outliers": sorted(cs.outliers),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def load_clusters(path: str | Path) -> ClusterSet:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    clusters = [
        Cluster(cluster_id=rec["cluster_id"], members=set(rec["members"]),
                topic=rec.get("topic"))
        for rec in doc["clusters"]
    ]
    return ClusterSet(clusters=clusters, outliers=set(doc["outliers"]),
                      seed=doc.get("seed"))
