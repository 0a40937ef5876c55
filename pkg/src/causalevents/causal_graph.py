"""Cluster-level causal graphs.

Mention-level annotations are lifted to directed edges between clusters
(an edge exists as soon as one member causes a member of the other
cluster). The module also builds story-by-cluster co-occurrence matrices,
counts confounder/mediator/collider motifs, and extracts
frequency-thresholded subgraphs for discovery experiments.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clustering import ClusterSet
from .corpus import MentionCausalSet, StoryCollection
from .metrics import intercluster_count_matrix


class GraphError(ValueError):
    pass


@dataclass
class CausalGraph:
    nodes: list[str]
    edges: set[tuple[str, str]]
    counts: np.ndarray | None = None

    def __post_init__(self):
        node_set = set(self.nodes)
        for u, v in self.edges:
            if u == v:
                raise GraphError(f"self-edge on {u!r}")
            if u not in node_set or v not in node_set:
                raise GraphError(f"edge ({u!r}, {v!r}) references unknown node")

    def parents(self, v: str) -> set[str]:
        return {u for u, w in self.edges if w == v}

    def children(self, v: str) -> set[str]:
        return {w for u, w in self.edges if u == v}

    def adjacent(self, u: str, v: str) -> bool:
        return (u, v) in self.edges or (v, u) in self.edges


@dataclass
class CooccurrenceMatrix:
    story_ids: list[str]
    cluster_ids: list[str]
    values: np.ndarray
    mode: str = "count"

    def __post_init__(self):
        if self.mode not in ("count", "binary"):
            raise GraphError(f"unknown co-occurrence mode {self.mode!r}")
        if self.values.shape != (len(self.story_ids), len(self.cluster_ids)):
            raise GraphError("co-occurrence shape does not match labels")
        if self.mode == "binary" and not np.isin(self.values, (0, 1)).all():
            raise GraphError("binary co-occurrence entries must be 0/1")

    def binarized(self) -> "CooccurrenceMatrix":
        return CooccurrenceMatrix(
            story_ids=list(self.story_ids),
            cluster_ids=list(self.cluster_ids),
            values=(self.values > 0).astype(np.int64),
            mode="binary",
        )

    def document_frequency(self) -> np.ndarray:
        return (self.values > 0).sum(axis=0)


@dataclass
class StructureCensus:
    confounders: int
    mediators: int
    colliders: int
    convention: str


def lift_relations(cs: ClusterSet, causal: MentionCausalSet) -> CausalGraph:
    """Lift mention-level causal pairs to cluster-level directed edges."""
    where = cs.assignment()
    unassigned = sorted(
        {m for pair in causal.pairs for m in pair} - set(where)
        - set(cs.outliers)
    )
    if unassigned:
        warnings.warn(
            f"{len(unassigned)} annotated mention(s) are not in any cluster "
            f"or outlier set and were skipped: {unassigned[:5]}..."
        )
    edges = set()
    for cause, effect in causal.pairs:
        a, b = where.get(cause), where.get(effect)
        if a is None or b is None or a == b:
            continue
        edges.add((a, b))
    for u, v in sorted(edges):
        if (v, u) in edges and u < v:
            warnings.warn(f"bidirectional causal pair between clusters "
                          f"{u!r} and {v!r}")
    nodes = [cl.cluster_id for cl in cs.clusters]
    counts = intercluster_count_matrix(cs, causal)
    return CausalGraph(nodes=nodes, edges=edges, counts=counts)


def is_acyclic(g: CausalGraph) -> bool:
    """Topological-sort check for directed cycles."""
    indeg = {v: 0 for v in g.nodes}
    out: dict[str, list[str]] = {v: [] for v in g.nodes}
    for u, v in g.edges:
        indeg[v] += 1
        out[u].append(v)
    queue = [v for v in g.nodes if indeg[v] == 0]
    seen = 0
    while queue:
        v = queue.pop()
        seen += 1
        for w in out[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                queue.append(w)
    return seen == len(g.nodes)


def topological_order(g: CausalGraph) -> list[str]:
    indeg = {v: 0 for v in g.nodes}
    out: dict[str, list[str]] = {v: [] for v in g.nodes}
    for u, v in g.edges:
        indeg[v] += 1
        out[u].append(v)
    queue = sorted(v for v in g.nodes if indeg[v] == 0)
    order = []
    while queue:
        v = queue.pop(0)
        order.append(v)
        ready = []
        for w in out[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
        queue = sorted(queue + ready)
    if len(order) != len(g.nodes):
        raise GraphError("graph has a directed cycle")
    return order


def count_structures(g: CausalGraph,
                     convention: str = "default") -> StructureCensus:
    """Count confounder, mediator, and collider motifs around each center.

    Conventions:
      default      unordered outer pairs; colliders require non-adjacent
                   parents, confounders/mediators are unrestricted
      unrestricted unordered outer pairs, no adjacency requirement anywhere
      ordered      ordered outer pairs (doubles the symmetric motifs;
                   mediators are directional and unchanged)
    """
    if convention not in ("default", "unrestricted", "ordered"):
        raise GraphError(f"unknown census convention {convention!r}")
    if not is_acyclic(g):
        raise GraphError("structure census requires a DAG")
    confounders = mediators = colliders = 0
    for z in g.nodes:
        pa = sorted(g.parents(z))
        ch = sorted(g.children(z))
        confounders += len(ch) * (len(ch) - 1) // 2
        mediators += sum(1 for x in pa for y in ch if x != y)
        for i in range(len(pa)):
            for j in range(i + 1, len(pa)):
                if convention == "unrestricted" or not g.adjacent(pa[i], pa[j]):
                    colliders += 1
    if convention == "ordered":
        confounders, colliders = 2 * confounders, 2 * colliders
    return StructureCensus(confounders=confounders, mediators=mediators,
                           colliders=colliders, convention=convention)


def structure_census_audit(g: CausalGraph) -> dict[str, StructureCensus]:
    return {conv: count_structures(g, conv)
            for conv in ("default", "unrestricted", "ordered")}


def build_cooccurrence(col: StoryCollection, cs: ClusterSet,
                       mode: str = "count") -> CooccurrenceMatrix:
    """Story-by-cluster matrix of mention counts (or indicators)."""
    if not col.stories:
        raise GraphError("cannot build co-occurrence from an empty corpus")
    story_ids = sorted(col.stories)
    cluster_ids = sorted(cl.cluster_id for cl in cs.clusters)
    srow = {s: i for i, s in enumerate(story_ids)}
    ccol = {c: j for j, c in enumerate(cluster_ids)}
    where = cs.assignment()
    values = np.zeros((len(story_ids), len(cluster_ids)), dtype=np.int64)
    for mid, cid in where.items():
        values[srow[col.mentions[mid].story_id], ccol[cid]] += 1
    m = CooccurrenceMatrix(story_ids=story_ids, cluster_ids=cluster_ids,
                           values=values, mode="count")
    return m.binarized() if mode == "binary" else m


def frequency_subgraph(g: CausalGraph, m: CooccurrenceMatrix,
                       min_df: int) -> CausalGraph:
    """Subgraph of frequently occurring, causally connected nodes.

    Keeps nodes whose document frequency exceeds min_df, restricts edges
    to those nodes, then drops nodes left without any incident edge.
    """
    df = dict(zip(m.cluster_ids, m.document_frequency()))
    missing = [v for v in g.nodes if v not in df]
    if missing:
        raise GraphError(f"co-occurrence matrix lacks columns for {missing[:5]}")
    frequent = {v for v in g.nodes if df[v] > min_df}
    edges = {(u, v) for u, v in g.edges if u in frequent and v in frequent}
    connected = {u for u, _ in edges} | {v for _, v in edges}
    nodes = [v for v in g.nodes if v in connected]
    return CausalGraph(nodes=nodes, edges=edges)


def save_edges(g: CausalGraph, path: str | Path) -> None:
    """Edge list: one ``cause<TAB>effect`` row per line, plus isolated
    nodes as ``node<TAB>`` rows so the node set round-trips."""
    touched = {u for u, _ in g.edges} | {v for _, v in g.edges}
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in sorted(g.edges):
            fh.write(f"{u}\t{v}\n")
        for v in sorted(set(g.nodes) - touched):
            fh.write(f"{v}\t\n")


def load_edges(path: str | Path) -> CausalGraph:
    nodes: list[str] = []
    seen = set()
    edges = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            u, _, v = line.partition("\t")
            for node in (u, v):
                if node and node not in seen:
                    seen.add(node)
                    nodes.append(node)
            if v:
                edges.add((u, v))
    return CausalGraph(nodes=nodes, edges=edges)


def save_cooccurrence(m: CooccurrenceMatrix, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("story_id," + ",".join(m.cluster_ids) + "\n")
        for i, sid in enumerate(m.story_ids):
            row = ",".join(str(int(v)) for v in m.values[i])
            fh.write(f"{sid},{row}\n")


def load_cooccurrence(path: str | Path,
                      mode: str = "count") -> CooccurrenceMatrix:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        cluster_ids = header[1:] if header and header[0] == "story_id" \
            else header
        story_ids = []
        rows = []
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            story_ids.append(parts[0])
            rows.append([int(v) for v in parts[1:]])
    values = np.array(rows, dtype=np.int64).reshape(len(story_ids),
                                                    len(cluster_ids))
    m = CooccurrenceMatrix(story_ids=story_ids, cluster_ids=cluster_ids,
                           values=values, mode="count")
    return m.binarized() if mode == "binary" else m
