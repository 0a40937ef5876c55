"""
Phase 2 inputs: lifting relations and building co-occurrence data
=================================================================

Takes the Phase-1 abstractions, lifts mention-level annotations to a
cluster-level causal graph, counts its causal motifs, and derives the
story-by-abstraction co-occurrence matrix used by statistical discovery.
"""

from causalevents.causal_graph import (
    build_cooccurrence,
    frequency_subgraph,
    is_acyclic,
    lift_relations,
    structure_census_audit,
)
from causalevents.clustering import phase_one
from causalevents.similarity import SimilarityMatrix
from causalevents.synthetic import synth_corpus

col, embeddings, paraphrases = synth_corpus(seed=42, n_concepts=6,
                                            mentions_per_concept=(4, 7))
S = SimilarityMatrix.from_tables(sorted(col.mentions), embeddings,
                                 paraphrases, col.causal)
cs = phase_one(col, S, seed=7, min_size=2)

# A cluster A causes cluster B as soon as one mention of A is annotated
# as causing one mention of B.
graph = lift_relations(cs, col.causal)
print(f"graph: {len(graph.nodes)} nodes, {len(graph.edges)} edges, "
      f"acyclic: {is_acyclic(graph)}")
for u, v in sorted(graph.edges):
    print(f"  {u} -> {v}")

# Motif census under the three counting conventions. Colliders require
# non-adjacent parents under the default convention.
if is_acyclic(graph):
    for name, census in structure_census_audit(graph).items():
        print(f"census[{name}]: confounders={census.confounders} "
              f"mediators={census.mediators} colliders={census.colliders}")

# The co-occurrence matrix records how often each abstraction appears in
# each story (or a 0/1 indicator in binary mode).
counts = build_cooccurrence(col, cs, mode="count")
binary = build_cooccurrence(col, cs, mode="binary")
print(f"\nco-occurrence: {len(counts.story_ids)} stories x "
      f"{len(counts.cluster_ids)} abstractions")
print("document frequency per abstraction:",
      dict(zip(counts.cluster_ids, counts.document_frequency().tolist())))

# Discovery experiments work on frequency-thresholded subgraphs: keep
# abstractions that occur often enough and still have a causal neighbor.
for min_df in (0, 1, 2, 3):
    sub = frequency_subgraph(graph, counts, min_df=min_df)
    print(f"min_df > {min_df}: {len(sub.nodes)} nodes, "
          f"{len(sub.edges)} edges")
