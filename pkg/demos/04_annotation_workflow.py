"""
Annotation workflow: tasks, voting, escalation, agreement
=========================================================

Simulates the human refinement loop: cluster batches go to pairs of
annotators, their sub-clusterings are unified, candidate causal pairs
are voted on by three annotators, and full disagreements are re-queued
with story contexts.
"""

from causalevents.annotation import (
    TaskStore,
    generate_tasks,
    krippendorff_alpha,
    unify_subclusterings,
)
from causalevents.causal_graph import lift_relations
from causalevents.clustering import phase_one
from causalevents.similarity import SimilarityMatrix
from causalevents.synthetic import synth_corpus

col, embeddings, paraphrases = synth_corpus(seed=42, n_concepts=6,
                                            mentions_per_concept=(4, 7))
S = SimilarityMatrix.from_tables(sorted(col.mentions), embeddings,
                                 paraphrases, col.causal)
cs = phase_one(col, S, seed=7, min_size=2)
graph = lift_relations(cs, col.causal)

# Batch the clusters for sub-clustering (two annotators per batch) and
# fan every candidate causal pair out to three annotators.
tasks = generate_tasks(
    cs, annotators=["ann1", "ann2", "ann3"], batch_size=60,
    causal_pairs=sorted(graph.edges),
    topics={cl.cluster_id: cl.topic for cl in cs.clusters})
print(f"{len(tasks)} tasks "
      f"({sum(t.kind == 'subcluster' for t in tasks)} sub-clustering, "
      f"{sum(t.kind == 'causal_pair' for t in tasks)} causal)")

store = TaskStore(tasks, col=col, cs=cs)

# Two annotators sub-cluster the same batch; their results are unified
# around random centroids, keeping only co-assigned events together.
sub = next(t for t in tasks if t.kind == "subcluster")
members = sub.payload["members"]
r1 = {"groups": [{"members": members, "topic": "everything together"}],
      "outliers": []}
r2 = {"groups": [{"members": members[:2], "topic": "a tighter reading"}],
      "outliers": members[2:]} if len(members) > 2 else r1
unified = unify_subclusterings(r1, r2, seed=3)
print("\nunified sub-clustering:", unified)

# Three annotators vote on each causal pair. One pair is made maximally
# contentious to trigger the escalation path.
causal_tasks = [t for t in tasks if t.kind == "causal_pair"]
for i, task in enumerate(causal_tasks):
    if i == 0:
        labels = ["a_causes_b", "b_causes_a", "none"]   # full disagreement
    else:
        labels = ["a_causes_b", "a_causes_b", "a_causes_b"]
    for annotator, label in zip(task.assigned_to, labels):
        store.submit(task.task_id, annotator, {"label": label})

print("\nescalated pairs:", store.escalations())
reeval_id = f"reeval-{causal_tasks[0].task_id}"
reeval = store.tasks[reeval_id]
print(f"re-evaluation task {reeval_id} carries "
      f"{len(reeval.payload['contexts'])} story context(s)")

# With contexts in hand the annotators converge.
for annotator in reeval.assigned_to:
    store.submit(reeval_id, annotator, {"label": "a_causes_b"})

print("\nfinal labels:", store.final_labels())
print("Krippendorff's alpha over causal labels:",
      round(store.agreement(), 3))

# The same alpha, computed directly on a reliability matrix.
data = store.reliability_data()
print("alpha recomputed:", round(krippendorff_alpha(data), 3))
