"""Prepare a service state directory for the UI end-to-end tests.

Builds a small corpus with six abstractions (three per sub-clustering
batch), five candidate causal pairs whose clusters share stories, and the
task file consumed by `causalevents annotate serve`.
"""

import sys
from pathlib import Path

from causalevents.annotation import generate_tasks
from causalevents.clustering import Cluster, ClusterSet, save_clusters
from causalevents.corpus import (
    EventMention,
    MentionCausalSet,
    Story,
    StoryCollection,
    serialize,
)
from causalevents.service import save_tasks

CONCEPTS = [
    ("need", "a person need money"),
    ("job", "a person get a job"),
    ("party", "a person celebrate something"),
    ("fall", "a person fall down"),
    ("pain", "a person feel pain"),
    ("cook", "a person cook a meal"),
]
CLUSTER_EDGES = [(0, 1), (1, 2), (3, 4), (4, 5), (0, 3)]


def main(out_dir: str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    mention_ids = {k: [f"m{k}{j}" for j in range(3)] for k in range(6)}
    texts = {}
    for k, (_, phrase) in enumerate(CONCEPTS):
        for j, mid in enumerate(mention_ids[k]):
            texts[mid] = f"{phrase} variant {j}"

    # each causal cluster pair shares one story so re-evaluation tasks
    # always have contexts to show
    stories = {}
    mentions = {}
    placed = set()
    for s, (a, b) in enumerate(CLUSTER_EDGES):
        sid = f"s{s:02d}"
        pair = [mention_ids[a][s % 3], mention_ids[b][s % 3]]
        pair = [m for m in pair if m not in placed] or \
            [mention_ids[a][(s + 1) % 3], mention_ids[b][(s + 1) % 3]]
        sentences = []
        for idx, mid in enumerate(pair):
            if mid in placed:
                continue
            sentences.append(f"{texts[mid].capitalize()}.")
            mentions[mid] = EventMention(
                mention_id=mid, story_id=sid, sentence_index=len(sentences) - 1,
                text=texts[mid], generalization=texts[mid])
            placed.add(mid)
        stories[sid] = Story(story_id=sid, sentences=tuple(sentences))

    rest = [m for ids in mention_ids.values() for m in ids
            if m not in placed]
    for s, chunk_start in enumerate(range(0, len(rest), 3)):
        sid = f"r{s:02d}"
        chunk = rest[chunk_start:chunk_start + 3]
        sentences = []
        for idx, mid in enumerate(chunk):
            sentences.append(f"{texts[mid].capitalize()}.")
            mentions[mid] = EventMention(
                mention_id=mid, story_id=sid, sentence_index=idx,
                text=texts[mid], generalization=texts[mid])
        stories[sid] = Story(story_id=sid, sentences=tuple(sentences))

    pairs = set()
    for a, b in CLUSTER_EDGES:
        pairs.add((mention_ids[a][0], mention_ids[b][0]))
    col = StoryCollection(stories=stories, mentions=mentions,
                          causal=MentionCausalSet(pairs=frozenset(pairs)))
    serialize(col, out / "corpus.jsonl")

    clusters = [
        Cluster(f"c{k}", set(mention_ids[k]), topic=CONCEPTS[k][1])
        for k in range(6)
    ]
    cs = ClusterSet(clusters=clusters, outliers=set(), seed=0)
    save_clusters(cs, out / "clusters.json")

    tasks = generate_tasks(
        cs,
        annotators=["ann1", "ann2", "ann3"],
        batch_size=3,
        causal_pairs=[(f"c{a}", f"c{b}") for a, b in CLUSTER_EDGES],
        topics={cl.cluster_id: cl.topic for cl in clusters},
        members_text=texts,
    )
    save_tasks(tasks, out / "tasks.json")
    print(f"fixture: {len(tasks)} tasks in {out}")


if __name__ == "__main__":
    main(sys.argv[1])
