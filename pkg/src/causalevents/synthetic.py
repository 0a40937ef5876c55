"""Synthetic corpora with known abstraction structure.

Generates stories whose mentions are drawn from latent concepts, along
with concept-aligned embeddings and paraphrase scores except for a
configurable amount of annotation noise (intra-concept causal pairs and
conflicting directions) that exercises the consistency post-processing.
Used by the test suite and the demo scripts; none of this is real corpus
data.
"""

from __future__ import annotations

import random

import numpy as np

from .corpus import EventMention, MentionCausalSet, Story, StoryCollection
from .similarity import EmbeddingTable, ParaphraseTable

_SUBJECTS = ("a person", "another person", "a child", "a friend")
_ACTIONS = ("need money", "get a job", "win a prize", "celebrate something",
            "fall down", "feel pain", "go to sleep", "wake up early",
            "cook a meal", "eat food", "clean a place", "invite a friend",
            "buy something", "lose something", "find something",
            "travel somewhere", "learn a skill", "help another person",
            "break something", "fix something")


def synth_corpus(seed: int,
                 n_concepts: int = 8,
                 mentions_per_concept: tuple[int, int] = (3, 6),
                 n_stories: int = 12,
                 concept_edge_prob: float = 0.35,
                 pair_density: float = 0.6,
                 noise_intra_pairs: int = 1,
                 noise_reverse_pairs: int = 1,
                 embedding_dim: int = 16,
                 embedding_noise: float = 0.05,
                 ) -> tuple[StoryCollection, EmbeddingTable, ParaphraseTable]:
    """Build a corpus whose ground-truth clusters are the concepts.

    Concepts form a random DAG; for each concept edge a fraction of the
    cross-concept mention pairs is annotated cause->effect. noise_*
    control extra annotations that violate causal consistency and must be
    repaired by the pipeline.
    """
    rng = random.Random(seed)
    n_concepts = max(2, n_concepts)
    concept_action = rng.sample(_ACTIONS, k=min(n_concepts, len(_ACTIONS)))
    while len(concept_action) < n_concepts:
        concept_action.append(f"do task {len(concept_action)}")

    # mentions per concept, with phrasing variants
    mention_ids: dict[int, list[str]] = {}
    texts: dict[str, str] = {}
    counter = 0
    for k in range(n_concepts):
        count = rng.randint(*mentions_per_concept)
        mention_ids[k] = []
        for _ in range(count):
            mid = f"m{counter:04d}"
            counter += 1
            subject = rng.choice(_SUBJECTS)
            texts[mid] = f"{subject} {concept_action[k]}"
            mention_ids[k].append(mid)

    # concept-level DAG over a shuffled order
    order = list(range(n_concepts))
    rng.shuffle(order)
    concept_edges = []
    for i in range(n_concepts):
        for j in range(i + 1, n_concepts):
            if rng.random() < concept_edge_prob:
                concept_edges.append((order[i], order[j]))
    if not concept_edges:
        concept_edges.append((order[0], order[1]))

    pairs: set[tuple[str, str]] = set()
    for a, b in concept_edges:
        added = 0
        for ma in mention_ids[a]:
            for mb in mention_ids[b]:
                if rng.random() < pair_density:
                    pairs.add((ma, mb))
                    added += 1
        if added == 0:  # every concept edge is witnessed at least once
            pairs.add((mention_ids[a][0], mention_ids[b][0]))

    # consistency-violating noise: intra-concept pairs and reversed links
    for _ in range(noise_intra_pairs):
        k = rng.randrange(n_concepts)
        if len(mention_ids[k]) >= 2:
            a, b = rng.sample(mention_ids[k], 2)
            if (b, a) not in pairs:
                pairs.add((a, b))
    for _ in range(noise_reverse_pairs):
        a, b = rng.choice(concept_edges)
        ma = rng.choice(mention_ids[b])
        mb = rng.choice(mention_ids[a])
        if (mb, ma) not in pairs:
            pairs.add((ma, mb))

    # scatter mentions over stories
    all_mentions = [m for k in range(n_concepts) for m in mention_ids[k]]
    rng.shuffle(all_mentions)
    n_stories = max(1, min(n_stories, len(all_mentions)))
    buckets: list[list[str]] = [[] for _ in range(n_stories)]
    for i, mid in enumerate(all_mentions):
        buckets[i % n_stories].append(mid)

    stories = {}
    mentions = {}
    for s, bucket in enumerate(buckets):
        sid = f"s{s:03d}"
        sentences = []
        for idx, mid in enumerate(sorted(bucket)):
            sentences.append(f"{texts[mid].capitalize()}.")
            mentions[mid] = EventMention(
                mention_id=mid, story_id=sid, sentence_index=idx,
                text=texts[mid], generalization=texts[mid])
        if not sentences:
            sentences = ["Nothing happened."]
        stories[sid] = Story(story_id=sid, sentences=tuple(sentences))

    causal = MentionCausalSet(pairs=frozenset(pairs))
    col = StoryCollection(stories=stories, mentions=mentions, causal=causal)

    # concept-aligned embeddings and paraphrase scores
    np_rng = np.random.default_rng(seed)
    bases = np_rng.normal(size=(n_concepts, embedding_dim))
    bases /= np.linalg.norm(bases, axis=1, keepdims=True)
    vectors = {}
    for k in range(n_concepts):
        for mid in mention_ids[k]:
            vec = bases[k] + embedding_noise * np_rng.normal(
                size=embedding_dim)
            vectors[mid] = vec / np.linalg.norm(vec)
    emb = EmbeddingTable(vectors=vectors, dim=embedding_dim)

    scores = {}
    for k in range(n_concepts):
        ids = mention_ids[k]
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                scores[(ids[i], ids[j])] = round(rng.uniform(0.85, 0.99), 4)
    phr = ParaphraseTable(scores=scores, default=0.0)
    return col, emb, phr


def concept_labels(col: StoryCollection) -> dict[str, str]:
    """Ground-truth concept of each mention, recovered from its text."""
    return {mid: m.generalization.split(" ", 2)[-1]
            for mid, m in col.mentions.items()}
