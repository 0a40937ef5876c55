import json

import numpy as np
import pytest

from causalevents.corpus import (
    EventMention,
    MentionCausalSet,
    Story,
    StoryCollection,
)
from causalevents.similarity import EmbeddingTable, ParaphraseTable


def write_corpus_file(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return path


@pytest.fixture
def tiny_corpus(tmp_path):
    """One story, two mentions, one causal pair."""
    path = tmp_path / "corpus.jsonl"
    write_corpus_file(path, [{
        "story_id": "s1",
        "sentences": ["Ann needed money.", "Ann got a job."],
        "mentions": [
            {"mention_id": "m1", "sentence_index": 0,
             "text": "Ann needed money",
             "generalization": "a person need money"},
            {"mention_id": "m2", "sentence_index": 1,
             "text": "Ann got a job",
             "generalization": "a person get a job"},
        ],
        "relations": [{"cause": "m1", "effect": "m2", "dimension": "1"}],
    }])
    return path


def make_collection(mention_clusters, causal_pairs, sentences_per_story=4):
    """Collection whose mentions come in named concept groups.

    mention_clusters: dict concept -> list of mention ids; every mention
    lands in its own story slot so indices stay valid.
    """
    mentions = {}
    stories = {}
    all_ids = [m for ids in mention_clusters.values() for m in ids]
    per_story = sentences_per_story
    for i in range(0, len(all_ids), per_story):
        sid = f"s{i // per_story}"
        chunk = all_ids[i:i + per_story]
        stories[sid] = Story(story_id=sid,
                             sentences=tuple(f"Sentence about {m}."
                                             for m in chunk))
        for k, mid in enumerate(chunk):
            concept = next(c for c, ids in mention_clusters.items()
                           if mid in ids)
            mentions[mid] = EventMention(
                mention_id=mid, story_id=sid, sentence_index=k,
                text=f"{mid} does {concept}",
                generalization=f"a person do {concept}")
    causal = MentionCausalSet(pairs=frozenset(causal_pairs))
    return StoryCollection(stories=stories, mentions=mentions, causal=causal)


def block_similarity(groups, within=0.9, across=0.0, causal_pairs=()):
    """SimilarityMatrix with block structure over the given groups."""
    from causalevents.similarity import SimilarityMatrix

    ids = sorted(m for ids in groups.values() for m in ids)
    concept_of = {m: c for c, ids in groups.items() for m in ids}
    n = len(ids)
    scores = np.full((n, n), across, dtype=np.float64)
    for i in range(n):
        for j in range(n):
            if concept_of[ids[i]] == concept_of[ids[j]]:
                scores[i, j] = within
    np.fill_diagonal(scores, 1.0)
    causal = set(causal_pairs)
    index = {m: i for i, m in enumerate(ids)}
    for c, e in causal:
        if c in index and e in index:
            scores[index[c], index[e]] = 0.0
            scores[index[e], index[c]] = 0.0
    return SimilarityMatrix(ids=ids, scores=scores)


@pytest.fixture
def embeddings_2d():
    return EmbeddingTable(vectors={
        "m1": np.array([1.0, 0.0]),
        "m2": np.array([0.0, 1.0]),
        "m3": np.array([1.0, 1.0]),
    }, dim=2)


@pytest.fixture
def empty_causal():
    return MentionCausalSet(pairs=frozenset())


@pytest.fixture
def paraphrases_default():
    return ParaphraseTable(scores={}, default=0.0)
