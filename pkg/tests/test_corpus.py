import random

import pytest

from causalevents.corpus import (
    CAUSED_BY,
    CAUSES,
    NO_RELATION,
    CorpusFormatError,
    IntegrityError,
    MentionCausalSet,
    load_stories,
    mention_relation,
    normalize_mention,
    serialize,
)

from conftest import write_corpus_file


def test_round_trip_sizes(tiny_corpus):
    col = load_stories(tiny_corpus)
    assert (len(col.stories), len(col.mentions), len(col.causal)) == (1, 2, 1)


def test_serialize_round_trip(tiny_corpus, tmp_path):
    col = load_stories(tiny_corpus)
    out = tmp_path / "copy.jsonl"
    serialize(col, out)
    col2 = load_stories(out)
    assert col2.stories == col.stories
    assert col2.mentions == col.mentions
    assert col2.causal.pairs == col.causal.pairs
    # serialization is stable: a second round trip is byte-identical
    out2 = tmp_path / "copy2.jsonl"
    serialize(col2, out2)
    assert out.read_bytes() == out2.read_bytes()


def test_unknown_story_reference(tmp_path):
    path = write_corpus_file(tmp_path / "bad.jsonl", [{
        "story_id": "s1",
        "sentences": ["One sentence."],
        "mentions": [{"mention_id": "m1", "story_id": "ghost",
                      "sentence_index": 0, "text": "t",
                      "generalization": "g"}],
        "relations": [],
    }])
    with pytest.raises(IntegrityError, match="ghost"):
        load_stories(path)


def test_dangling_relation_named(tmp_path):
    path = write_corpus_file(tmp_path / "bad.jsonl", [{
        "story_id": "s1",
        "sentences": ["One sentence."],
        "mentions": [{"mention_id": "m1", "sentence_index": 0,
                      "text": "t", "generalization": "g"}],
        "relations": [{"cause": "m1", "effect": "m9"}],
    }])
    with pytest.raises(IntegrityError, match="m9"):
        load_stories(path)


def test_duplicate_story_rejected_with_line(tmp_path):
    rec = {"story_id": "s1", "sentences": ["A."], "mentions": [],
           "relations": []}
    path = write_corpus_file(tmp_path / "dup.jsonl", [rec, rec])
    with pytest.raises(CorpusFormatError, match="line 2"):
        load_stories(path)


def test_parse_error_names_line(tmp_path):
    path = tmp_path / "broken.jsonl"
    path.write_text('{"story_id": "s1", "sentences": ["A."]}\nnot json\n')
    with pytest.raises(CorpusFormatError, match="line 2"):
        load_stories(path)


def test_sentence_index_bounds(tmp_path):
    path = write_corpus_file(tmp_path / "bad.jsonl", [{
        "story_id": "s1",
        "sentences": ["Only one."],
        "mentions": [{"mention_id": "m1", "sentence_index": 3,
                      "text": "t", "generalization": "g"}],
        "relations": [],
    }])
    with pytest.raises(IntegrityError, match="sentence_index"):
        load_stories(path)


def test_two_cycle_rejected():
    with pytest.raises(IntegrityError, match="contradictory"):
        MentionCausalSet(pairs=frozenset({("a", "b"), ("b", "a")}))


def test_self_pair_rejected():
    with pytest.raises(IntegrityError, match="self-causal"):
        MentionCausalSet(pairs=frozenset({("a", "a")}))


class TestNormalizeMention:
    def test_lemmatized_lowercased(self):
        assert normalize_mention("He went to sleep") == "he go to sleep"

    def test_already_normalized_fixed_point(self):
        assert normalize_mention("a person get a job") == "a person get a job"

    def test_empty_is_error(self):
        with pytest.raises(ValueError):
            normalize_mention("")
        with pytest.raises(ValueError):
            normalize_mention("   ")

    def test_whitespace_collapsed(self):
        assert normalize_mention("He   went\tto  sleep") == "he go to sleep"

    def test_unknown_tokens_pass_through(self):
        assert normalize_mention("Zorblat frobnicates") == \
            "zorblat frobnicates"

    def test_idempotent_on_random_phrases(self):
        rng = random.Random(7)
        words = ["He", "went", "children", "eating", "ZZZ", "bought",
                 "stories", "was", "friends", "tried", "to", "the"]
        for _ in range(200):
            phrase = " ".join(rng.choices(words, k=rng.randint(1, 8)))
            once = normalize_mention(phrase)
            assert normalize_mention(once) == once


def test_mention_relation_lookup():
    causal = MentionCausalSet(pairs=frozenset({("x", "y")}))
    assert mention_relation("x", "y", causal) == CAUSES
    assert mention_relation("y", "x", causal) == CAUSED_BY
    assert mention_relation("x", "z", causal) == NO_RELATION


def test_mention_relation_unknown_id():
    causal = MentionCausalSet(pairs=frozenset({("x", "y")}))
    with pytest.raises(IntegrityError, match="w"):
        mention_relation("x", "w", causal, known={"x", "y"})


def test_relation_antisymmetry_property():
    rng = random.Random(3)
    ids = [f"m{i}" for i in range(12)]
    pairs = set()
    while len(pairs) < 15:
        a, b = rng.sample(ids, 2)
        if (b, a) not in pairs:
            pairs.add((a, b))
    causal = MentionCausalSet(pairs=frozenset(pairs))
    for c, e in pairs:
        assert mention_relation(c, e, causal) == CAUSES
        assert mention_relation(e, c, causal) == CAUSED_BY
