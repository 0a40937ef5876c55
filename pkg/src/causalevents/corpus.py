"""Story corpus data model and line-delimited ingestion.

A corpus file carries one JSON record per line:

    {"story_id": ..., "sentences": [...], "source": ...,
     "mentions": [{"mention_id", "sentence_index", "text", "generalization"}],
     "relations": [{"cause", "effect", "dimension"}]}

Relations are directed mention-level cause->effect pairs. The loaded
collection is immutable and safe to share across workers.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

CAUSES = "causes"
CAUSED_BY = "caused_by"
NO_RELATION = "none"


class CorpusError(ValueError):
    """Base class for corpus loading and validation failures."""


class CorpusFormatError(CorpusError):
    """A record could not be parsed; carries the offending line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class IntegrityError(CorpusError):
    """A reference points at an id that does not exist."""


@dataclass(frozen=True)
class Story:
    story_id: str
    sentences: tuple[str, ...]
    source: str | None = None

    def __post_init__(self):
        if not self.sentences:
            raise CorpusError(f"story {self.story_id!r} has no sentences")


@dataclass(frozen=True)
class EventMention:
    mention_id: str
    story_id: str
    sentence_index: int
    text: str
    generalization: str = ""
    abstraction_hint: str | None = None


@dataclass(frozen=True)
class MentionCausalSet:
    """Directed mention-level causal annotations, stored cause->effect once."""

    pairs: frozenset[tuple[str, str]]
    dimensions: dict[tuple[str, str], str] = field(default_factory=dict)

    def __post_init__(self):
        for cause, effect in self.pairs:
            if cause == effect:
                raise IntegrityError(f"self-causal pair on mention {cause!r}")
            if (effect, cause) in self.pairs:
                raise IntegrityError(
                    f"contradictory annotations: both {cause!r}->{effect!r} "
                    f"and {effect!r}->{cause!r}"
                )

    def __len__(self):
        return len(self.pairs)

    def __contains__(self, pair):
        return pair in self.pairs

    def is_causal(self, x: str, y: str) -> bool:
        """True when x and y are annotated in either direction."""
        return (x, y) in self.pairs or (y, x) in self.pairs


@dataclass(frozen=True)
class StoryCollection:
    stories: dict[str, Story]
    mentions: dict[str, EventMention]
    causal: MentionCausalSet

    def __post_init__(self):
        for m in self.mentions.values():
            story = self.stories.get(m.story_id)
            if story is None:
                raise IntegrityError(
                    f"mention {m.mention_id!r} references unknown story "
                    f"{m.story_id!r}"
                )
            if not 0 <= m.sentence_index < len(story.sentences):
                raise IntegrityError(
                    f"mention {m.mention_id!r} has sentence_index "
                    f"{m.sentence_index} outside story {m.story_id!r}"
                )
        for cause, effect in self.causal.pairs:
            for mid in (cause, effect):
                if mid not in self.mentions:
                    raise IntegrityError(
                        f"causal pair references unknown mention {mid!r}"
                    )

    def mentions_of_story(self, story_id: str) -> list[EventMention]:
        out = [m for m in self.mentions.values() if m.story_id == story_id]
        out.sort(key=lambda m: (m.sentence_index, m.mention_id))
        return out


def load_stories(path: str | Path) -> StoryCollection:
    """Load and validate a line-delimited corpus file."""
    stories: dict[str, Story] = {}
    mentions: dict[str, EventMention] = {}
    pairs: set[tuple[str, str]] = set()
    dimensions: dict[tuple[str, str], str] = {}

    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(line_no, f"invalid JSON ({exc.msg})")
            if not isinstance(rec, dict) or "story_id" not in rec:
                raise CorpusFormatError(line_no, "record is not a story object")
            sid = str(rec["story_id"])
            if sid in stories:
                raise CorpusFormatError(line_no, f"duplicate story_id {sid!r}")
            try:
                story = Story(
                    story_id=sid,
                    sentences=tuple(str(s) for s in rec["sentences"]),
                    source=rec.get("source"),
                )
            except (KeyError, TypeError, CorpusError) as exc:
                raise CorpusFormatError(line_no, str(exc))
            stories[sid] = story
            for mrec in rec.get("mentions", ()):
                try:
                    mid = str(mrec["mention_id"])
                    mention = EventMention(
                        mention_id=mid,
                        story_id=str(mrec.get("story_id", sid)),
                        sentence_index=int(mrec["sentence_index"]),
                        text=str(mrec["text"]),
                        generalization=str(mrec.get("generalization", "")),
                        abstraction_hint=mrec.get("abstraction_hint"),
                    )
                except (KeyError, TypeError, ValueError) as exc:
                    raise CorpusFormatError(line_no, f"bad mention: {exc}")
                if mid in mentions:
                    raise CorpusFormatError(
                        line_no, f"duplicate mention_id {mid!r}"
                    )
                mentions[mid] = mention
            for rrec in rec.get("relations", ()):
                try:
                    pair = (str(rrec["cause"]), str(rrec["effect"]))
                except (KeyError, TypeError) as exc:
                    raise CorpusFormatError(line_no, f"bad relation: {exc}")
                pairs.add(pair)
                if "dimension" in rrec:
                    dimensions[pair] = str(rrec["dimension"])

    causal = MentionCausalSet(pairs=frozenset(pairs), dimensions=dimensions)
    return StoryCollection(stories=stories, mentions=mentions, causal=causal)


def serialize(col: StoryCollection, path: str | Path) -> None:
    """Write a collection back to the line-delimited format (stable order)."""
    by_story: dict[str, list[EventMention]] = {sid: [] for sid in col.stories}
    for m in col.mentions.values():
        by_story[m.story_id].append(m)
    rel_by_story: dict[str, list[tuple[str, str]]] = {s: [] for s in col.stories}
    for cause, effect in sorted(col.causal.pairs):
        rel_by_story[col.mentions[cause].story_id].append((cause, effect))

    with open(path, "w", encoding="utf-8") as fh:
        for sid in sorted(col.stories):
            story = col.stories[sid]
            rec = {
                "story_id": sid,
                "sentences": list(story.sentences),
                "mentions": [
                    {
                        "mention_id": m.mention_id,
                        "sentence_index": m.sentence_index,
                        "text": m.text,
                        "generalization": m.generalization,
                    }
                    for m in sorted(by_story[sid], key=lambda m: m.mention_id)
                ],
                "relations": [
                    {
                        "cause": c,
                        "effect": e,
                        **(
                            {"dimension": col.causal.dimensions[(c, e)]}
                            if (c, e) in col.causal.dimensions
                            else {}
                        ),
                    }
                    for c, e in rel_by_story[sid]
                ],
            }
            if story.source is not None:
                rec["source"] = story.source
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


_LEMMA_TABLE: dict[str, str] | None = None


def _lemma_table() -> dict[str, str]:
    global _LEMMA_TABLE
    if _LEMMA_TABLE is None:
        table = {}
        text = (
            resources.files("causalevents").joinpath("data/lemmas.tsv")
            .read_text(encoding="utf-8")
        )
        for row in text.splitlines():
            if not row or row.startswith("#"):
                continue
            form, base = row.split("\t")
            table[form] = base
        _LEMMA_TABLE = table
    return _LEMMA_TABLE


def normalize_mention(text: str) -> str:
    """Lowercase, collapse whitespace, and map each token to its base form.

    Unknown tokens pass through unchanged; the result is idempotent.
    """
    if not text or not text.strip():
        raise ValueError("cannot normalize empty mention text")
    table = _lemma_table()
    tokens = re.split(r"\s+", text.strip().lower())
    return " ".join(table.get(tok, tok) for tok in tokens)


def mention_relation(x: str, y: str, causal: MentionCausalSet,
                     known: set[str] | None = None) -> str:
    """Directed relation between two mentions: causes / caused_by / none."""
    if known is not None:
        for mid in (x, y):
            if mid not in known:
                raise IntegrityError(f"unknown mention {mid!r}")
    if (x, y) in causal.pairs:
        return CAUSES
    if (y, x) in causal.pairs:
        return CAUSED_BY
    return NO_RELATION
