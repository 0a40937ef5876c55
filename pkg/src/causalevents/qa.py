"""Multi-choice causal QA construction, prompting, parsing, and scoring.

Questions are built from annotated story pairs: for every cause-effect
pair the harness emits one question about the cause and one about the
effect, with the story's sentences as candidate answers. Prompts follow
fixed templates (pairwise 3-way discovery, zero-shot chain-of-thought QA,
a bi-level variant for abstract questions, and a 3-step generalization
prompt); an optional hint line injects a causal-graph neighbor. Model
access goes through a thin HTTP client with a deterministic mock mode.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

from .causal_graph import CausalGraph, CooccurrenceMatrix
from .clustering import ClusterSet
from .corpus import MentionCausalSet, StoryCollection, normalize_mention
from .similarity import EmbeddingTable, ParaphraseTable, combined_similarity

LABEL_A_CAUSES_B = "a_causes_b"
LABEL_B_CAUSES_A = "b_causes_a"
LABEL_NONE = "none"
CAUSAL_LABELS = (LABEL_A_CAUSES_B, LABEL_B_CAUSES_A, LABEL_NONE)

PARSE_FAILURE = "parse_failure"

TEMPLATES = ("pairwise", "specific_cot", "abstract_cot", "abstract_bilevel",
             "abstraction_3step")


class QaError(ValueError):
    pass


@dataclass
class QaItem:
    question_id: str
    story_text: str
    question_kind: str            # "specific" or "abstract"
    direction: str                # asking for the "cause" or the "effect"
    target: str                   # mention text or generalization
    choices: list[str]
    gold: set[int]
    cg_hint: tuple[str, str] | None = None   # (target abstraction, neighbor)

    def __post_init__(self):
        if self.question_kind not in ("specific", "abstract"):
            raise QaError(f"unknown question kind {self.question_kind!r}")
        if self.direction not in ("cause", "effect"):
            raise QaError(f"unknown direction {self.direction!r}")
        if len(self.choices) < 2:
            raise QaError("a question needs at least 2 choices")
        if not self.gold or not all(0 <= g < len(self.choices)
                                    for g in self.gold):
            raise QaError("gold indices must be a non-empty subset of choices")


@dataclass
class DiscoveryItem:
    pair_id: str
    event_a: str
    event_b: str
    gold: str

    def __post_init__(self):
        if self.event_a == self.event_b:
            raise QaError("pair events must differ")
        if self.gold not in CAUSAL_LABELS:
            raise QaError(f"gold label {self.gold!r} outside {CAUSAL_LABELS}")


def build_qa(col: StoryCollection,
             paraphrases: dict[str, str] | None = None,
             kind: str = "specific",
             extras: dict[str, set[int]] | None = None) -> list[QaItem]:
    """One cause-question and one effect-question per annotated pair.

    Choices are the story's sentences; the gold answer is the sentence of
    the annotated counterpart mention plus any expert-supplied extras.
    When a paraphrased story text is provided it replaces the context
    while the choices stay in their original wording.
    """
    items = []
    for cause_id, effect_id in sorted(col.causal.pairs):
        cause = col.mentions[cause_id]
        effect = col.mentions[effect_id]
        if cause.story_id != effect.story_id:
            continue  # questions need a shared story context
        story = col.stories[cause.story_id]
        story_text = (paraphrases or {}).get(story.story_id,
                                             " ".join(story.sentences))
        choices = list(story.sentences)
        for direction, about, answer in (
            ("cause", effect, cause),
            ("effect", cause, effect),
        ):
            qid = f"{cause_id}-{effect_id}-{direction}"
            gold = {answer.sentence_index}
            if extras and qid in extras:
                gold |= set(extras[qid])
            target = about.text if kind == "specific" \
                else (about.generalization or about.text)
            items.append(QaItem(
                question_id=qid,
                story_text=story_text,
                question_kind=kind,
                direction=direction,
                target=target,
                choices=choices,
                gold=gold,
            ))
    return items


# ---------------------------------------------------------------------------
# Prompt templates

_COT_CLOSING = (
    "Let's work this out in a step-by-step way to be sure that we have the "
    "right answer. Then provide your final answer beginning with 'The "
    "correct answer(s):' followed by a list of the indices of the correct "
    "answers."
)

PAIRWISE_TEMPLATE = (
    "Given the two events:\n"
    "event_a: {event_a}\n"
    "event_b: {event_b}\n"
    "Which cause-and-effect relationship is more likely between two "
    "events?\n"
    "A. event_a causes event_b.\n"
    "B. event_b causes event_a.\n"
    "C. There are no cause-effect relation between two events.\n"
    "Let's work this out in a step by step way to be sure that we have the "
    "right answer. Then provide one final answer within the tags "
    "<answer>A or B or C</answer>."
)

SPECIFIC_COT_TEMPLATE = (
    "Given the following story: {story}.\n"
    "What could be the {direction} of the event {target}?\n"
    "Choose one or more correct answers out of the following choices:\n"
    "{choices}.\n"
    "{cg_hint}" + _COT_CLOSING
)

ABSTRACT_COT_TEMPLATE = (
    "Given the following story: {story}.\n"
    "The story describes an event where {target}. What could be the "
    "{direction} of the event?\n"
    "Choose one or more correct answers out of the following choices:\n"
    "{choices}.\n"
    "{cg_hint}" + _COT_CLOSING
)

ABSTRACT_BILEVEL_TEMPLATE = (
    "Given the following story: {story}.\n"
    "The story describes an event where {target}. What could be the "
    "{direction} of the event?\n"
    "Choose one or more correct answers out of the following choices:\n"
    "{choices}.\n"
    "{cg_hint}"
    "The event {target} is described by one of the sentences in the story "
    "context. First identify that part of the story. Then retrieve the "
    "event mentioned in the story that is a corresponding {direction}.\n"
    + _COT_CLOSING
)

CG_HINT_TEMPLATE = (
    "This information can help answer the question: A possible {direction} "
    "of the event {source} is {neighbor}.\n"
)

ABSTRACTION_3STEP_TEMPLATE = (
    "We need to convert the input sentence into a more general expression. "
    "The conversion consists of three steps.\n"
    "First, identifying: identify entities and verb words.\n"
    "Second, conversion: convert the entities with more generic words and "
    "transform the verb words into the base form.\n"
    "Third, further conversion: convert the sentence into a more general "
    "expression.\n"
    "Note: The generic expressions used in the conversion are placeholders "
    "for the specific details in the original sentence.\n"
    "----------------------------------------------------------\n"
    "The following is a conversion example.\n"
    "Original Sentence: John went to buy a new collar for his dog.\n"
    "1. Identifying:\n"
    "- Person: John\n"
    "- Action: went, buy\n"
    "- Object: a new collar\n"
    "- Possession: his dog\n"
    "2. Conversion: a person go to buy another thing for something\n"
    "3. Further Conversion: a person buy something to do something\n"
    "----------------------------------------------------------\n"
    "The following is another example.\n"
    "Original Sentence: John drives near the woman.\n"
    "1. Identifying:\n"
    "- Person: John\n"
    "- Action: drives\n"
    "- Object: the woman\n"
    "- Preposition: near\n"
    "2. Conversion: a person see another person\n"
    "3. Further Conversion: a person see another person\n"
    "----------------------------------------------------------\n"
    "Now we have a test instance. Please refer to the task instruction and "
    "the above examples to do the conversion.\n"
    "The input sentence is: {sentence}.\n"
    "Please convert the sentence into a more general expression following "
    "the above-mentioned three steps."
)


def _format_choices(choices: list[str]) -> str:
    return ",\n".join(f'{i}: "{c}"' for i, c in enumerate(choices))


def render_prompt(item, template: str, with_cg: bool = False) -> str:
    """Fill the named template from an item; optionally add the hint line."""
    if template not in TEMPLATES:
        raise QaError(f"unknown template {template!r}")
    if template == "pairwise":
        if not isinstance(item, DiscoveryItem):
            raise QaError("pairwise template needs a DiscoveryItem")
        return PAIRWISE_TEMPLATE.format(event_a=item.event_a,
                                        event_b=item.event_b)
    if template == "abstraction_3step":
        sentence = item if isinstance(item, str) else item.target
        return ABSTRACTION_3STEP_TEMPLATE.format(sentence=sentence)

    if not isinstance(item, QaItem):
        raise QaError(f"{template} template needs a QaItem")
    if template == "specific_cot" and item.question_kind != "specific":
        raise QaError("specific_cot template needs a specific question")
    if template in ("abstract_cot", "abstract_bilevel") \
            and item.question_kind != "abstract":
        raise QaError(f"{template} template needs an abstract question")
    hint = ""
    if with_cg:
        if item.cg_hint is None:
            raise QaError(f"question {item.question_id} has no causal-graph "
                          "hint")
        source, neighbor = item.cg_hint
        hint = CG_HINT_TEMPLATE.format(direction=item.direction,
                                       source=source, neighbor=neighbor)
    tpl = {"specific_cot": SPECIFIC_COT_TEMPLATE,
           "abstract_cot": ABSTRACT_COT_TEMPLATE,
           "abstract_bilevel": ABSTRACT_BILEVEL_TEMPLATE}[template]
    return tpl.format(story=item.story_text, direction=item.direction,
                      target=item.target,
                      choices=_format_choices(item.choices), cg_hint=hint)


_ANSWER_TAG = re.compile(r"<answer>\s*([ABC])\s*</answer>", re.IGNORECASE)
_QA_MARKER = "The correct answer(s):"


def parse_answer(text: str, kind: str):
    """Extract the final decision from model output.

    Pairwise outputs carry ``<answer>X</answer>`` tags (the last
    well-formed tag wins); QA outputs list indices after the final
    ``The correct answer(s):`` marker. Unparseable output returns the
    parse-failure marker, which scores as an empty prediction.
    """
    if kind == "pairwise":
        matches = _ANSWER_TAG.findall(text)
        if not matches:
            return PARSE_FAILURE
        return {"A": LABEL_A_CAUSES_B, "B": LABEL_B_CAUSES_A,
                "C": LABEL_NONE}[matches[-1].upper()]
    if kind == "qa":
        pos = text.rfind(_QA_MARKER)
        if pos < 0:
            return PARSE_FAILURE
        tail = text[pos + len(_QA_MARKER):]
        for line in tail.splitlines()[:3] or [tail]:
            found = re.findall(r"\d+", line)
            if found:
                return {int(v) for v in found}
        return PARSE_FAILURE
    raise QaError(f"unknown answer kind {kind!r}")


# ---------------------------------------------------------------------------
# Scoring


def score_qa(preds: dict[str, set[int]],
             gold: dict[str, set[int]]) -> dict[str, float]:
    """Accuracy (any correct choice retrieved) and support-weighted F1.

    The weighted F1 treats every choice index as a binary label over
    questions and averages the per-label F1 scores weighted by the number
    of gold questions carrying that label.
    """
    if set(preds) != set(gold):
        raise QaError("prediction and gold question ids differ")
    if not gold:
        raise QaError("nothing to score")
    hits = sum(1 for q in gold if preds[q] & gold[q])
    accuracy = hits / len(gold)

    labels = sorted({c for g in gold.values() for c in g})
    weighted = 0.0
    support_total = 0
    for c in labels:
        tp = sum(1 for q in gold if c in gold[q] and c in preds[q])
        fp = sum(1 for q in gold if c not in gold[q] and c in preds[q])
        fn = sum(1 for q in gold if c in gold[q] and c not in preds[q])
        support = tp + fn
        f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn > 0 else 0.0
        weighted += support * f1
        support_total += support
    return {"accuracy": accuracy,
            "weighted_f1": weighted / support_total if support_total else 0.0}


def classification_report(preds: list[str],
                          gold: list[str]) -> dict[str, float]:
    """Macro precision/recall/F1 over the three causal labels.

    Parse failures in the predictions count as empty predictions (a miss
    for the gold class, no false positive anywhere).
    """
    if len(preds) != len(gold):
        raise QaError("prediction and gold lists differ in length")
    for lab in gold:
        if lab not in CAUSAL_LABELS:
            raise QaError(f"gold label {lab!r} outside {CAUSAL_LABELS}")
    for lab in preds:
        if lab not in CAUSAL_LABELS and lab != PARSE_FAILURE:
            raise QaError(f"predicted label {lab!r} outside {CAUSAL_LABELS}")
    ps, rs, fs = [], [], []
    for c in CAUSAL_LABELS:
        tp = sum(1 for p, g in zip(preds, gold) if p == c and g == c)
        fp = sum(1 for p, g in zip(preds, gold) if p == c and g != c)
        fn = sum(1 for p, g in zip(preds, gold) if p != c and g == c)
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        ps.append(p)
        rs.append(r)
        fs.append(f)
    k = len(CAUSAL_LABELS)
    return {"macro_precision": sum(ps) / k, "macro_recall": sum(rs) / k,
            "macro_f1": sum(fs) / k}


def baseline_predict(kind: str, items: list[DiscoveryItem],
                     seed: int = 0) -> list[str]:
    """Uniform-random or constant-majority 3-way predictions."""
    if not items:
        raise QaError("no items to predict on")
    if kind == "random":
        rng = random.Random(seed)
        return [rng.choice(CAUSAL_LABELS) for _ in items]
    if kind == "majority":
        counts: dict[str, int] = {}
        for it in items:
            counts[it.gold] = counts.get(it.gold, 0) + 1
        top = max(sorted(counts), key=lambda c: counts[c])
        return [top for _ in items]
    raise QaError(f"unknown baseline kind {kind!r}")


def generate_negatives(g: CausalGraph, count: int, seed: int,
                       topics: dict[str, str] | None = None,
                       cooccurrence: CooccurrenceMatrix | None = None
                       ) -> list[DiscoveryItem]:
    """Sample unordered node pairs with no edge and no shared story."""
    if len(g.nodes) < 2:
        raise QaError("need at least 2 nodes to sample negatives")
    cooc_pairs: set[tuple[str, str]] = set()
    if cooccurrence is not None:
        present = cooccurrence.values > 0
        for row in present:
            here = [cooccurrence.cluster_ids[j]
                    for j in range(len(row)) if row[j]]
            for i in range(len(here)):
                for j in range(i + 1, len(here)):
                    cooc_pairs.add((here[i], here[j]))

    nodes = sorted(g.nodes)
    eligible = []
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            a, b = nodes[i], nodes[j]
            if g.adjacent(a, b) or (a, b) in cooc_pairs:
                continue
            eligible.append((a, b))
    if len(eligible) < count:
        raise QaError(
            f"only {len(eligible)} non-adjacent pairs available, "
            f"need {count}")
    rng = random.Random(seed)
    chosen = rng.sample(eligible, count)
    name = topics or {}
    return [
        DiscoveryItem(pair_id=f"neg-{a}-{b}",
                      event_a=name.get(a, a), event_b=name.get(b, b),
                      gold=LABEL_NONE)
        for a, b in chosen
    ]


def discovery_items_from_graph(g: CausalGraph,
                               topics: dict[str, str] | None = None
                               ) -> list[DiscoveryItem]:
    """Positive pairwise items: one per directed edge, gold a_causes_b."""
    name = topics or {}
    return [
        DiscoveryItem(pair_id=f"pos-{a}-{b}",
                      event_a=name.get(a, a), event_b=name.get(b, b),
                      gold=LABEL_A_CAUSES_B)
        for a, b in sorted(g.edges)
    ]


def retrieve_cg_hint(target: str, cs: ClusterSet, g: CausalGraph,
                     direction: str,
                     emb: EmbeddingTable | None = None,
                     phr: ParaphraseTable | None = None,
                     threshold: float = 0.7,
                     target_key: str = "__target__") -> tuple[str, str] | None:
    """Map a generalization onto a cluster topic and fetch one neighbor.

    Matching prefers normalized exact topic equality; otherwise, when an
    embedding table covering cluster ids plus target_key is supplied, the
    topic with the highest combined similarity at or above the threshold
    wins. Ties resolve to the lexicographically smaller cluster id.
    Returns (matched topic, neighbor topic) for the requested direction,
    or None.
    """
    if direction not in ("cause", "effect"):
        raise QaError(f"unknown direction {direction!r}")
    topics = {cl.cluster_id: cl.topic for cl in cs.clusters if cl.topic}
    if not topics:
        return None
    norm_target = normalize_mention(target)
    matched = None
    for cid in sorted(topics):
        if normalize_mention(topics[cid]) == norm_target:
            matched = cid
            break
    if matched is None and emb is not None and target_key in emb:
        no_causal = MentionCausalSet(pairs=frozenset())
        best_score = -1.0
        for cid in sorted(topics):
            if cid not in emb:
                continue
            score = combined_similarity(target_key, cid, emb,
                                        phr or ParaphraseTable(), no_causal)
            if score >= threshold and score > best_score:
                matched, best_score = cid, score
    if matched is None:
        return None
    neighbors = sorted(
        u for u, v in g.edges if v == matched
    ) if direction == "cause" else sorted(
        v for u, v in g.edges if u == matched
    )
    if not neighbors:
        return None
    return (topics[matched], topics.get(neighbors[0], neighbors[0]))


# ---------------------------------------------------------------------------
# Model endpoint


@dataclass
class LlmEndpoint:
    """Chat-completions client with retries and a deterministic mock mode.

    In mock mode responses come from a canned table keyed by request tag,
    exact prompt, or prompt digest, with "*" as the fallback key.
    """

    base_url: str = ""
    model: str = "mock"
    params: dict = field(default_factory=dict)
    mock: bool = True
    canned: dict[str, str] | None = None
    api_key_env: str = "LLM_API_KEY"
    max_retries: int = 3
    backoff: float = 0.5
    timeout: float = 60.0

    def __post_init__(self):
        if self.mock and self.canned is None:
            raise QaError("mock mode requires a canned response table")

    @staticmethod
    def digest(prompt: str) -> str:
        return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:12]

    def complete(self, prompt: str, tag: str | None = None) -> str:
        if self.mock:
            for key in (tag, prompt, self.digest(prompt), "*"):
                if key is not None and key in self.canned:
                    return self.canned[key]
            raise QaError(f"no canned response for tag {tag!r}")
        return self._complete_http(prompt)

    def _complete_http(self, prompt: str) -> str:
        import httpx

        headers = {}
        key = os.environ.get(self.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            **self.params,
        }
        last_error = None
        for attempt in range(self.max_retries):
            try:
                resp = httpx.post(f"{self.base_url}/chat/completions",
                                  json=body, headers=headers,
                                  timeout=self.timeout)
                if resp.status_code >= 500:
                    raise QaError(f"server error {resp.status_code}")
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except Exception as exc:   # noqa: BLE001 - retry then re-raise
                last_error = exc
                time.sleep(self.backoff * (2 ** attempt))
        raise QaError(f"endpoint failed after {self.max_retries} attempts: "
                      f"{last_error}")


def run_discovery(items: list[DiscoveryItem], endpoint: LlmEndpoint
                  ) -> tuple[list[str], dict[str, float]]:
    """Render, query, parse, and score the pairwise discovery task."""
    preds = []
    for it in items:
        prompt = render_prompt(it, "pairwise")
        preds.append(parse_answer(endpoint.complete(prompt, tag=it.pair_id),
                                  "pairwise"))
    report = classification_report(preds, [it.gold for it in items])
    report["parse_failures"] = sum(1 for p in preds if p == PARSE_FAILURE)
    return preds, report


def run_qa(items: list[QaItem], endpoint: LlmEndpoint, template: str,
           with_cg: bool = False) -> tuple[dict[str, set[int]],
                                           dict[str, float]]:
    """Render, query, parse, and score a QA item list."""
    preds: dict[str, set[int]] = {}
    failures = 0
    for it in items:
        prompt = render_prompt(it, template, with_cg=with_cg)
        parsed = parse_answer(endpoint.complete(prompt, tag=it.question_id),
                              "qa")
        if parsed == PARSE_FAILURE:
            failures += 1
            preds[it.question_id] = set()
        else:
            preds[it.question_id] = parsed
    report = score_qa(preds, {it.question_id: it.gold for it in items})
    report["parse_failures"] = failures
    return preds, report


# ---------------------------------------------------------------------------
# File formats


def save_qa_items(items: list[QaItem], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for it in items:
            fh.write(json.dumps({
                "question_id": it.question_id,
                "story_text": it.story_text,
                "question_kind": it.question_kind,
                "direction": it.direction,
                "target": it.target,
                "choices": it.choices,
                "gold": sorted(it.gold),
                "cg_hint": list(it.cg_hint) if it.cg_hint else None,
            }, sort_keys=True) + "\n")


def load_qa_items(path: str | Path) -> list[QaItem]:
    items = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            items.append(QaItem(
                question_id=rec["question_id"],
                story_text=rec["story_text"],
                question_kind=rec["question_kind"],
                direction=rec["direction"],
                target=rec["target"],
                choices=rec["choices"],
                gold=set(rec["gold"]),
                cg_hint=tuple(rec["cg_hint"]) if rec.get("cg_hint") else None,
            ))
    return items


def save_report(report: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(report):
            value = report[key]
            if isinstance(value, float):
                fh.write(f"{key}\t{value:.10g}\n")
            else:
                fh.write(f"{key}\t{value}\n")
