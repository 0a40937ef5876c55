"""
Causal QA harness: prompts, mock endpoint, scoring, baselines
=============================================================

Builds multi-choice cause/effect questions from annotated stories,
renders the prompt templates, answers them with a deterministic mock
endpoint, and scores the result next to the random and majority
baselines.
"""

from causalevents.causal_graph import lift_relations
from causalevents.clustering import phase_one
from causalevents.qa import (
    LlmEndpoint,
    baseline_predict,
    build_qa,
    classification_report,
    discovery_items_from_graph,
    generate_negatives,
    render_prompt,
    retrieve_cg_hint,
    run_discovery,
    run_qa,
)
from causalevents.similarity import SimilarityMatrix
from causalevents.synthetic import synth_corpus

col, embeddings, paraphrases = synth_corpus(seed=42, n_concepts=6,
                                            mentions_per_concept=(4, 7))

# --- multi-choice QA over stories ---------------------------------------
items = build_qa(col, kind="specific")
print(f"{len(items)} questions from {len(col.causal)} annotated pairs")
print("\nexample prompt:\n")
print(render_prompt(items[0], "specific_cot"))

# The mock endpoint answers every question with its gold indices, so the
# run is fully deterministic and every output parses.
canned = {it.question_id: "The correct answer(s): " +
          ", ".join(map(str, sorted(it.gold)))
          for it in items}
endpoint = LlmEndpoint(mock=True, canned=canned)
preds, report = run_qa(items, endpoint, template="specific_cot")
print("\nQA report:", report)

# --- pairwise causal discovery over abstractions ------------------------
S = SimilarityMatrix.from_tables(sorted(col.mentions), embeddings,
                                 paraphrases, col.causal)
cs = phase_one(col, S, seed=7, min_size=2)
graph = lift_relations(cs, col.causal)
topics = {cl.cluster_id: cl.topic for cl in cs.clusters}

positives = discovery_items_from_graph(graph, topics=topics)
try:
    negatives = generate_negatives(graph, count=min(3, len(graph.nodes)),
                                   seed=5, topics=topics)
except Exception:
    negatives = []
pairs = positives + negatives
print(f"\n{len(positives)} positive and {len(negatives)} negative pairs")

canned_pairs = {it.pair_id: "<answer>A</answer>" if it.gold == "a_causes_b"
                else "<answer>C</answer>" for it in pairs}
pair_endpoint = LlmEndpoint(mock=True, canned=canned_pairs)
_, pair_report = run_discovery(pairs, pair_endpoint)
print("mock pairwise report:", pair_report)

golds = [it.gold for it in pairs]
for kind in ("random", "majority"):
    baseline = baseline_predict(kind, pairs, seed=11)
    rep = classification_report(baseline, golds)
    print(f"{kind} baseline macro F1: {rep['macro_f1']:.3f}")

# --- causal-graph hints for abstract questions --------------------------
if topics:
    some_topic = sorted(topics.values())[0]
    hint = retrieve_cg_hint(some_topic, cs, graph, "effect")
    print("\ncausal-graph hint for", repr(some_topic), "->", hint)
