"""Command-line pipeline with reproducible seeds and machine-readable output.

Subcommands: cluster, metrics, graph (lift/census/cooccur/subgraph),
discover, annotate (init/serve/aggregate), qa (build/run/score), pipeline,
validate, and replay. Every command writes a manifest recording its
arguments, seeds, input digests, and outputs; re-running a command with
the same inputs and seed reproduces its artifacts byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .annotation import generate_tasks
from .causal_graph import (
    build_cooccurrence,
    count_structures,
    frequency_subgraph,
    lift_relations,
    load_cooccurrence,
    load_edges,
    save_cooccurrence,
    save_edges,
    structure_census_audit,
)
from .clustering import load_clusters, phase_one, save_clusters
from .corpus import load_stories
from .discovery import pc, save_cpdag
from .metrics import (
    adjusted_rand_index,
    bidirectional_ratio,
    homogeneity,
    intercluster_count_matrix,
    normalized_mutual_information,
    self_loop_ratio,
    silhouette,
)
from .qa import (
    LlmEndpoint,
    build_qa,
    load_qa_items,
    run_qa,
    save_qa_items,
    score_qa,
)
from .similarity import SimilarityMatrix, load_embeddings, load_paraphrases


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir: Path, command: str, args,
                    inputs: list[str], outputs: list[str],
                    seed: int | None,
                    name: str = "manifest.json") -> None:
    if not isinstance(args, dict):
        args = vars(args)
    params = {
        k: v for k, v in sorted(args.items())
        if k not in ("func",) and not k.startswith("_")
        and isinstance(v, (str, int, float, bool, type(None)))
    }
    manifest = {
        "command": command,
        "args": params,
        "argv": args.get("_argv"),
        "seed": seed,
        "inputs": {p: _sha256(Path(p)) for p in sorted(inputs)
                   if Path(p).exists()},
        "outputs": sorted(outputs),
        "version": __version__,
    }
    with open(out_dir / name, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _similarity_from_args(args, col):
    emb = load_embeddings(args.embeddings)
    phr = load_paraphrases(args.paraphrases, default=args.phr_default) \
        if args.paraphrases else None
    if phr is None:
        from .similarity import ParaphraseTable
        phr = ParaphraseTable(default=args.phr_default)
    return SimilarityMatrix.from_tables(sorted(col.mentions), emb, phr,
                                        col.causal)


def _print_report(report: dict, path: Path | None = None):
    lines = []
    for key in sorted(report):
        v = report[key]
        lines.append(f"{key}\t{v:.10g}" if isinstance(v, float)
                     else f"{key}\t{v}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if path is not None:
        path.write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# subcommand implementations


def _cmd_cluster(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    col = load_stories(args.corpus)
    S = _similarity_from_args(args, col)
    cs = phase_one(col, S, seed=args.seed, threshold=args.threshold,
                   min_size=args.min_size, sim_floor=args.sim_floor,
                   require_linked=not args.keep_unlinked)
    save_clusters(cs, out_dir / "clusters.json")
    inputs = [args.corpus, args.embeddings] + (
        [args.paraphrases] if args.paraphrases else [])
    _write_manifest(out_dir, "cluster", vars(args), inputs,
                    ["clusters.json"], args.seed)
    print(f"clusters\t{len(cs.clusters)}")
    print(f"outliers\t{len(cs.outliers)}")
    return 0


def _cmd_metrics(args) -> int:
    col = load_stories(args.corpus)
    cs = load_clusters(args.clusters)
    report = {}
    A = intercluster_count_matrix(cs, col.causal)
    if cs.clusters:
        report["self_loop_ratio"] = self_loop_ratio(cs, A)
    if len(cs.clusters) >= 2:
        report["bidirectional_ratio"] = bidirectional_ratio(A)
    if args.embeddings:
        from .metrics import MetricError

        S = _similarity_from_args(args, col)
        if len(cs.clusters) >= 2:
            try:
                report["silhouette"] = silhouette(cs.assignment(), S)
            except MetricError:
                pass  # every cluster is a singleton
        if any(len(c.members) >= 2 for c in cs.clusters):
            report["homogeneity"] = homogeneity(cs, S)
    if args.truth:
        truth = {}
        with open(args.truth, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    mid, _, label = line.partition("\t")
                    truth[mid] = label
        assignment = cs.assignment()
        shared = sorted(set(truth) & set(assignment))
        pred_labels = [assignment[m] for m in shared]
        true_labels = [truth[m] for m in shared]
        report["ari"] = adjusted_rand_index(pred_labels, true_labels)
        report["nmi"] = normalized_mutual_information(pred_labels,
                                                      true_labels)
        report["labeled_mentions"] = len(shared)
    out = Path(args.out) if args.out else None
    _print_report(report, out)
    if out is not None:
        inputs = [args.corpus, args.clusters] + \
            [p for p in (args.embeddings, args.paraphrases, args.truth) if p]
        _write_manifest(out.parent, "metrics", vars(args), inputs,
                        [out.name], None,
                        name=out.name + ".manifest.json")
    return 0


def _cmd_graph(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.action == "lift":
        col = load_stories(args.corpus)
        cs = load_clusters(args.clusters)
        g = lift_relations(cs, col.causal)
        save_edges(g, out_dir / "graph.tsv")
        _write_manifest(out_dir, "graph lift", vars(args),
                        [args.corpus, args.clusters], ["graph.tsv"], None,
                        name="graph.manifest.json")
        print(f"nodes\t{len(g.nodes)}")
        print(f"edges\t{len(g.edges)}")
    elif args.action == "census":
        g = load_edges(args.graph)
        if args.audit:
            report = {}
            for conv, census in structure_census_audit(g).items():
                report[f"{conv}.confounders"] = census.confounders
                report[f"{conv}.mediators"] = census.mediators
                report[f"{conv}.colliders"] = census.colliders
        else:
            census = count_structures(g)
            report = {"confounders": census.confounders,
                      "mediators": census.mediators,
                      "colliders": census.colliders,
                      "convention": census.convention}
        report["nodes"] = len(g.nodes)
        report["edges"] = len(g.edges)
        if g.nodes:
            report["mean_degree"] = 2 * len(g.edges) / len(g.nodes)
        _print_report(report, out_dir / "census.tsv")
        _write_manifest(out_dir, "graph census", vars(args), [args.graph],
                        ["census.tsv"], None, name="census.manifest.json")
    elif args.action == "cooccur":
        col = load_stories(args.corpus)
        cs = load_clusters(args.clusters)
        m = build_cooccurrence(col, cs, mode=args.mode)
        save_cooccurrence(m, out_dir / "cooccur.csv")
        _write_manifest(out_dir, "graph cooccur", vars(args),
                        [args.corpus, args.clusters], ["cooccur.csv"], None,
                        name="cooccur.manifest.json")
    elif args.action == "subgraph":
        g = load_edges(args.graph)
        m = load_cooccurrence(args.cooccur)
        sub = frequency_subgraph(g, m, min_df=args.min_df)
        save_edges(sub, out_dir / f"subgraph-{args.min_df}.tsv")
        _write_manifest(out_dir, "graph subgraph", vars(args),
                        [args.graph, args.cooccur],
                        [f"subgraph-{args.min_df}.tsv"], None,
                        name=f"subgraph-{args.min_df}.manifest.json")
        print(f"nodes\t{len(sub.nodes)}")
        print(f"edges\t{len(sub.edges)}")
    else:
        raise ValueError(f"unknown graph action {args.action!r}")
    return 0


def _cmd_discover(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    m = load_cooccurrence(args.data,
                          mode="count" if args.no_binarize else "binary")
    from .discovery import BinaryDataset

    values = m.values if m.mode == "binary" else (m.values > 0).astype(int)
    d = BinaryDataset(columns=list(m.cluster_ids), values=values)
    cpdag = pc(d, kind=args.test, alpha=args.alpha,
               max_cond_size=args.max_cond)
    save_cpdag(cpdag, out_dir / "cpdag.tsv")
    _write_manifest(out_dir, "discover", vars(args), [args.data],
                    ["cpdag.tsv"], None, name="cpdag.manifest.json")
    print(f"directed\t{len(cpdag.directed)}")
    print(f"undirected\t{len(cpdag.undirected)}")
    return 0


def _cmd_annotate(args) -> int:
    from .service import build_store, save_tasks, serve

    state_dir = Path(args.state_dir)
    if args.action == "init":
        state_dir.mkdir(parents=True, exist_ok=True)
        col = load_stories(args.corpus)
        cs = load_clusters(args.clusters)
        g = lift_relations(cs, col.causal)
        topics = {cl.cluster_id: cl.topic or cl.cluster_id
                  for cl in cs.clusters}
        member_texts = {mid: col.mentions[mid].generalization
                        or col.mentions[mid].text
                        for cl in cs.clusters for mid in cl.members}
        tasks = generate_tasks(
            cs, annotators=args.annotators.split(","),
            batch_size=args.batch_size,
            causal_pairs=sorted(g.edges),
            topics=topics, members_text=member_texts)
        save_tasks(tasks, state_dir / "tasks.json")
        _write_manifest(state_dir, "annotate init", vars(args),
                        [args.corpus, args.clusters], ["tasks.json"], None,
                        name="tasks.manifest.json")
        print(f"tasks\t{len(tasks)}")
        return 0
    if args.action == "serve":
        store = build_store(state_dir, corpus_path=args.corpus,
                            clusters_path=args.clusters)
        serve(store, host=args.host, port=args.port)
        return 0
    if args.action == "aggregate":
        store = build_store(state_dir, corpus_path=args.corpus,
                            clusters_path=args.clusters)
        alpha = store.agreement()
        final = store.final_labels()
        report = {
            "alpha": alpha if alpha is not None else float("nan"),
            "decided": sum(1 for v in final.values() if v != "escalate"),
            "escalated": len(store.escalations()),
            "tasks": len(store.tasks),
        }
        _print_report(report, state_dir / "aggregate.tsv")
        with open(state_dir / "final_labels.json", "w",
                  encoding="utf-8") as fh:
            json.dump(final, fh, sort_keys=True, indent=1)
            fh.write("\n")
        _write_manifest(state_dir, "annotate aggregate", vars(args),
                        [str(state_dir / "tasks.json"),
                         str(state_dir / "records.jsonl")],
                        ["aggregate.tsv", "final_labels.json"], None,
                        name="aggregate.manifest.json")
        return 0
    raise ValueError(f"unknown annotate action {args.action!r}")


def _cmd_qa(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.action == "build":
        col = load_stories(args.corpus)
        paraphrases = None
        if args.paraphrased_stories:
            paraphrases = {}
            with open(args.paraphrased_stories, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        rec = json.loads(line)
                        paraphrases[rec["story_id"]] = rec["text"]
        extras = None
        if args.extras:
            with open(args.extras, encoding="utf-8") as fh:
                extras = {k: set(v) for k, v in json.load(fh).items()}
        items = build_qa(col, paraphrases=paraphrases, kind=args.kind,
                         extras=extras)
        save_qa_items(items, out_dir / "qa.jsonl")
        _write_manifest(out_dir, "qa build", vars(args), [args.corpus],
                        ["qa.jsonl"], None, name="qa.manifest.json")
        print(f"questions\t{len(items)}")
        return 0
    if args.action == "run":
        items = load_qa_items(args.items)
        if args.mock:
            with open(args.mock, encoding="utf-8") as fh:
                canned = json.load(fh)
            endpoint = LlmEndpoint(mock=True, canned=canned)
        else:
            endpoint = LlmEndpoint(base_url=args.endpoint, model=args.model,
                                   mock=False, canned=None,
                                   params={"temperature": args.temperature})
        preds, report = run_qa(items, endpoint, template=args.template,
                               with_cg=args.with_cg)
        with open(out_dir / "preds.json", "w", encoding="utf-8") as fh:
            json.dump({k: sorted(v) for k, v in preds.items()}, fh,
                      sort_keys=True, indent=1)
            fh.write("\n")
        report["model"] = endpoint.model
        report["template"] = args.template
        for key, value in sorted(endpoint.params.items()):
            report[f"param.{key}"] = value
        _print_report(report, out_dir / "report.tsv")
        inputs = [args.items] + ([args.mock] if args.mock else [])
        _write_manifest(out_dir, "qa run", vars(args), inputs,
                        ["preds.json", "report.tsv"], None,
                        name="run.manifest.json")
        return 0
    if args.action == "score":
        items = load_qa_items(args.items)
        with open(args.preds, encoding="utf-8") as fh:
            preds = {k: set(v) for k, v in json.load(fh).items()}
        report = score_qa(preds, {it.question_id: it.gold for it in items})
        _print_report(report, out_dir / "report.tsv")
        _write_manifest(out_dir, "qa score", vars(args),
                        [args.items, args.preds], ["report.tsv"], None,
                        name="score.manifest.json")
        return 0
    raise ValueError(f"unknown qa action {args.action!r}")


def _cmd_pipeline(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    col = load_stories(args.corpus)
    S = _similarity_from_args(args, col)
    cs = phase_one(col, S, seed=args.seed, threshold=args.threshold,
                   min_size=args.min_size, sim_floor=args.sim_floor)
    save_clusters(cs, out_dir / "clusters.json")
    g = lift_relations(cs, col.causal)
    save_edges(g, out_dir / "graph.tsv")
    m = build_cooccurrence(col, cs, mode=args.cooccur_mode)
    save_cooccurrence(m, out_dir / "cooccur.csv")
    inputs = [args.corpus, args.embeddings] + (
        [args.paraphrases] if args.paraphrases else [])
    _write_manifest(out_dir, "pipeline", vars(args), inputs,
                    ["clusters.json", "cooccur.csv", "graph.tsv"], args.seed)
    print(f"clusters\t{len(cs.clusters)}")
    print(f"outliers\t{len(cs.outliers)}")
    print(f"edges\t{len(g.edges)}")
    return 0


def validate_artifacts(clusters_path, graph_path, corpus_path) -> list[dict]:
    """Mechanical checks of the quality criteria on pipeline artifacts.

    Checks: single non-empty topic per cluster (criterion 1), partition
    integrity, at least one incident causal edge per cluster (criterion
    3), agreement between the stored edges and re-lifted mention links
    (criterion 5), and causal consistency of the partition. Same-event
    semantic coherence and cross-level persistence (criteria 2 and 4) are
    human-judgment items and only flagged.
    """
    col = load_stories(corpus_path)
    cs = load_clusters(clusters_path)
    g = load_edges(graph_path)
    violations = []

    for cl in cs.clusters:
        if not (cl.topic or "").strip():
            violations.append({
                "criterion": "criterion-1",
                "cluster_id": cl.cluster_id,
                "message": f"cluster {cl.cluster_id} has no topic",
            })

    universe = cs.universe
    unknown = sorted(universe - set(col.mentions))
    for mid in unknown:
        violations.append({
            "criterion": "partition",
            "cluster_id": None,
            "message": f"mention {mid} not present in the corpus",
        })

    incident = {u for u, _ in g.edges} | {v for _, v in g.edges}
    for cl in cs.clusters:
        if cl.cluster_id not in incident:
            violations.append({
                "criterion": "criterion-3",
                "cluster_id": cl.cluster_id,
                "message": f"cluster {cl.cluster_id} has no causal relation "
                           "with any other cluster",
            })

    lifted = lift_relations(cs, col.causal)
    for edge in sorted(lifted.edges - g.edges):
        violations.append({
            "criterion": "criterion-5",
            "cluster_id": edge[0],
            "message": f"annotations imply edge {edge[0]}->{edge[1]} "
                       "missing from the graph",
        })
    for edge in sorted(g.edges - lifted.edges):
        violations.append({
            "criterion": "criterion-5",
            "cluster_id": edge[0],
            "message": f"graph edge {edge[0]}->{edge[1]} has no supporting "
                       "mention-level annotation",
        })

    from .clustering import is_causally_consistent

    if not is_causally_consistent(cs, col.causal):
        violations.append({
            "criterion": "consistency",
            "cluster_id": None,
            "message": "partition has intra-cluster causal pairs or "
                       "bidirectional cluster pairs",
        })
    return violations


def _cmd_validate(args) -> int:
    violations = validate_artifacts(args.clusters, args.graph, args.corpus)
    for v in violations:
        print(f"{v['criterion']}\t{v['message']}")
    print(f"violations\t{len(violations)}")
    print("human-judgment\tcriteria 2 and 4 require annotator review")
    return 1 if violations else 0


def _cmd_replay(args) -> int:
    with open(args.manifest, encoding="utf-8") as fh:
        manifest = json.load(fh)
    argv = manifest.get("argv")
    if not argv:
        print("manifest does not carry a replayable argv", file=sys.stderr)
        return 1
    return main(argv)


# ---------------------------------------------------------------------------
# argument parsing


def _add_similarity_flags(p):
    p.add_argument("--embeddings", required=False,
                   help="embeddings file (header d=<dim>)")
    p.add_argument("--paraphrases", default=None,
                   help="paraphrase probability file")
    p.add_argument("--phr-default", type=float, default=0.0,
                   dest="phr_default",
                   help="probability for pairs absent from the paraphrase "
                        "file (default 0.0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalevents",
        description="Causal event abstraction and discovery pipeline",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="extract abstractions (phase 1)")
    p.add_argument("--corpus", required=True)
    _add_similarity_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.70,
                   help="pivot absorption similarity threshold "
                        "(default 0.70)")
    p.add_argument("--min-size", type=int, default=10, dest="min_size",
                   help="pruning size bound (default 10)")
    p.add_argument("--sim-floor", type=float, default=0.50, dest="sim_floor",
                   help="pruning max-similarity bound (default 0.50)")
    p.add_argument("--keep-unlinked", action="store_true",
                   dest="keep_unlinked",
                   help="keep clusters with no causal relation to others")
    p.add_argument("--out-dir", default=".", dest="out_dir")
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("metrics", help="evaluate a clustering")
    p.add_argument("--clusters", required=True)
    p.add_argument("--corpus", required=True)
    _add_similarity_flags(p)
    p.add_argument("--truth", default=None,
                   help="mention_id<TAB>label reference file for ARI/NMI")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("graph", help="cluster-level causal graph tools")
    p.add_argument("action",
                   choices=["lift", "census", "cooccur", "subgraph"])
    p.add_argument("--corpus")
    p.add_argument("--clusters")
    p.add_argument("--graph")
    p.add_argument("--cooccur")
    p.add_argument("--mode", choices=["count", "binary"], default="count")
    p.add_argument("--min-df", type=int, default=25, dest="min_df",
                   help="document-frequency bound for subgraph extraction")
    p.add_argument("--audit", action="store_true",
                   help="report the census under all conventions")
    p.add_argument("--out-dir", default=".", dest="out_dir")
    p.set_defaults(func=_cmd_graph)

    p = sub.add_parser("discover", help="run PC on co-occurrence data")
    p.add_argument("--data", required=True, help="co-occurrence CSV")
    p.add_argument("--test", choices=["chi2", "g2"], default="g2")
    p.add_argument("--alpha", type=float, default=0.01,
                   help="significance level (default 0.01)")
    p.add_argument("--max-cond", type=int, default=3, dest="max_cond",
                   help="max conditioning-set size (default 3)")
    p.add_argument("--no-binarize", action="store_true", dest="no_binarize",
                   help="feed raw counts instead of binary indicators")
    p.add_argument("--out-dir", default=".", dest="out_dir")
    p.set_defaults(func=_cmd_discover)

    p = sub.add_parser("annotate", help="annotation service and aggregation")
    p.add_argument("action", choices=["init", "serve", "aggregate"])
    p.add_argument("--state-dir", required=True, dest="state_dir")
    p.add_argument("--corpus")
    p.add_argument("--clusters")
    p.add_argument("--annotators", default="",
                   help="comma-separated annotator ids (init)")
    p.add_argument("--batch-size", type=int, default=60, dest="batch_size",
                   help="clusters per annotation batch (default 60)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8700)
    p.set_defaults(func=_cmd_annotate)

    p = sub.add_parser("qa", help="multi-choice QA harness")
    p.add_argument("action", choices=["build", "run", "score"])
    p.add_argument("--corpus")
    p.add_argument("--items")
    p.add_argument("--preds")
    p.add_argument("--kind", choices=["specific", "abstract"],
                   default="specific")
    p.add_argument("--paraphrased-stories", dest="paraphrased_stories",
                   help="jsonl of {story_id, text} paraphrases (QA+)")
    p.add_argument("--extras",
                   help="json of question_id -> extra gold indices")
    p.add_argument("--template", default="specific_cot",
                   choices=["pairwise", "specific_cot", "abstract_cot",
                            "abstract_bilevel", "abstraction_3step"])
    p.add_argument("--with-cg", action="store_true", dest="with_cg")
    p.add_argument("--endpoint", default="")
    p.add_argument("--model", default="mock")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--mock", default=None,
                   help="canned-response json enabling mock mode")
    p.add_argument("--out-dir", default=".", dest="out_dir")
    p.set_defaults(func=_cmd_qa)

    p = sub.add_parser("pipeline",
                       help="corpus -> clusters -> graph -> co-occurrence")
    p.add_argument("--corpus", required=True)
    _add_similarity_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.70)
    p.add_argument("--min-size", type=int, default=10, dest="min_size")
    p.add_argument("--sim-floor", type=float, default=0.50, dest="sim_floor")
    p.add_argument("--cooccur-mode", choices=["count", "binary"],
                   default="count", dest="cooccur_mode")
    p.add_argument("--out-dir", default=".", dest="out_dir")
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("validate", help="check artifacts against the "
                                        "quality criteria")
    p.add_argument("--clusters", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=_cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._argv = list(argv) if argv is not None else list(sys.argv[1:])
    if args.command in ("cluster", "pipeline") and not args.embeddings:
        parser.error(f"{args.command} requires --embeddings")
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
