import json
from pathlib import Path

import numpy as np
import pytest

from causalevents.cli import main, validate_artifacts
from causalevents.corpus import serialize
from causalevents.similarity import save_embeddings, save_paraphrases
from causalevents.synthetic import synth_corpus


@pytest.fixture
def workspace(tmp_path):
    col, emb, phr = synth_corpus(seed=3, n_concepts=6)
    serialize(col, tmp_path / "corpus.jsonl")
    save_embeddings(emb, tmp_path / "emb.tsv")
    save_paraphrases(phr, tmp_path / "phr.tsv")
    return tmp_path


def run_pipeline(ws, out="out", seed="7"):
    return main([
        "pipeline", "--corpus", str(ws / "corpus.jsonl"),
        "--embeddings", str(ws / "emb.tsv"),
        "--paraphrases", str(ws / "phr.tsv"),
        "--seed", seed, "--min-size", "2",
        "--out-dir", str(ws / out),
    ])


def artifact_bytes(d: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


class TestPipeline:
    def test_produces_artifacts_and_manifest(self, workspace):
        assert run_pipeline(workspace) == 0
        out = workspace / "out"
        for name in ("clusters.json", "graph.tsv", "cooccur.csv",
                     "manifest.json"):
            assert (out / name).exists(), name
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 7
        assert manifest["command"] == "pipeline"
        assert len(manifest["inputs"]) == 3
        for digest in manifest["inputs"].values():
            assert len(digest) == 64

    def test_byte_identical_rerun(self, workspace):
        assert run_pipeline(workspace) == 0
        first = artifact_bytes(workspace / "out")
        assert run_pipeline(workspace) == 0
        second = artifact_bytes(workspace / "out")
        assert first == second

    def test_replay_from_manifest(self, workspace):
        assert run_pipeline(workspace) == 0
        first = artifact_bytes(workspace / "out")
        rc = main(["replay", "--manifest",
                   str(workspace / "out" / "manifest.json")])
        assert rc == 0
        assert artifact_bytes(workspace / "out") == first

    def test_missing_corpus_usage_error(self, workspace, capsys):
        with pytest.raises(SystemExit) as err:
            main(["pipeline", "--embeddings", str(workspace / "emb.tsv")])
        assert err.value.code == 2

    def test_unknown_flag_exit_2(self, workspace):
        with pytest.raises(SystemExit) as err:
            main(["pipeline", "--nonsense"])
        assert err.value.code == 2

    def test_io_failure_exit_1(self, workspace, capsys):
        rc = main(["pipeline", "--corpus", str(workspace / "missing.jsonl"),
                   "--embeddings", str(workspace / "emb.tsv")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestValidate:
    def test_pipeline_output_passes(self, workspace):
        run_pipeline(workspace)
        out = workspace / "out"
        violations = validate_artifacts(out / "clusters.json",
                                        out / "graph.tsv",
                                        workspace / "corpus.jsonl")
        assert violations == []
        rc = main(["validate", "--clusters", str(out / "clusters.json"),
                   "--graph", str(out / "graph.tsv"),
                   "--corpus", str(workspace / "corpus.jsonl")])
        assert rc == 0

    def test_missing_topic_flagged(self, workspace):
        run_pipeline(workspace)
        out = workspace / "out"
        doc = json.loads((out / "clusters.json").read_text())
        doc["clusters"][0]["topic"] = None
        (out / "clusters.json").write_text(json.dumps(doc))
        violations = validate_artifacts(out / "clusters.json",
                                        out / "graph.tsv",
                                        workspace / "corpus.jsonl")
        assert any(v["criterion"] == "criterion-1" for v in violations)

    def test_unlinked_cluster_flagged(self, workspace, capsys):
        run_pipeline(workspace)
        out = workspace / "out"
        doc = json.loads((out / "clusters.json").read_text())
        # fabricate a cluster out of two outliers: no incident edges
        spare = doc["outliers"][:2]
        doc["outliers"] = doc["outliers"][2:]
        doc["clusters"].append({"cluster_id": "zzz", "topic": "orphan",
                                "members": spare})
        (out / "clusters.json").write_text(json.dumps(doc))
        violations = validate_artifacts(out / "clusters.json",
                                        out / "graph.tsv",
                                        workspace / "corpus.jsonl")
        tags = {v["criterion"] for v in violations}
        assert "criterion-3" in tags
        rc = main(["validate", "--clusters", str(out / "clusters.json"),
                   "--graph", str(out / "graph.tsv"),
                   "--corpus", str(workspace / "corpus.jsonl")])
        assert rc == 1
        assert "criterion-3" in capsys.readouterr().out


class TestOtherCommands:
    def test_cluster_then_metrics(self, workspace, capsys):
        rc = main(["cluster", "--corpus", str(workspace / "corpus.jsonl"),
                   "--embeddings", str(workspace / "emb.tsv"),
                   "--paraphrases", str(workspace / "phr.tsv"),
                   "--seed", "5", "--min-size", "2",
                   "--out-dir", str(workspace / "c")])
        assert rc == 0
        capsys.readouterr()
        rc = main(["metrics",
                   "--clusters", str(workspace / "c" / "clusters.json"),
                   "--corpus", str(workspace / "corpus.jsonl"),
                   "--embeddings", str(workspace / "emb.tsv"),
                   "--paraphrases", str(workspace / "phr.tsv")])
        assert rc == 0
        report = dict(line.split("\t")
                      for line in capsys.readouterr().out.strip().splitlines())
        assert float(report["self_loop_ratio"]) == 0.0
        assert float(report["bidirectional_ratio"]) == 0.0
        assert "homogeneity" in report

    def test_metrics_with_truth_labels(self, workspace, capsys):
        run_pipeline(workspace)
        out = workspace / "out"
        # concept of each mention is a perfect reference labeling
        from causalevents.corpus import load_stories
        from causalevents.synthetic import concept_labels

        col = load_stories(workspace / "corpus.jsonl")
        labels = concept_labels(col)
        truth_file = workspace / "truth.tsv"
        truth_file.write_text("".join(f"{m}\t{lab}\n"
                                      for m, lab in sorted(labels.items())))
        rc = main(["metrics",
                   "--clusters", str(out / "clusters.json"),
                   "--corpus", str(workspace / "corpus.jsonl"),
                   "--truth", str(truth_file)])
        assert rc == 0
        report = dict(line.split("\t")
                      for line in capsys.readouterr().out.strip().splitlines())
        assert "ari" in report and "nmi" in report

    def test_graph_actions(self, workspace, capsys):
        run_pipeline(workspace)
        out = workspace / "out"
        rc = main(["graph", "census", "--graph", str(out / "graph.tsv"),
                   "--audit", "--out-dir", str(out)])
        assert rc == 0
        text = capsys.readouterr().out
        assert "default.colliders" in text
        rc = main(["graph", "subgraph", "--graph", str(out / "graph.tsv"),
                   "--cooccur", str(out / "cooccur.csv"),
                   "--min-df", "0", "--out-dir", str(out)])
        assert rc == 0
        assert (out / "subgraph-0.tsv").exists()

    def test_discover_on_scm_data(self, tmp_path, capsys):
        from causalevents.causal_graph import (
            CausalGraph,
            CooccurrenceMatrix,
            save_cooccurrence,
        )
        from causalevents.discovery import BernoulliSCM, sample_scm

        dag = CausalGraph(nodes=["X", "Y", "Z"],
                          edges={("X", "Z"), ("Y", "Z")})
        scm = BernoulliSCM(dag=dag, cpts={
            "X": np.array([0.5]), "Y": np.array([0.5]),
            "Z": np.array([0.1, 0.9, 0.9, 0.9])})
        d = sample_scm(scm, 8000, seed=2)
        m = CooccurrenceMatrix(
            story_ids=[f"s{i}" for i in range(8000)],
            cluster_ids=list(d.columns), values=d.values.astype(np.int64))
        save_cooccurrence(m, tmp_path / "cooccur.csv")
        rc = main(["discover", "--data", str(tmp_path / "cooccur.csv"),
                   "--test", "g2", "--alpha", "0.01",
                   "--out-dir", str(tmp_path)])
        assert rc == 0
        cpdag = (tmp_path / "cpdag.tsv").read_text()
        assert "X\t->\tZ" in cpdag
        assert "Y\t->\tZ" in cpdag

    def test_qa_build_run_score(self, workspace, capsys):
        run_pipeline(workspace)
        qa_dir = workspace / "qa"
        rc = main(["qa", "build", "--corpus",
                   str(workspace / "corpus.jsonl"),
                   "--out-dir", str(qa_dir)])
        assert rc == 0
        from causalevents.qa import load_qa_items

        items = load_qa_items(qa_dir / "qa.jsonl")
        assert items
        canned = {it.question_id:
                  "The correct answer(s): " +
                  ", ".join(map(str, sorted(it.gold)))
                  for it in items}
        (qa_dir / "canned.json").write_text(json.dumps(canned))
        capsys.readouterr()
        rc = main(["qa", "run", "--items", str(qa_dir / "qa.jsonl"),
                   "--mock", str(qa_dir / "canned.json"),
                   "--template", "specific_cot",
                   "--out-dir", str(qa_dir)])
        assert rc == 0
        report = dict(line.split("\t")
                      for line in capsys.readouterr().out.strip().splitlines())
        assert float(report["accuracy"]) == 1.0
        assert float(report["weighted_f1"]) == 1.0
        assert int(report["parse_failures"]) == 0
        rc = main(["qa", "score", "--items", str(qa_dir / "qa.jsonl"),
                   "--preds", str(qa_dir / "preds.json"),
                   "--out-dir", str(qa_dir)])
        assert rc == 0

    def test_annotate_init_and_aggregate(self, workspace, capsys):
        run_pipeline(workspace)
        out = workspace / "out"
        state = workspace / "state"
        rc = main(["annotate", "init", "--state-dir", str(state),
                   "--corpus", str(workspace / "corpus.jsonl"),
                   "--clusters", str(out / "clusters.json"),
                   "--annotators", "ann1,ann2,ann3"])
        assert rc == 0
        tasks = json.loads((state / "tasks.json").read_text())
        kinds = {t["kind"] for t in tasks}
        assert "subcluster" in kinds and "causal_pair" in kinds
        for t in tasks:
            if t["kind"] == "causal_pair":
                assert len(t["assigned_to"]) == 3
        capsys.readouterr()
        rc = main(["annotate", "aggregate", "--state-dir", str(state),
                   "--corpus", str(workspace / "corpus.jsonl"),
                   "--clusters", str(out / "clusters.json")])
        assert rc == 0
        assert (state / "final_labels.json").exists()

    def test_every_command_emits_a_manifest(self, workspace, capsys):
        run_pipeline(workspace)
        out = workspace / "out"
        main(["graph", "census", "--graph", str(out / "graph.tsv"),
              "--out-dir", str(out)])
        main(["graph", "subgraph", "--graph", str(out / "graph.tsv"),
              "--cooccur", str(out / "cooccur.csv"), "--min-df", "0",
              "--out-dir", str(out)])
        main(["discover", "--data", str(out / "cooccur.csv"),
              "--out-dir", str(out)])
        main(["metrics", "--clusters", str(out / "clusters.json"),
              "--corpus", str(workspace / "corpus.jsonl"),
              "--out", str(out / "metrics.tsv")])
        qa_dir = workspace / "qa"
        main(["qa", "build", "--corpus", str(workspace / "corpus.jsonl"),
              "--out-dir", str(qa_dir)])
        state = workspace / "state"
        main(["annotate", "init", "--state-dir", str(state),
              "--corpus", str(workspace / "corpus.jsonl"),
              "--clusters", str(out / "clusters.json"),
              "--annotators", "a,b,c"])
        for manifest in (
            out / "manifest.json",                 # pipeline
            out / "census.manifest.json",
            out / "subgraph-0.manifest.json",
            out / "cpdag.manifest.json",
            out / "metrics.tsv.manifest.json",
            qa_dir / "qa.manifest.json",
            state / "tasks.manifest.json",
        ):
            assert manifest.exists(), manifest.name
            doc = json.loads(manifest.read_text())
            assert doc["argv"], manifest.name

    def test_replay_non_pipeline_command(self, workspace, capsys):
        run_pipeline(workspace)
        out = workspace / "out"
        main(["discover", "--data", str(out / "cooccur.csv"),
              "--out-dir", str(out)])
        first = (out / "cpdag.tsv").read_bytes()
        rc = main(["replay", "--manifest",
                   str(out / "cpdag.manifest.json")])
        assert rc == 0
        assert (out / "cpdag.tsv").read_bytes() == first

    def test_help_documents_defaults(self, capsys):
        for args in (["cluster", "--help"], ["discover", "--help"],
                     ["annotate", "--help"]):
            with pytest.raises(SystemExit) as err:
                main(args)
            assert err.value.code == 0
        # spot-check that the documented defaults appear in help output
        with pytest.raises(SystemExit):
            main(["cluster", "--help"])
        text = capsys.readouterr().out
        assert "0.7" in text and "0.5" in text and "10" in text
