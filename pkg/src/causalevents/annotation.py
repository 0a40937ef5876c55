"""Annotation task lifecycle and aggregation.

Clusters are batched into sub-clustering/topic tasks handled by pairs of
annotators; candidate causal pairs go to three annotators and are decided
by majority voting. Pairs on which all three annotators disagree are
re-queued with story contexts. Agreement is measured with Krippendorff's
alpha (nominal metric).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .clustering import ClusterSet
from .corpus import StoryCollection

LABEL_A_CAUSES_B = "a_causes_b"
LABEL_B_CAUSES_A = "b_causes_a"
LABEL_NONE = "none"
CAUSAL_LABELS = (LABEL_A_CAUSES_B, LABEL_B_CAUSES_A, LABEL_NONE)

ESCALATE = "escalate"

TASK_KINDS = ("subcluster", "topic", "causal_pair", "topic_match",
              "reeval_with_context")


class AnnotationError(ValueError):
    pass


@dataclass
class AnnotationTask:
    task_id: str
    kind: str
    payload: dict
    assigned_to: list[str]
    status: str = "open"
    batch_id: str | None = None

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise AnnotationError(f"unknown task kind {self.kind!r}")
        if self.kind in ("causal_pair", "reeval_with_context"):
            topics = self.payload.get("topics", ())
            if len(topics) != 2:
                raise AnnotationError(
                    f"{self.kind} task must carry exactly 2 topics")
        if self.kind == "reeval_with_context":
            if not self.payload.get("contexts") and \
                    not self.payload.get("flagged"):
                raise AnnotationError(
                    "reeval task needs at least one story context "
                    "(or the no-shared-context flag)")


@dataclass
class AnnotationRecord:
    task_id: str
    annotator_id: str
    answer: dict
    timestamp: int


@dataclass
class ReliabilityData:
    """Units x annotators matrix of nominal labels; None marks missing."""

    units: list[list[str | None]]

    def pairable_units(self) -> list[list[str]]:
        out = []
        for row in self.units:
            vals = [v for v in row if v is not None]
            if len(vals) >= 2:
                out.append(vals)
        return out


def generate_tasks(cs: ClusterSet, annotators: list[str],
                   batch_size: int = 60, annotators_per_task: int = 2,
                   causal_pairs: list[tuple[str, str]] | None = None,
                   topics: dict[str, str] | None = None,
                   members_text: dict[str, list[str]] | None = None,
                   ) -> list[AnnotationTask]:
    """Batch clusters into sub-clustering tasks and fan out causal pairs.

    Clusters are processed in id order and grouped into batches of
    batch_size; every cluster in a batch goes to the same
    annotators_per_task annotators (round-robin over the pool). Candidate
    causal pairs are each assigned to 3 annotators.
    """
    if not annotators:
        raise AnnotationError("no annotators registered")
    if not cs.clusters:
        raise AnnotationError("cluster set is empty")
    if annotators_per_task > len(annotators):
        raise AnnotationError(
            f"need {annotators_per_task} annotators per task, have "
            f"{len(annotators)}")

    tasks: list[AnnotationTask] = []
    ordered = sorted(cs.clusters, key=lambda c: c.cluster_id)
    n_batches = (len(ordered) + batch_size - 1) // batch_size
    for b in range(n_batches):
        batch = ordered[b * batch_size:(b + 1) * batch_size]
        crew = [annotators[(b * annotators_per_task + k) % len(annotators)]
                for k in range(annotators_per_task)]
        for cl in batch:
            payload = {
                "cluster_id": cl.cluster_id,
                "members": sorted(cl.members),
            }
            if members_text:
                payload["member_texts"] = {
                    m: members_text.get(m, m) for m in payload["members"]}
            tasks.append(AnnotationTask(
                task_id=f"sub-{cl.cluster_id}",
                kind="subcluster",
                payload=payload,
                assigned_to=list(crew),
                batch_id=f"batch-{b:03d}",
            ))

    if causal_pairs:
        if len(annotators) < 3:
            raise AnnotationError("causal tasks need at least 3 annotators")
        for k, (a, b) in enumerate(causal_pairs):
            crew = [annotators[(k + off) % len(annotators)] for off in range(3)]
            topic_a = (topics or {}).get(a, a)
            topic_b = (topics or {}).get(b, b)
            tasks.append(AnnotationTask(
                task_id=f"pair-{a}-{b}",
                kind="causal_pair",
                payload={"cluster_a": a, "cluster_b": b,
                         "topics": [topic_a, topic_b]},
                assigned_to=crew,
                batch_id="causal",
            ))
    return tasks


def generate_topic_alignment_tasks(unified: dict[str, dict],
                                   annotators: list[str],
                                   ) -> list[AnnotationTask]:
    """Topic-choice tasks over unified sub-clusterings.

    Every unified sub-cluster carries the joined "TOPIC : a / b" label;
    one annotator picks (or rewrites) the final topic per group.
    """
    if not annotators:
        raise AnnotationError("no annotators registered")
    tasks = []
    counter = 0
    for cluster_id in sorted(unified):
        for gi, group in enumerate(unified[cluster_id].get("groups", ())):
            tasks.append(AnnotationTask(
                task_id=f"topic-{cluster_id}-{gi}",
                kind="topic",
                payload={
                    "cluster_id": cluster_id,
                    "members": sorted(group["members"]),
                    "joined_topic": group.get("topic", ""),
                },
                assigned_to=[annotators[counter % len(annotators)]],
                batch_id=f"topic-{cluster_id}",
            ))
            counter += 1
    return tasks


def generate_topic_match_tasks(cs: ClusterSet, causal,
                               annotators: list[str],
                               topics: dict[str, str] | None = None,
                               ) -> list[AnnotationTask]:
    """Outlier re-categorization tasks.

    Each outlier is offered only the clusters it could join without
    breaking causal consistency; an empty candidate list still yields a
    task so the no-match decision is recorded.
    """
    from .clustering import candidate_clusters_for_outlier

    if not annotators:
        raise AnnotationError("no annotators registered")
    tasks = []
    for k, outlier in enumerate(sorted(cs.outliers)):
        candidates = candidate_clusters_for_outlier(outlier, cs, causal)
        tasks.append(AnnotationTask(
            task_id=f"match-{outlier}",
            kind="topic_match",
            payload={
                "outlier": outlier,
                "candidates": candidates,
                "candidate_topics": {
                    c: (topics or {}).get(c, c) for c in candidates},
            },
            assigned_to=[annotators[k % len(annotators)]],
            batch_id="topic-match",
        ))
    return tasks


def unify_subclusterings(r1: dict, r2: dict, seed: int) -> dict:
    """Merge two annotators' sub-clusterings of the same cluster.

    Repeatedly draws a random unprocessed event as centroid; the unified
    sub-cluster contains every event that both annotators grouped with the
    centroid, labeled "TOPIC : <topic 1> / <topic 2>". Events that end up
    alone become outliers.
    """
    def membership(result):
        where = {}
        topics = {}
        for gi, group in enumerate(result.get("groups", ())):
            for m in group["members"]:
                where[m] = gi
                topics[m] = group.get("topic", "")
        return where, topics

    members1 = set().union(*[set(g["members"]) for g in r1.get("groups", ())],
                           set(r1.get("outliers", ())))
    members2 = set().union(*[set(g["members"]) for g in r2.get("groups", ())],
                           set(r2.get("outliers", ())))
    if members1 != members2:
        raise AnnotationError("sub-clusterings cover different member sets")

    where1, topics1 = membership(r1)
    where2, topics2 = membership(r2)
    rng = random.Random(seed)
    unprocessed = sorted(members1)
    groups = []
    outliers = []
    while unprocessed:
        centroid = rng.choice(unprocessed)
        mates = [centroid]
        for m in unprocessed:
            if m == centroid:
                continue
            same1 = centroid in where1 and where1.get(m) == where1[centroid]
            same2 = centroid in where2 and where2.get(m) == where2[centroid]
            if same1 and same2:
                mates.append(m)
        if len(mates) >= 2:
            t1 = topics1.get(centroid, "")
            t2 = topics2.get(centroid, "")
            groups.append({
                "members": sorted(mates),
                "topic": f"TOPIC : {t1} / {t2}",
            })
        else:
            outliers.append(centroid)
        unprocessed = [m for m in unprocessed if m not in mates]
    return {"groups": groups, "outliers": sorted(outliers)}


def majority_vote(labels: list[str]) -> str:
    """Strict-majority label, or the escalation marker when there is none."""
    if not labels:
        raise AnnotationError("cannot vote on an empty label list")
    if len(labels) < 3:
        raise AnnotationError("majority voting needs at least 3 labels")
    counts: dict[str, int] = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    top = max(counts.items(), key=lambda kv: kv[1])
    if top[1] * 2 > len(labels):
        return top[0]
    return ESCALATE


def requeue_with_context(pair_task: AnnotationTask,
                         col: StoryCollection,
                         cs: ClusterSet,
                         max_contexts: int = 5) -> AnnotationTask:
    """Build the re-evaluation task for an escalated causal pair.

    Contexts are the stories containing mentions of both clusters. When no
    story covers both, the task falls back to one story per cluster and is
    flagged.
    """
    if pair_task.kind != "causal_pair":
        raise AnnotationError("only causal_pair tasks can be re-queued")
    if pair_task.status != "escalated":
        raise AnnotationError("task has not been escalated")
    a = pair_task.payload["cluster_a"]
    b = pair_task.payload["cluster_b"]

    def stories_of(cluster_id):
        members = cs.cluster(cluster_id).members
        return {col.mentions[m].story_id for m in members if m in col.mentions}

    shared = sorted(stories_of(a) & stories_of(b))
    flagged = False
    if shared:
        chosen = shared[:max_contexts]
    else:
        flagged = True
        chosen = []
        for cid in (a, b):
            own = sorted(stories_of(cid))
            if own:
                chosen.append(own[0])
    contexts = [" ".join(col.stories[sid].sentences) for sid in chosen]
    return AnnotationTask(
        task_id=f"reeval-{pair_task.task_id}",
        kind="reeval_with_context",
        payload={
            "cluster_a": a,
            "cluster_b": b,
            "topics": list(pair_task.payload["topics"]),
            "contexts": contexts,
            "context_story_ids": chosen,
            "flagged": flagged,
        },
        assigned_to=list(pair_task.assigned_to),
        batch_id=pair_task.batch_id,
    )


def krippendorff_alpha(r: ReliabilityData) -> float:
    """Nominal-metric alpha, 1 - D_o / D_e over the coincidence matrix."""
    units = r.pairable_units()
    if not units:
        raise AnnotationError("no unit has two or more pairable values")
    coincidence: dict[tuple[str, str], float] = {}
    for vals in units:
        m = len(vals)
        for i, c in enumerate(vals):
            for j, k in enumerate(vals):
                if i == j:
                    continue
                coincidence[(c, k)] = coincidence.get((c, k), 0.0) \
                    + 1.0 / (m - 1)
    categories = sorted({c for pair in coincidence for c in pair})
    n_c = {c: sum(coincidence.get((c, k), 0.0) for k in categories)
           for c in categories}
    n = sum(n_c.values())
    d_o = sum(v for (c, k), v in coincidence.items() if c != k) / n
    d_e = sum(n_c[c] * n_c[k]
              for c in categories for k in categories if c != k) \
        / (n * (n - 1))
    if d_e == 0.0:
        return 1.0  # single category everywhere: perfect agreement
    return 1.0 - d_o / d_e


def aggregate_causal_labels(records_by_task: dict[str, list[str]]
                            ) -> dict[str, str]:
    """Fold submitted labels into final decisions (or escalation markers)."""
    out = {}
    for task_id, labels in sorted(records_by_task.items()):
        if len(labels) >= 3:
            out[task_id] = majority_vote(labels)
    return out


def validate_answer(task: AnnotationTask, answer: dict) -> None:
    """Raise AnnotationError unless the answer fits the task's schema."""
    if not isinstance(answer, dict):
        raise AnnotationError("answer must be an object")
    if task.kind == "subcluster":
        groups = answer.get("groups")
        outliers = answer.get("outliers")
        if not isinstance(groups, list) or not isinstance(outliers, list):
            raise AnnotationError("subcluster answer needs groups and "
                                  "outliers lists")
        covered = list(outliers)
        for group in groups:
            if not isinstance(group, dict) or "members" not in group:
                raise AnnotationError("each group needs a members list")
            if len(group["members"]) < 2:
                raise AnnotationError("a sub-cluster needs at least 2 events")
            if not str(group.get("topic", "")).strip():
                raise AnnotationError("each sub-cluster needs a topic")
            covered.extend(group["members"])
        expected = sorted(task.payload["members"])
        if sorted(covered) != expected:
            raise AnnotationError(
                "groups plus outliers must partition the cluster members")
    elif task.kind == "topic":
        if not str(answer.get("topic", "")).strip():
            raise AnnotationError("topic answer must carry non-empty text")
    elif task.kind in ("causal_pair", "reeval_with_context"):
        if answer.get("label") not in CAUSAL_LABELS:
            raise AnnotationError(
                f"label must be one of {CAUSAL_LABELS}")
    elif task.kind == "topic_match":
        cid = answer.get("cluster_id")
        if cid is not None and cid not in task.payload.get("candidates", ()):
            raise AnnotationError("chosen cluster is not a candidate")


class TaskStore:
    """In-memory task state with an append-only record log.

    Submissions are last-write-wins per (task, annotator) with monotonic
    timestamps, so replaying the log after a restart reproduces the state.
    """

    def __init__(self, tasks: list[AnnotationTask],
                 log_path: str | Path | None = None,
                 col: StoryCollection | None = None,
                 cs: ClusterSet | None = None):
        self.tasks: dict[str, AnnotationTask] = {}
        for t in tasks:
            if t.task_id in self.tasks:
                raise AnnotationError(f"duplicate task id {t.task_id!r}")
            self.tasks[t.task_id] = t
        self.records: dict[tuple[str, str], AnnotationRecord] = {}
        self._clock = 0
        self.log_path = Path(log_path) if log_path else None
        self.col = col
        self.cs = cs
        if self.log_path and self.log_path.exists():
            self._replay_log()

    def _replay_log(self):
        with open(self.log_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                self.submit(rec["task_id"], rec["annotator_id"],
                            rec["answer"], _timestamp=rec["timestamp"],
                            _log=False)

    def _tick(self, floor: int | None = None) -> int:
        self._clock = max(self._clock + 1, floor or 0)
        return self._clock

    def open_tasks(self, annotator_id: str | None = None,
                   status: str = "open") -> list[AnnotationTask]:
        out = []
        for tid in sorted(self.tasks):
            t = self.tasks[tid]
            if status and t.status != status:
                continue
            if annotator_id is not None:
                if annotator_id not in t.assigned_to:
                    continue
                if (tid, annotator_id) in self.records:
                    continue
            out.append(t)
        return out

    def submit(self, task_id: str, annotator_id: str, answer: dict,
               _timestamp: int | None = None, _log: bool = True
               ) -> AnnotationRecord:
        task = self.tasks.get(task_id)
        if task is None:
            raise KeyError(task_id)
        validate_answer(task, answer)
        ts = self._tick(_timestamp)
        rec = AnnotationRecord(task_id=task_id, annotator_id=annotator_id,
                               answer=answer, timestamp=ts)
        prev = self.records.get((task_id, annotator_id))
        if prev is None or ts >= prev.timestamp:
            self.records[(task_id, annotator_id)] = rec
        if _log and self.log_path:
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps({
                    "task_id": task_id, "annotator_id": annotator_id,
                    "answer": answer, "timestamp": ts,
                }, sort_keys=True) + "\n")
        self._refresh_status(task)
        return rec

    def _labels_for(self, task_id: str) -> list[str]:
        labs = []
        task = self.tasks[task_id]
        for ann in task.assigned_to:
            rec = self.records.get((task_id, ann))
            if rec is not None:
                labs.append(rec.answer["label"])
        return labs

    def _refresh_status(self, task: AnnotationTask):
        done = sum(1 for ann in task.assigned_to
                   if (task.task_id, ann) in self.records)
        if done < len(task.assigned_to):
            task.status = "open"
            return
        if task.kind == "causal_pair":
            verdict = majority_vote(self._labels_for(task.task_id))
            if verdict == ESCALATE:
                task.status = "escalated"
                self._ensure_reeval(task)
            else:
                task.status = "complete"
        else:
            task.status = "complete"

    def _ensure_reeval(self, task: AnnotationTask):
        reeval_id = f"reeval-{task.task_id}"
        if reeval_id in self.tasks:
            return
        if self.col is None or self.cs is None:
            # no corpus wired in: still queue a flagged context-free task
            self.tasks[reeval_id] = AnnotationTask(
                task_id=reeval_id, kind="reeval_with_context",
                payload={**task.payload, "contexts": [], "flagged": True},
                assigned_to=list(task.assigned_to), batch_id=task.batch_id)
            return
        self.tasks[reeval_id] = requeue_with_context(task, self.col, self.cs)

    def progress(self) -> dict[str, dict[str, int]]:
        out: dict[str, dict[str, int]] = {}
        for t in self.tasks.values():
            batch = t.batch_id or "unbatched"
            slot = out.setdefault(batch, {"total": 0, "complete": 0,
                                          "escalated": 0})
            slot["total"] += 1
            if t.status == "complete":
                slot["complete"] += 1
            elif t.status == "escalated":
                slot["escalated"] += 1
        return out

    def escalations(self) -> list[str]:
        return [tid for tid in sorted(self.tasks)
                if self.tasks[tid].status == "escalated"]

    def reliability_data(self) -> ReliabilityData:
        """Causal labels arranged units x annotators for alpha."""
        causal_tasks = [t for t in self.tasks.values()
                        if t.kind in ("causal_pair", "reeval_with_context")]
        annotators = sorted({a for t in causal_tasks for a in t.assigned_to})
        units = []
        for t in sorted(causal_tasks, key=lambda t: t.task_id):
            row: list[str | None] = []
            for ann in annotators:
                rec = self.records.get((t.task_id, ann))
                row.append(rec.answer["label"] if rec else None)
            units.append(row)
        return ReliabilityData(units=units)

    def agreement(self) -> float | None:
        try:
            return krippendorff_alpha(self.reliability_data())
        except AnnotationError:
            return None

    def final_labels(self) -> dict[str, str]:
        """Majority decisions with re-evaluation results taking precedence."""
        out = {}
        for tid in sorted(self.tasks):
            task = self.tasks[tid]
            if task.kind != "causal_pair":
                continue
            labels = self._labels_for(tid)
            if len(labels) < len(task.assigned_to):
                continue
            verdict = majority_vote(labels)
            reeval_id = f"reeval-{tid}"
            if verdict == ESCALATE and reeval_id in self.tasks:
                re_labels = self._labels_for(reeval_id)
                if len(re_labels) >= 3:
                    verdict = majority_vote(re_labels)
            out[tid] = verdict
        return out
