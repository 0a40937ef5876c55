"""HTTP API over the annotation task store.

Endpoints consumed by the annotator UI:

    GET  /api/tasks?annotator=ID&status=open   task listing
    GET  /api/tasks/{id}                       full payload
    POST /api/tasks/{id}/result                submit an answer (409 on
                                               schema mismatch)
    GET  /api/progress                         per-batch counts
    GET  /api/agreement                        current alpha + escalations

State lives in a TaskStore backed by an append-only record log, so the
service is restart-safe.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .annotation import AnnotationError, AnnotationTask, TaskStore
from .clustering import load_clusters
from .corpus import load_stories, normalize_mention


class SubmitBody(BaseModel):
    annotator_id: str
    answer: dict


def _task_summary(task: AnnotationTask) -> dict:
    return {
        "task_id": task.task_id,
        "kind": task.kind,
        "status": task.status,
        "batch_id": task.batch_id,
        "assigned_to": task.assigned_to,
    }


def _task_detail(task: AnnotationTask) -> dict:
    doc = _task_summary(task)
    payload = dict(task.payload)
    if task.kind == "subcluster":
        texts = payload.get("member_texts") or {
            m: m for m in payload["members"]}
        payload["member_texts"] = {
            m: normalize_mention(t) if t.strip() else t
            for m, t in texts.items()
        }
    doc["payload"] = payload
    return doc


def make_app(store: TaskStore) -> FastAPI:
    app = FastAPI(title="annotation service")
    lock = threading.Lock()

    @app.get("/api/tasks")
    def list_tasks(annotator: str | None = None, status: str = "open"):
        with lock:
            tasks = store.open_tasks(annotator_id=annotator,
                                     status=status or None)
            return {"tasks": [_task_summary(t) for t in tasks]}

    @app.get("/api/tasks/{task_id}")
    def get_task(task_id: str):
        with lock:
            task = store.tasks.get(task_id)
            if task is None:
                raise HTTPException(status_code=404,
                                    detail=f"no task {task_id!r}")
            return _task_detail(task)

    @app.post("/api/tasks/{task_id}/result")
    def submit_result(task_id: str, body: SubmitBody):
        with lock:
            if task_id not in store.tasks:
                raise HTTPException(status_code=404,
                                    detail=f"no task {task_id!r}")
            try:
                rec = store.submit(task_id, body.annotator_id, body.answer)
            except AnnotationError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            return {"accepted": True, "timestamp": rec.timestamp,
                    "task_status": store.tasks[task_id].status}

    @app.get("/api/progress")
    def progress():
        with lock:
            return {"batches": store.progress()}

    @app.get("/api/agreement")
    def agreement():
        with lock:
            alpha = store.agreement()
            return {
                "alpha": alpha,
                "escalations": store.escalations(),
                "final_labels": store.final_labels(),
            }

    return app


def build_store(state_dir: str | Path,
                corpus_path: str | Path | None = None,
                clusters_path: str | Path | None = None) -> TaskStore:
    """Assemble a store from a state directory.

    Expects tasks.json (a list of task objects) in the directory; the
    record log records.jsonl is created on demand. Corpus and cluster
    artifacts enable context retrieval for re-evaluation tasks.
    """
    state_dir = Path(state_dir)
    tasks_file = state_dir / "tasks.json"
    if not tasks_file.exists():
        raise FileNotFoundError(f"{tasks_file} not found")
    with open(tasks_file, encoding="utf-8") as fh:
        raw = json.load(fh)
    tasks = [
        AnnotationTask(
            task_id=rec["task_id"], kind=rec["kind"],
            payload=rec["payload"], assigned_to=rec["assigned_to"],
            status=rec.get("status", "open"), batch_id=rec.get("batch_id"),
        )
        for rec in raw
    ]
    col = load_stories(corpus_path) if corpus_path else None
    cs = load_clusters(clusters_path) if clusters_path else None
    return TaskStore(tasks, log_path=state_dir / "records.jsonl",
                     col=col, cs=cs)


def save_tasks(tasks: list[AnnotationTask], path: str | Path) -> None:
    doc = [
        {
            "task_id": t.task_id, "kind": t.kind, "payload": t.payload,
            "assigned_to": t.assigned_to, "status": t.status,
            "batch_id": t.batch_id,
        }
        for t in tasks
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def serve(store: TaskStore, host: str = "127.0.0.1", port: int = 8700):
    import uvicorn

    uvicorn.run(make_app(store), host=host, port=port, log_level="warning")
