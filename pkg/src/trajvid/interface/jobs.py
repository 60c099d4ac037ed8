"""FIFO job queue with a JSON-file-backed store.

One worker by default: a single model in memory at a time. Job state
survives restarts; anything that was QUEUED or RUNNING when the service
died is marked FAILED on reload.
"""
from __future__ import annotations

import json
import queue
import threading
import time
import uuid
from dataclasses import asdict, dataclass, field
from pathlib import Path

JOB_KINDS = ("DATASET", "TRAIN_DIFFUSION", "TRAIN_POLICY", "GENERATE", "EVALUATE")
JOB_STATES = ("QUEUED", "RUNNING", "DONE", "FAILED")


class QueueFull(Exception):
    pass


@dataclass
class Job:
    id: str
    kind: str
    state: str = "QUEUED"
    payload: dict = field(default_factory=dict)
    result: dict | None = None
    error: str | None = None
    created_at: float = 0.0
    started_at: float | None = None
    finished_at: float | None = None

    def to_json(self) -> dict:
        return asdict(self)


class JobStore:
    """Access-serialized persistent map of job id -> Job."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._jobs: dict[str, Job] = {}
        if self.path.exists():
            for raw in json.loads(self.path.read_text()).values():
                job = Job(**raw)
                if job.state in ("QUEUED", "RUNNING"):
                    job.state = "FAILED"
                    job.error = "service restarted before the job finished"
                    job.finished_at = time.time()
                self._jobs[job.id] = job
            self._flush_locked()

    def _flush_locked(self) -> None:
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps({k: v.to_json() for k, v in self._jobs.items()}, indent=1))
        tmp.replace(self.path)

    def create(self, kind: str, payload: dict) -> Job:
        job = Job(id=uuid.uuid4().hex[:12], kind=kind, payload=payload, created_at=time.time())
        with self._lock:
            self._jobs[job.id] = job
            self._flush_locked()
        return job

    def get(self, job_id: str) -> Job | None:
        with self._lock:
            return self._jobs.get(job_id)

    def update(self, job_id: str, **fields) -> Job:
        with self._lock:
            job = self._jobs[job_id]
            for k, v in fields.items():
                setattr(job, k, v)
            self._flush_locked()
            return job

    def all(self) -> list[Job]:
        with self._lock:
            return list(self._jobs.values())


class JobQueue:
    """FIFO execution; handler(kind, payload, job_id) -> result dict."""

    def __init__(self, store: JobStore, handler, capacity: int = 16, worker_count: int = 1):
        self.store = store
        self.handler = handler
        self.capacity = capacity
        self._q: queue.Queue[str] = queue.Queue()
        self._workers = [
            threading.Thread(target=self._run, name=f"job-worker-{i}", daemon=True)
            for i in range(worker_count)
        ]
        for w in self._workers:
            w.start()

    def pending(self) -> int:
        return sum(1 for j in self.store.all() if j.state in ("QUEUED", "RUNNING"))

    def submit(self, kind: str, payload: dict) -> Job:
        if kind not in JOB_KINDS:
            raise ValueError(f"unknown job kind {kind!r}")
        if self.pending() >= self.capacity:
            raise QueueFull(f"job queue at capacity ({self.capacity})")
        job = self.store.create(kind, payload)
        self._q.put(job.id)
        return job

    def _run(self) -> None:
        while True:
            job_id = self._q.get()
            job = self.store.get(job_id)
            if job is None or job.state != "QUEUED":
                continue
            self.store.update(job_id, state="RUNNING", started_at=time.time())
            try:
                result = self.handler(job.kind, job.payload, job_id)
                self.store.update(job_id, state="DONE", result=result, finished_at=time.time())
            except Exception as exc:  # job failures are data, not crashes
                self.store.update(
                    job_id, state="FAILED", error=f"{type(exc).__name__}: {exc}",
                    finished_at=time.time(),
                )

    def join(self, timeout: float | None = None) -> None:
        """Wait until the queue drains (test helper)."""
        deadline = None if timeout is None else time.time() + timeout
        while self.pending() > 0:
            if deadline is not None and time.time() > deadline:
                raise TimeoutError("jobs did not finish in time")
            time.sleep(0.02)
