"""In-memory registry of background evaluation jobs with progress polling."""

import threading
import uuid
from dataclasses import dataclass, field


@dataclass
class Job:
    id: str
    status: str = "running"
    done: int = 0
    total: int = 0
    error: str | None = None
    report: dict | None = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "id": self.id,
                "status": self.status,
                "progress": {"done": self.done, "total": self.total},
                "error": self.error,
                "report": self.report,
            }


class JobRegistry:
    def __init__(self):
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()

    def get(self, job_id: str) -> Job | None:
        with self._lock:
            return self._jobs.get(job_id)

    def start(self, work) -> Job:
        """Run ``work(job)`` on a daemon thread; the callable fills in the
        report or raises, and the registry tracks the outcome."""
        job = Job(id=uuid.uuid4().hex)
        with self._lock:
            self._jobs[job.id] = job

        def runner():
            try:
                report = work(job)
                with job._lock:
                    job.report = report
                    job.status = "done"
            except Exception as exc:  # surfaced to the poller, not the log
                with job._lock:
                    job.error = str(exc)
                    job.status = "error"

        threading.Thread(target=runner, daemon=True).start()
        return job
