"""HTTP job service around the solve pipeline.

Solves run on a worker pool and are observed through polling endpoints:
submit returns a job id immediately, ``GET /api/jobs/{id}`` reports progress
plus the latest density frame, and the full result document becomes
available once the job reaches ``done``. Job state only moves forward
(queued -> running -> tail -> done/failed) so pollers never see regressions.
"""

from __future__ import annotations

import os
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from typing import Any, Mapping

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware

import numpy as np

from .bc import generate_bc
from .configurator import ConfigureError, configure
from .controllers import CONTROLLER_KINDS
from .evaluator import evaluate
from .frames import encode_frame
from .llm import LlmBackendConfig
from .mesh import mesh_from_spec
from .orchestrator import run_from_spec
from .solver import ControlParams, IterationRecord, SolveHistory
from .spec import SpecParseError, SpecRejection, spec_to_dict, validate_spec

DEFAULT_QUEUE_CAPACITY = 64
DEFAULT_FRAMES_EVERY = 5

_STATUS_RANK = {"queued": 0, "running": 1, "tail": 2, "done": 3, "failed": 3}


@dataclass
class Job:
    job_id: str
    status: str = "queued"
    progress: dict[str, Any] = field(default_factory=dict)
    frame: dict[str, Any] | None = None
    result: dict[str, Any] | None = None
    error: str | None = None


class QueueFullError(RuntimeError):
    pass


class JobManager:
    """Bounded worker pool with progress snapshots per job."""

    def __init__(self, workers: int | None = None, capacity: int = DEFAULT_QUEUE_CAPACITY):
        self._workers = workers or min(4, os.cpu_count() or 1)
        self._capacity = capacity
        self._executor = ThreadPoolExecutor(max_workers=self._workers)
        self._lock = threading.Lock()
        self._jobs: dict[str, Job] = {}
        self._active = 0

    def get(self, job_id: str) -> Job | None:
        with self._lock:
            return self._jobs.get(job_id)

    def _advance(self, job: Job, status: str) -> None:
        # pollers rely on monotone status, never step backwards
        with self._lock:
            if _STATUS_RANK[status] >= _STATUS_RANK[job.status]:
                job.status = status

    def submit(self, spec, controller: str, retries: int, frames_every: int,
               backend=None, backend_config=None) -> str:
        with self._lock:
            if self._active >= self._capacity:
                raise QueueFullError(f"job queue is full ({self._capacity} pending)")
            self._active += 1
            job = Job(job_id=uuid.uuid4().hex)
            self._jobs[job.job_id] = job
        self._executor.submit(self._work, job, spec, controller, retries,
                              frames_every, backend, backend_config)
        return job.job_id

    def _work(self, job: Job, spec, controller, retries, frames_every,
              backend, backend_config) -> None:
        mesh = mesh_from_spec(spec)

        def observer(record, rho_tilde):
            self._advance(job, "tail" if record.phase == "tail" else "running")
            snapshot = {
                "iteration": record.iteration,
                "phase": record.phase,
                "compliance": record.compliance,
                "volume": record.volume,
                "grayness": record.grayness,
                "change": record.change,
                "params": record.params.to_dict(),
            }
            with self._lock:
                job.progress = snapshot
                if frames_every and record.iteration % frames_every == 0:
                    job.frame = encode_frame(rho_tilde, mesh)

        try:
            report = run_from_spec(
                spec,
                controller,
                retries=retries,
                backend=backend,
                backend_config=backend_config,
                observer=observer,
            )
            with self._lock:
                job.result = report.to_document()
            self._advance(job, "done")
        except Exception as exc:  # solver errors become a failed job, not a 500
            job.error = f"{type(exc).__name__}: {exc}"
            self._advance(job, "failed")
        finally:
            with self._lock:
                self._active -= 1

    def shutdown(self) -> None:
        self._executor.shutdown(wait=False, cancel_futures=True)


def _history_from_payload(payload: Any) -> SolveHistory | None:
    if not payload:
        return None
    if isinstance(payload, list):
        payload = {"records": payload}
    records = [
        IterationRecord(
            iteration=r["iteration"],
            phase=r["phase"],
            compliance=r["compliance"],
            volume=r["volume"],
            grayness=r["grayness"],
            change=r["change"],
            params=ControlParams(**r["params"]),
        )
        for r in payload.get("records", [])
    ]
    return SolveHistory(
        records=records,
        early_exit=bool(payload.get("early_exit", False)),
        functional_convergence=bool(payload.get("functional_convergence", False)),
    )


def create_app(backend=None, backend_config: LlmBackendConfig | None = None,
               workers: int | None = None,
               queue_capacity: int = DEFAULT_QUEUE_CAPACITY) -> FastAPI:
    """Build the service; tests inject a mock ``backend`` here."""
    manager = JobManager(workers=workers, capacity=queue_capacity)

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        manager.shutdown()

    app = FastAPI(title="autosimp", lifespan=lifespan)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.jobs = manager

    @app.get("/api/health")
    def health() -> dict[str, str]:
        return {"status": "ok"}

    @app.post("/api/configure")
    def api_configure(payload: dict) -> dict:
        prompt = payload.get("prompt")
        if not isinstance(prompt, str) or not prompt.strip():
            raise HTTPException(status_code=422, detail="missing prompt")
        try:
            spec, rail_log = configure(prompt, backend_config=backend_config, backend=backend)
        except ConfigureError as exc:
            code = 502 if exc.backend_unreachable else 422
            raise HTTPException(status_code=code, detail=str(exc))
        return {"spec": spec_to_dict(spec), "rail_log": [r.to_dict() for r in rail_log]}

    @app.post("/api/solve", status_code=202)
    def api_solve(payload: dict) -> dict:
        if "spec" not in payload:
            raise HTTPException(status_code=400, detail="missing spec")
        controller = payload.get("controller", "schedule")
        if controller not in CONTROLLER_KINDS:
            raise HTTPException(status_code=400, detail=f"unknown controller {controller!r}")
        try:
            spec, _ = validate_spec(payload["spec"])
        except (SpecParseError, SpecRejection) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        retries = int(payload.get("retries", 2))
        frames_every = int(payload.get("frames_every", DEFAULT_FRAMES_EVERY))
        try:
            job_id = manager.submit(spec, controller, retries, frames_every,
                                    backend=backend, backend_config=backend_config)
        except QueueFullError as exc:
            raise HTTPException(status_code=429, detail=str(exc))
        return {"job_id": job_id, "status": "queued"}

    @app.get("/api/jobs/{job_id}")
    def api_job_status(job_id: str) -> dict:
        job = manager.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail="unknown job")
        body: dict[str, Any] = {
            "job_id": job.job_id,
            "status": job.status,
            "progress": job.progress,
            "frame": job.frame,
        }
        if job.error is not None:
            body["error"] = job.error
        return body

    @app.get("/api/jobs/{job_id}/result")
    def api_job_result(job_id: str) -> dict:
        job = manager.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail="unknown job")
        if job.status == "failed":
            raise HTTPException(status_code=500, detail=job.error or "job failed")
        if job.status != "done" or job.result is None:
            raise HTTPException(status_code=409, detail=f"job is {job.status}, not done")
        return job.result

    @app.post("/api/evaluate")
    def api_evaluate(payload: dict) -> dict:
        if "spec" not in payload or "density" not in payload:
            raise HTTPException(status_code=400, detail="need spec and density")
        try:
            spec, _ = validate_spec(payload["spec"])
        except (SpecParseError, SpecRejection) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        mesh = mesh_from_spec(spec)
        density = np.asarray(payload["density"], dtype=float).ravel()
        if density.size != mesh.n_elements:
            raise HTTPException(
                status_code=400,
                detail=f"density length {density.size} != element count {mesh.n_elements}",
            )
        arrays = generate_bc(spec, mesh)
        history = _history_from_payload(payload.get("history"))
        report = evaluate(density, arrays, mesh, spec, history)
        return report.to_dict()

    @app.post("/api/assess")
    def api_assess(payload: dict) -> dict:
        if backend is None and (backend_config is None or not backend_config.configured):
            raise HTTPException(status_code=503, detail="no language backend configured")
        report: Mapping[str, Any] | None = payload.get("report")
        if report is None:
            raise HTTPException(status_code=400, detail="missing report")
        from .llm import make_backend

        chat = backend if backend is not None else make_backend(backend_config)
        import json as _json

        system = (
            "You review topology optimization results. Given gates, metrics and "
            "compliance, reply with two or three plain sentences for an engineer: "
            "whether the design is usable and what to try if it is not."
        )
        try:
            text = chat.chat(system, _json.dumps(report, sort_keys=True), timeout=30.0)
        except Exception as exc:
            raise HTTPException(status_code=502, detail=f"backend error: {exc}")
        return {"assessment": text.strip()}

    return app
