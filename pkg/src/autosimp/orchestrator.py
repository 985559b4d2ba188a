"""End-to-end pipeline: configure once, then solve/evaluate with retries.

Each attempt regenerates boundary conditions from the working spec, runs
the controlled solve, and evaluates the result. A failed attempt consumes
one retry and applies at most one corrective spec edit (the evaluator's
rerun hint). The first passing attempt wins; if none passes, the lowest
compliance attempt is reported. The original spec is preserved verbatim
in the run report next to the possibly hint-edited final spec.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bc import SolverArrays, generate_bc
from .configurator import RailLog, configure
from .controllers import make_controller
from .evaluator import (
    RERUN_ITER_FACTOR,
    EvaluationReport,
    RerunHint,
    evaluate,
    make_rerun_hint,
)
from .fem import SingularSystemError
from .llm import LlmBackendConfig
from .mesh import Mesh, mesh_from_spec
from .solver import BisectionFailedError, ObserverFn, SolveHistory, SolveResult, solve
from .spec import ProblemSpec, spec_to_dict

DEFAULT_RETRIES = 2

EvaluateFn = Callable[[np.ndarray, SolverArrays, Mesh, ProblemSpec, SolveHistory], EvaluationReport]


@dataclass
class AttemptRecord:
    index: int
    spec: ProblemSpec
    report: EvaluationReport | None = None
    compliance: float | None = None
    hint: RerunHint | None = None  # hint applied after this attempt
    error: str | None = None
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.report is not None and self.report.passed

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "spec": spec_to_dict(self.spec),
            "passed": self.passed,
            "compliance": self.compliance,
            "report": self.report.to_dict() if self.report else None,
            "hint": self.hint.to_dict() if self.hint else None,
            "error": self.error,
        }


@dataclass
class RunReport:
    passed: bool
    controller: str
    spec: ProblemSpec  # as configured/validated, before any rerun hints
    final_spec: ProblemSpec | None
    compliance: float | None
    density: np.ndarray | None
    history: SolveHistory | None
    evaluation: EvaluationReport | None
    attempts: list[AttemptRecord]
    rail_log: RailLog = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def to_document(self) -> dict:
        """Result document; everything except ``timings`` is deterministic."""
        return {
            "passed": self.passed,
            "controller": self.controller,
            "spec": spec_to_dict(self.spec),
            "final_spec": spec_to_dict(self.final_spec) if self.final_spec else None,
            "compliance": self.compliance,
            "density": None if self.density is None else [float(v) for v in self.density],
            "history": None
            if self.history is None
            else {
                "records": [r.to_dict() for r in self.history.records],
                "early_exit": self.history.early_exit,
                "functional_convergence": self.history.functional_convergence,
            },
            "evaluation": self.evaluation.to_dict() if self.evaluation else None,
            "attempts": [a.to_dict() for a in self.attempts],
            "rail_log": [r.to_dict() for r in self.rail_log],
            "timings": self.timings,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_document(), indent=2, sort_keys=True)


@dataclass
class _AttemptOutcome:
    spec: ProblemSpec
    result: SolveResult | None
    report: EvaluationReport | None


def run_from_spec(
    spec: ProblemSpec,
    controller_kind: str = "schedule",
    retries: int = DEFAULT_RETRIES,
    *,
    backend=None,
    backend_config: LlmBackendConfig | None = None,
    rail_log: RailLog | None = None,
    observer: ObserverFn | None = None,
    evaluate_fn: EvaluateFn | None = None,
    method: str = "auto",
) -> RunReport:
    """Solve/evaluate loop with up to ``retries`` corrective reruns."""
    evaluate_fn = evaluate_fn if evaluate_fn is not None else evaluate
    attempts: list[AttemptRecord] = []
    timings: dict = {"attempts": []}
    working = spec
    best: _AttemptOutcome | None = None
    total_start = time.perf_counter()

    for index in range(retries + 1):
        mesh = mesh_from_spec(working)
        arrays = generate_bc(working, mesh)
        controller = make_controller(
            controller_kind, working.solve.max_iterations, backend=backend, config=backend_config
        )
        record = AttemptRecord(index=index, spec=working)
        attempts.append(record)
        start = time.perf_counter()
        hint: RerunHint | None = None
        try:
            result = solve(working, controller, arrays, mesh=mesh, observer=observer, method=method)
        except (BisectionFailedError, SingularSystemError) as exc:
            record.error = str(exc)
            # no design to diagnose; retry with the default longer budget
            hint = RerunHint(
                "max_iterations",
                math.ceil(RERUN_ITER_FACTOR * working.solve.max_iterations),
                "solver_error",
            )
        else:
            report = evaluate_fn(result.density, arrays, mesh, working, result.history)
            record.report = report
            record.compliance = result.compliance
            outcome = _AttemptOutcome(spec=working, result=result, report=report)
            if report.passed:
                best = outcome
                record.seconds = time.perf_counter() - start
                timings["attempts"].append(record.seconds)
                break
            if best is None or (
                best.result is not None and result.compliance < best.result.compliance
            ):
                best = outcome
            hint = make_rerun_hint(report, working)
        record.seconds = time.perf_counter() - start
        timings["attempts"].append(record.seconds)
        if index < retries and hint is not None:
            record.hint = hint
            working = hint.apply(working)

    timings["total"] = time.perf_counter() - total_start
    if best is None or best.result is None:
        return RunReport(
            passed=False,
            controller=controller_kind,
            spec=spec,
            final_spec=attempts[-1].spec if attempts else None,
            compliance=None,
            density=None,
            history=None,
            evaluation=None,
            attempts=attempts,
            rail_log=rail_log or [],
            timings=timings,
        )
    return RunReport(
        passed=best.report.passed,
        controller=controller_kind,
        spec=spec,
        final_spec=best.spec,
        compliance=best.result.compliance,
        density=best.result.density,
        history=best.result.history,
        evaluation=best.report,
        attempts=attempts,
        rail_log=rail_log or [],
        timings=timings,
    )


def run_pipeline(
    prompt: str,
    controller_kind: str = "schedule",
    retries: int = DEFAULT_RETRIES,
    *,
    backend=None,
    backend_config: LlmBackendConfig | None = None,
    observer: ObserverFn | None = None,
    method: str = "auto",
) -> RunReport:
    """Natural-language prompt all the way to an evaluated design."""
    t0 = time.perf_counter()
    spec, rail_log = configure(prompt, backend_config=backend_config, backend=backend)
    configure_seconds = time.perf_counter() - t0
    report = run_from_spec(
        spec,
        controller_kind,
        retries,
        backend=backend,
        backend_config=backend_config,
        rail_log=rail_log,
        observer=observer,
        method=method,
    )
    report.timings["configure"] = configure_seconds
    return report


def strip_timings(document: dict) -> dict:
    """Copy of a result document without its nondeterministic timings."""
    return {k: v for k, v in document.items() if k != "timings"}
