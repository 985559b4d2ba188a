"""Benchmark runner: a problem suite times a controller list.

Reproduces the summary tables (pass rates, compliance statistics, final
grayness per controller) at whatever scale the iteration override allows.
Rows are computed independently, so a thread pool parallelizes cleanly:
the heavy work is in numpy/scipy which releases the GIL.
"""

from __future__ import annotations

import json
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .orchestrator import run_from_spec
from .spec import ProblemSpec, validate_spec


@dataclass
class BenchRow:
    problem: str
    controller: str
    passed: bool
    compliance: float | None
    grayness: float | None
    seconds: float
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "controller": self.controller,
            "passed": self.passed,
            "compliance": self.compliance,
            "grayness": self.grayness,
            "seconds": round(self.seconds, 3),
            "error": self.error,
        }


def load_suite(path: str | Path | None = None) -> list[tuple[str, ProblemSpec]]:
    """(name, validated spec) pairs from a suite file or the bundled default."""
    if path is None:
        text = resources.files("autosimp.resources").joinpath("benchmark_suite.json").read_text()
    else:
        text = Path(path).read_text()
    doc = json.loads(text)
    out = []
    for entry in doc["problems"]:
        spec, _ = validate_spec(entry["spec"])
        out.append((entry["name"], spec))
    return out


def _run_one(name: str, spec: ProblemSpec, controller: str, backend=None) -> BenchRow:
    start = time.perf_counter()
    try:
        report = run_from_spec(spec, controller, retries=0, backend=backend)
    except Exception as exc:  # a broken row should not sink the table
        return BenchRow(name, controller, False, None, None, time.perf_counter() - start, str(exc))
    gray = None
    if report.evaluation is not None:
        gray = report.evaluation.gate("grayness").value
    return BenchRow(
        problem=name,
        controller=controller,
        passed=report.passed,
        compliance=report.compliance,
        grayness=gray,
        seconds=time.perf_counter() - start,
    )


def run_benchmark(
    suite: list[tuple[str, ProblemSpec]],
    controllers: list[str],
    jobs: int = 1,
    max_iterations: int | None = None,
    backend=None,
) -> dict:
    """Run the full problem/controller matrix and summarize per controller."""
    tasks = []
    for name, spec in suite:
        if max_iterations is not None:
            spec = replace(spec, solve=replace(spec.solve, max_iterations=max_iterations))
        for controller in controllers:
            tasks.append((name, spec, controller))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda t: _run_one(*t, backend=backend), tasks))
    else:
        rows = [_run_one(*t, backend=backend) for t in tasks]

    summary = {}
    for controller in controllers:
        sub = [r for r in rows if r.controller == controller]
        compliances = [r.compliance for r in sub if r.compliance is not None]
        grays = [r.grayness for r in sub if r.grayness is not None]
        summary[controller] = {
            "problems": len(sub),
            "pass_rate": sum(r.passed for r in sub) / len(sub) if sub else 0.0,
            "mean_compliance": statistics.fmean(compliances) if compliances else None,
            "median_compliance": statistics.median(compliances) if compliances else None,
            "mean_grayness": statistics.fmean(grays) if grays else None,
        }
    return {"rows": [r.to_dict() for r in rows], "summary": summary}


def render_table(results: dict) -> str:
    """Human-readable fixed-width table of rows plus the per-controller summary."""
    lines = []
    header = f"{'problem':32} {'controller':12} {'pass':5} {'compliance':>12} {'grayness':>9} {'sec':>8}"
    lines.append(header)
    lines.append("-" * len(header))
    for row in results["rows"]:
        comp = f"{row['compliance']:.2f}" if row["compliance"] is not None else "-"
        gray = f"{row['grayness']:.4f}" if row["grayness"] is not None else "-"
        status = "ok" if row["passed"] else ("ERR" if row["error"] else "fail")
        lines.append(
            f"{row['problem']:32} {row['controller']:12} {status:5} {comp:>12} {gray:>9} {row['seconds']:>8.1f}"
        )
    lines.append("")
    for controller, s in results["summary"].items():
        mean_c = f"{s['mean_compliance']:.2f}" if s["mean_compliance"] is not None else "-"
        med_c = f"{s['median_compliance']:.2f}" if s["median_compliance"] is not None else "-"
        gray = f"{s['mean_grayness']:.4f}" if s["mean_grayness"] is not None else "-"
        lines.append(
            f"{controller}: pass {100 * s['pass_rate']:.0f}% of {s['problems']}, "
            f"compliance mean {mean_c} median {med_c}, grayness {gray}"
        )
    return "\n".join(lines)
