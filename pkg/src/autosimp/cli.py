"""Command-line entry points for the whole pipeline.

Machine-readable JSON goes to stdout (or ``--out``); human status lines go
to stderr. Exit code 0 means the requested run passed evaluation, so the
CLI composes with shell scripting and CI checks.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bc import generate_bc
from .bench import load_suite, render_table, run_benchmark
from .configurator import ConfigureError, configure
from .controllers import CONTROLLER_KINDS
from .evaluator import evaluate
from .frames import encode_frame
from .llm import LlmBackendConfig
from .mesh import mesh_from_spec
from .orchestrator import run_from_spec
from .solver import ControlParams, IterationRecord, SolveHistory
from .spec import (
    ProblemSpec,
    SpecParseError,
    SpecRejection,
    deserialize_spec,
    serialize_spec,
    spec_to_dict,
    validate_spec,
)


def _write_output(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _load_spec(path: str) -> ProblemSpec:
    candidate = deserialize_spec(Path(path).read_text())
    spec, rails = validate_spec(candidate)
    for entry in rails:
        print(f"[rail] {entry.rail}: {entry.action}: {entry.detail}", file=sys.stderr)
    return spec


def _cmd_configure(args) -> int:
    try:
        spec, rail_log = configure(args.prompt, backend_config=LlmBackendConfig.from_env())
    except ConfigureError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    doc = {"spec": spec_to_dict(spec), "rail_log": [r.to_dict() for r in rail_log]}
    _write_output(json.dumps(doc, indent=2), args.out)
    return 0


def _frame_observer(every: int, mesh):
    def observer(record, rho_tilde):
        if record.iteration % every == 0:
            line = {
                "iteration": record.iteration,
                "phase": record.phase,
                "compliance": record.compliance,
                "grayness": record.grayness,
                "params": record.params.to_dict(),
                "frame": encode_frame(rho_tilde, mesh),
            }
            print(json.dumps(line), flush=True)

    return observer


def _run_and_report(spec: ProblemSpec, args, rail_log=None) -> int:
    observer = None
    if getattr(args, "frames_every", None):
        observer = _frame_observer(args.frames_every, mesh_from_spec(spec))
    report = run_from_spec(
        spec,
        args.controller,
        retries=args.retries,
        backend_config=LlmBackendConfig.from_env(),
        rail_log=rail_log or [],
        observer=observer,
    )
    _write_output(report.to_json(), args.out)
    status = "PASS" if report.passed else "FAIL"
    compliance = f"{report.compliance:.4f}" if report.compliance is not None else "n/a"
    print(
        f"{status}: controller={args.controller} compliance={compliance} "
        f"attempts={len(report.attempts)}",
        file=sys.stderr,
    )
    return 0 if report.passed else 1


def _cmd_solve(args) -> int:
    spec = _load_spec(args.spec)
    if args.iters is not None:
        spec = replace(spec, solve=replace(spec.solve, max_iterations=args.iters))
    return _run_and_report(spec, args)


def _cmd_run(args) -> int:
    try:
        spec, rail_log = configure(args.prompt, backend_config=LlmBackendConfig.from_env())
    except ConfigureError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    print(f"configured spec:\n{serialize_spec(spec)}", file=sys.stderr)
    return _run_and_report(spec, args, rail_log=rail_log)


def _history_from_document(doc: dict) -> SolveHistory | None:
    hist = doc.get("history")
    if not hist:
        return None
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
        for r in hist.get("records", [])
    ]
    return SolveHistory(
        records=records,
        early_exit=bool(hist.get("early_exit", False)),
        functional_convergence=bool(hist.get("functional_convergence", False)),
    )


def _cmd_evaluate(args) -> int:
    doc = json.loads(Path(args.result).read_text())
    spec_dict = doc.get("final_spec") or doc.get("spec")
    if spec_dict is None or doc.get("density") is None:
        print("result document lacks spec or density", file=sys.stderr)
        return 2
    spec, _ = validate_spec(spec_dict)
    mesh = mesh_from_spec(spec)
    arrays = generate_bc(spec, mesh)
    density = np.asarray(doc["density"], dtype=float)
    report = evaluate(density, arrays, mesh, spec, _history_from_document(doc))
    _write_output(json.dumps(report.to_dict(), indent=2), getattr(args, "out", None))
    return 0 if report.passed else 1


def _cmd_bench(args) -> int:
    suite = load_suite(args.suite)
    if args.skip_3d:
        suite = [(name, spec) for name, spec in suite if spec.ndim == 2]
    controllers = [c.strip() for c in args.controllers.split(",") if c.strip()]
    for controller in controllers:
        if controller not in CONTROLLER_KINDS:
            print(f"unknown controller {controller!r}", file=sys.stderr)
            return 2
    results = run_benchmark(suite, controllers, jobs=args.jobs, max_iterations=args.iters)
    if args.out:
        Path(args.out).write_text(json.dumps(results, indent=2) + "\n")
    print(render_table(results))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(backend_config=LlmBackendConfig.from_env())
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="autosimp",
        description="Topology optimization from natural language or spec files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("configure", help="turn a prompt into a validated problem spec")
    p.add_argument("--prompt", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_configure)

    p = sub.add_parser("solve", help="solve a spec file and evaluate the design")
    p.add_argument("--spec", required=True)
    p.add_argument("--controller", default="schedule", choices=CONTROLLER_KINDS)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--retries", type=int, default=2)
    p.add_argument("--out")
    p.add_argument("--frames-every", type=int, default=None, dest="frames_every")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("run", help="configure from a prompt, then solve and evaluate")
    p.add_argument("--prompt", required=True)
    p.add_argument("--controller", default="schedule", choices=CONTROLLER_KINDS)
    p.add_argument("--retries", type=int, default=2)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_run, frames_every=None)

    p = sub.add_parser("evaluate", help="re-evaluate a stored result document")
    p.add_argument("--result", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("bench", help="run a controller comparison over a problem suite")
    p.add_argument("--suite", default=None)
    p.add_argument("--controllers", default="schedule")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--skip-3d", action="store_true", dest="skip_3d")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("serve", help="start the HTTP job service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SpecParseError, SpecRejection) as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"file not found: {exc.filename}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
