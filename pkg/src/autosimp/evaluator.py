"""Design evaluation: hard gates, diagnostic metrics, rerun hints.

A finished design must pass five gates: the solid phase is connected from
supports to loads, the tail did not degrade compliance, the field is
nearly binary, the volume target is met, and the run actually converged.
Three softer metrics (thin members, checkerboarding, load-path
directness) are reported without pass thresholds. When a gate fails, a
single corrective spec edit is suggested for the retry loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .bc import SolverArrays
from .mesh import Mesh
from .solver import SolveHistory, grayness_of
from .spec import ProblemSpec, SolveSettings

SOLID_THRESHOLD = 0.5
CONNECTIVITY_MIN_FRACTION = 0.99
COMPLIANCE_RATIO_MAX = 2.0
GRAYNESS_MAX = 0.15
VOLUME_TOL = 0.02
STABILITY_WINDOW = 15
STABILITY_REL_RANGE = 0.005
RERUN_ITER_FACTOR = 1.3


@dataclass
class GateResult:
    name: str
    passed: bool
    value: float | None
    detail: str = ""
    evaluated: bool = True

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "detail": self.detail,
            "evaluated": self.evaluated,
        }


@dataclass
class DesignMetrics:
    thin_member_fraction: float
    checkerboard_index: float
    load_path_efficiency: float

    def to_dict(self) -> dict:
        return {
            "thin_member_fraction": self.thin_member_fraction,
            "checkerboard_index": self.checkerboard_index,
            "load_path_efficiency": self.load_path_efficiency,
        }


@dataclass
class EvaluationReport:
    gates: list[GateResult]
    metrics: DesignMetrics
    passed: bool
    partial: bool  # True when history-dependent gates were skipped

    def gate(self, name: str) -> GateResult:
        for g in self.gates:
            if g.name == name:
                return g
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "gates": [g.to_dict() for g in self.gates],
            "metrics": self.metrics.to_dict(),
            "passed": self.passed,
            "partial": self.partial,
        }


@dataclass(frozen=True)
class RerunHint:
    field: str  # max_iterations | volume_fraction
    value: float | int
    reason: str

    def apply(self, spec: ProblemSpec) -> ProblemSpec:
        if self.field == "max_iterations":
            settings = SolveSettings(max_iterations=int(self.value), seed=spec.solve.seed)
            return replace(spec, solve=settings)
        if self.field == "volume_fraction":
            vf = min(max(float(self.value), 0.1), 0.9)
            return replace(spec, volume_fraction=vf)
        raise ValueError(f"unknown hint field {self.field!r}")

    def to_dict(self) -> dict:
        return {"field": self.field, "value": self.value, "reason": self.reason}


# ---------------------------------------------------------------------------
# grid helpers

def _solid_grid(rho_tilde: np.ndarray, mesh: Mesh) -> np.ndarray:
    """Boolean solid map in grid axes order (nx, ny[, nz])."""
    shape = mesh.shape[::-1]  # flat order is iz, iy, ix
    solid = np.asarray(rho_tilde) > SOLID_THRESHOLD
    return solid.reshape(shape).T  # -> (nx, ny[, nz])


def _elements_adjacent_to_nodes(mesh: Mesh, node_flags: np.ndarray) -> np.ndarray:
    """Boolean per element: does it touch any flagged node."""
    return node_flags[mesh.element_nodes].any(axis=1)


def _flood_fill(solid: np.ndarray, seeds: np.ndarray) -> np.ndarray:
    """Face-connected reachability inside the solid phase (4-/6-neighbor)."""
    reached = seeds & solid
    if not reached.any():
        return reached
    while True:
        frontier = np.zeros_like(reached)
        for axis in range(solid.ndim):
            fwd = np.roll(reached, 1, axis=axis)
            _zero_wrap(fwd, axis, 0)
            back = np.roll(reached, -1, axis=axis)
            _zero_wrap(back, axis, -1)
            frontier |= fwd | back
        grown = reached | (frontier & solid)
        if grown.sum() == reached.sum():
            return reached
        reached = grown


def _zero_wrap(arr: np.ndarray, axis: int, edge: int) -> None:
    # np.roll wraps around; kill the wrapped slab
    sl = [slice(None)] * arr.ndim
    sl[axis] = 0 if edge == 0 else arr.shape[axis] - 1
    arr[tuple(sl)] = False


def _bfs_distances(solid: np.ndarray, seeds: np.ndarray) -> np.ndarray:
    """Step counts from the seed set through solid cells; inf if unreached."""
    dist = np.full(solid.shape, np.inf)
    current = seeds & solid
    dist[current] = 0.0
    step = 0
    while current.any():
        step += 1
        frontier = np.zeros_like(current)
        for axis in range(solid.ndim):
            fwd = np.roll(current, 1, axis=axis)
            _zero_wrap(fwd, axis, 0)
            back = np.roll(current, -1, axis=axis)
            _zero_wrap(back, axis, -1)
            frontier |= fwd | back
        current = frontier & solid & np.isinf(dist)
        dist[current] = step
    return dist


def _fixed_node_flags(arrays: SolverArrays, mesh: Mesh) -> np.ndarray:
    flags = np.zeros(mesh.n_nodes, dtype=bool)
    flags[np.unique(arrays.fixed_dofs // mesh.ndim)] = True
    return flags


def _loaded_nodes(arrays: SolverArrays, mesh: Mesh) -> np.ndarray:
    per_node = arrays.force.reshape(mesh.n_nodes, mesh.ndim)
    return np.nonzero(np.any(per_node != 0.0, axis=1))[0]


# ---------------------------------------------------------------------------
# gates

def check_connectivity(
    rho_tilde: np.ndarray, arrays: SolverArrays, mesh: Mesh
) -> GateResult:
    """Solid phase must reach from support-adjacent elements to every load."""
    solid_flat = np.asarray(rho_tilde) > SOLID_THRESHOLD
    n_solid = int(solid_flat.sum())
    if n_solid == 0:
        return GateResult(
            "connectivity", False, 0.0, "NO_SOLID_ELEMENTS: nothing above the solid threshold"
        )

    seeds_flat = solid_flat & _elements_adjacent_to_nodes(mesh, _fixed_node_flags(arrays, mesh))
    solid = _solid_grid(rho_tilde, mesh)
    seeds = seeds_flat.reshape(mesh.shape[::-1]).T  # grid view of the flat mask
    reached = _flood_fill(solid, seeds)
    fraction = float(reached.sum() / n_solid)

    reached_flat = np.asarray(reached.T).reshape(-1)
    loads_ok = True
    detail = ""
    for node in _loaded_nodes(arrays, mesh):
        incident = mesh.elements_touching_node(int(node))
        incident_solid = incident[solid_flat[incident]]
        if incident_solid.size == 0:
            loads_ok = False
            detail = f"load at node {node} touches no solid element"
            break
        if not reached_flat[incident_solid].all():
            loads_ok = False
            detail = f"load at node {node} is not reached from the supports"
            break

    passed = fraction >= CONNECTIVITY_MIN_FRACTION and loads_ok
    if not detail and fraction < CONNECTIVITY_MIN_FRACTION:
        detail = f"only {fraction:.3f} of solid elements reachable from supports"
    return GateResult("connectivity", passed, fraction, detail)


def check_compliance_ratio(history: SolveHistory | None) -> GateResult:
    if history is None or not history.records:
        return GateResult("compliance_ratio", False, None, "not evaluated: history required", evaluated=False)
    final = history.records[-1].compliance
    best = min(r.compliance for r in history.records)
    if best <= 0.0:
        return GateResult("compliance_ratio", False, None, "non-positive compliance in history")
    ratio = final / best
    return GateResult(
        "compliance_ratio",
        ratio < COMPLIANCE_RATIO_MAX,
        float(ratio),
        f"final/best = {ratio:.3f}",
    )


def check_grayness(rho_tilde: np.ndarray) -> GateResult:
    value = grayness_of(rho_tilde)
    return GateResult("grayness", value <= GRAYNESS_MAX, value, f"G = {value:.4f}")


def check_volume(rho_tilde: np.ndarray, volume_fraction: float) -> GateResult:
    actual = float(np.mean(rho_tilde))
    err = abs(actual - volume_fraction)
    return GateResult(
        "volume", err <= VOLUME_TOL, actual, f"|{actual:.4f} - {volume_fraction:g}| = {err:.4f}"
    )


def check_convergence(history: SolveHistory | None) -> GateResult:
    if history is None:
        return GateResult("convergence", False, None, "not evaluated: history required", evaluated=False)
    if history.early_exit:
        return GateResult("convergence", True, None, "mode: early_exit")
    if history.functional_convergence:
        return GateResult("convergence", True, None, "mode: functional")
    main = history.main_records()
    if len(main) < STABILITY_WINDOW:
        return GateResult(
            "convergence", False, None,
            f"mode: failed ({len(main)} main iterations < window {STABILITY_WINDOW})",
        )
    window = [r.compliance for r in main[-STABILITY_WINDOW:]]
    lo, hi = min(window), max(window)
    if lo <= 0.0:
        return GateResult("convergence", False, None, "non-positive compliance in window")
    rel = (hi - lo) / lo
    return GateResult(
        "convergence",
        rel < STABILITY_REL_RANGE,
        float(rel),
        f"mode: {'stability' if rel < STABILITY_REL_RANGE else 'failed'} (window range {rel:.5f})",
    )


# ---------------------------------------------------------------------------
# metrics

def _thin_fraction_2d(solid: np.ndarray) -> float:
    """solid: (nx, ny) boolean; out-of-domain neighbors count as void."""
    if not solid.any():
        return 0.0
    padded = np.pad(solid, 1, constant_values=False)
    core = padded[1:-1, 1:-1]
    thin_x = core & ~padded[:-2, 1:-1] & ~padded[2:, 1:-1]
    thin_y = core & ~padded[1:-1, :-2] & ~padded[1:-1, 2:]
    thin = (thin_x | thin_y) & solid
    return float(thin.sum() / solid.sum())


def thin_member_fraction(rho_tilde: np.ndarray, mesh: Mesh) -> float:
    """Share of solid elements only one element wide along some axis."""
    solid = _solid_grid(rho_tilde, mesh)
    if mesh.ndim == 2:
        return _thin_fraction_2d(solid)
    slices = [
        _thin_fraction_2d(solid[:, :, iz]) for iz in range(mesh.nz) if solid[:, :, iz].any()
    ]
    return float(np.mean(slices)) if slices else 0.0


def _checkerboard_2d(values: np.ndarray) -> float:
    """values: (nx, ny) projected densities."""
    if values.shape[0] < 2 or values.shape[1] < 2:
        return 0.0
    a = values[:-1, :-1]  # (i, j)
    b = values[1:, :-1]  # (i+1, j)
    c = values[1:, 1:]  # (i+1, j+1)
    d = values[:-1, 1:]  # (i, j+1)
    diag1_min = np.minimum(a, c)
    diag1_max = np.maximum(a, c)
    diag2_min = np.minimum(b, d)
    diag2_max = np.maximum(b, d)
    term = np.maximum(0.0, diag1_min - diag2_max) + np.maximum(0.0, diag2_min - diag1_max)
    return float(term.mean())


def checkerboard_index(rho_tilde: np.ndarray, mesh: Mesh) -> float:
    """Mean alternating-diagonal contrast over 2x2 element windows."""
    shape = mesh.shape[::-1]
    values = np.asarray(rho_tilde, dtype=float).reshape(shape).T
    if mesh.ndim == 2:
        return _checkerboard_2d(values)
    return float(np.mean([_checkerboard_2d(values[:, :, iz]) for iz in range(mesh.nz)]))


def load_path_efficiency(rho_tilde: np.ndarray, arrays: SolverArrays, mesh: Mesh) -> float:
    """Straight-line over through-solid path length, averaged across loads."""
    solid_flat = np.asarray(rho_tilde) > SOLID_THRESHOLD
    if not solid_flat.any():
        return 0.0
    solid = _solid_grid(rho_tilde, mesh)
    seeds_flat = solid_flat & _elements_adjacent_to_nodes(mesh, _fixed_node_flags(arrays, mesh))
    if not seeds_flat.any():
        return 0.0
    seeds = seeds_flat.reshape(mesh.shape[::-1]).T
    dist = _bfs_distances(solid, seeds)
    dist_flat = np.asarray(dist.T).reshape(-1)

    grid_coords = mesh.element_grid_coords().astype(float)
    seed_coords = grid_coords[seeds_flat]
    scores = []
    for node in _loaded_nodes(arrays, mesh):
        incident = mesh.elements_touching_node(int(node))
        incident_solid = incident[solid_flat[incident]]
        if incident_solid.size == 0:
            scores.append(0.0)
            continue
        start = int(incident_solid[np.argmin(dist_flat[incident_solid])])
        steps = dist_flat[start]
        if math.isinf(steps):
            scores.append(0.0)
            continue
        if steps == 0.0:
            scores.append(1.0)
            continue
        euclid = float(np.min(np.linalg.norm(seed_coords - grid_coords[start], axis=1)))
        scores.append(min(1.0, max(0.0, euclid / steps)))
    return float(np.mean(scores)) if scores else 0.0


def compute_metrics(rho_tilde: np.ndarray, arrays: SolverArrays, mesh: Mesh) -> DesignMetrics:
    return DesignMetrics(
        thin_member_fraction=thin_member_fraction(rho_tilde, mesh),
        checkerboard_index=checkerboard_index(rho_tilde, mesh),
        load_path_efficiency=load_path_efficiency(rho_tilde, arrays, mesh),
    )


# ---------------------------------------------------------------------------
# entry points

def evaluate(
    rho_tilde: np.ndarray,
    arrays: SolverArrays,
    mesh: Mesh,
    spec: ProblemSpec,
    history: SolveHistory | None = None,
) -> EvaluationReport:
    """Run every gate and metric; history-dependent gates skip gracefully."""
    gates = [
        check_connectivity(rho_tilde, arrays, mesh),
        check_compliance_ratio(history),
        check_grayness(rho_tilde),
        check_volume(rho_tilde, spec.volume_fraction),
        check_convergence(history),
    ]
    evaluated = [g for g in gates if g.evaluated]
    return EvaluationReport(
        gates=gates,
        metrics=compute_metrics(rho_tilde, arrays, mesh),
        passed=all(g.passed for g in evaluated),
        partial=len(evaluated) < len(gates),
    )


def make_rerun_hint(report: EvaluationReport, spec: ProblemSpec) -> RerunHint | None:
    """One corrective edit for the next attempt; None when the design passed.

    Priority: convergence, then grayness (both ask for more iterations),
    then volume (retarget to what the run achieved); anything else failing
    alone falls back to a longer run.
    """
    if report.passed:
        return None
    longer = math.ceil(RERUN_ITER_FACTOR * spec.solve.max_iterations)
    if not report.gate("convergence").passed:
        return RerunHint("max_iterations", longer, "convergence")
    if not report.gate("grayness").passed:
        return RerunHint("max_iterations", longer, "grayness")
    volume_gate = report.gate("volume")
    if not volume_gate.passed and volume_gate.value is not None:
        return RerunHint("volume_fraction", float(volume_gate.value), "volume")
    return RerunHint("max_iterations", longer, "default")
