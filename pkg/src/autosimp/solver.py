"""Density-based topology optimization with a three-field design chain.

Design densities are smoothed by a cone-weighted neighborhood filter,
sharpened by a tanh projection, and only then interpolated into stiffness.
An optimality-criteria update with a bisected Lagrange multiplier enforces
the projected volume target every iteration. A pluggable controller owns
the continuation trajectory (penalty exponent, projection sharpness,
filter radius, move limit) and may finish with a fixed sharpening tail
that restarts from the best design seen under a trustworthy penalty.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Protocol

import numpy as np
import scipy.sparse as sp

from .bc import PASSIVE_FREE, PASSIVE_SOLID, PASSIVE_VOID, SolverArrays, generate_bc
from .fem import FieldState, assemble_and_solve
from .mesh import Mesh, mesh_from_spec
from .spec import ProblemSpec

PROJECTION_MIDPOINT = 0.5
P_GATE = 3.0  # penalty below this is not trusted for best-design snapshots
VOLUME_BISECTION_TOL = 1e-4
VOLUME_STEP_TOL = 1e-3
BISECTION_MAX_STEPS = 200
LAMBDA_LO, LAMBDA_HI = 1e-9, 1e9
EARLY_EXIT_CHANGE = 0.01
# a candidate design this close (relative to the step size) to the design two
# updates back is a period-2 orbit, not progress; measured orbits sit below
# 3e-3 while genuine convergence stays above 0.9
CYCLE_GAP_RATIO = 0.05
# once an orbit is detected, elements that keep reversing direction get their
# move limit halved down to this floor; consistent movers keep the full limit
MOVE_SCALE_FLOOR = 1.0 / 64.0


class BisectionFailedError(RuntimeError):
    """Volume target unreachable for any multiplier (passive regions too big)."""


@dataclass
class ControlParams:
    """Continuation state for one iteration of the main loop."""

    p: float
    beta: float
    r_min: float
    delta: float
    restart: bool = False

    def to_dict(self) -> dict:
        return {"p": self.p, "beta": self.beta, "r_min": self.r_min, "delta": self.delta}


@dataclass(frozen=True)
class TailConfig:
    """Fixed post-loop sharpening phase."""

    p: float = 4.5
    beta: float = 32.0
    r_min: float = 1.20
    delta: float = 0.05
    iterations: int = 40


STANDARD_TAIL = TailConfig()


@dataclass
class SolverObservation:
    """What a controller sees at the end of an iteration."""

    iteration: int
    budget: int
    compliance: float
    volume: float
    grayness: float
    change: float
    params: ControlParams
    has_best_valid: bool
    best_valid_compliance: float | None = None

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "budget": self.budget,
            "compliance": self.compliance,
            "volume": self.volume,
            "grayness": self.grayness,
            "change": self.change,
            **self.params.to_dict(),
        }


class Controller(Protocol):
    """Continuation policy driving the solve loop."""

    def init(self) -> ControlParams: ...

    def step(self, obs: SolverObservation) -> ControlParams | None: ...

    def finalize(self) -> TailConfig | None: ...


@dataclass
class Snapshot:
    density: np.ndarray  # projected field
    compliance: float
    iteration: int


@dataclass
class IterationRecord:
    iteration: int
    phase: str  # main | tail
    compliance: float
    volume: float
    grayness: float
    change: float
    params: ControlParams

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "phase": self.phase,
            "compliance": self.compliance,
            "volume": self.volume,
            "grayness": self.grayness,
            "change": self.change,
            "params": self.params.to_dict(),
        }


@dataclass
class SolveHistory:
    records: list[IterationRecord] = field(default_factory=list)
    best_valid: Snapshot | None = None
    early_exit: bool = False
    functional_convergence: bool = False

    def main_records(self) -> list[IterationRecord]:
        return [r for r in self.records if r.phase == "main"]


@dataclass
class SolveResult:
    density: np.ndarray  # projected field matching `compliance`
    compliance: float
    history: SolveHistory
    design: np.ndarray  # raw design field at exit


# ---------------------------------------------------------------------------
# density filter

_FILTER_CACHE: dict[tuple, tuple[sp.csr_matrix, sp.csr_matrix]] = {}


def _filter_operator(mesh: Mesh, r_min: float) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Row-normalized cone-weight operator W and its transpose, cached.

    Weights live in element-index space: w = max(0, r_min - d) with d the
    centroid distance in element units, so r_min <= 1 degenerates to the
    identity.
    """
    key = (mesh.shape, round(float(r_min), 12))
    if key in _FILTER_CACHE:
        return _FILTER_CACHE[key]

    shape = mesh.shape[::-1]  # flat order iz, iy, ix
    idx = np.arange(mesh.n_elements, dtype=np.int64).reshape(shape)
    reach = int(np.ceil(r_min)) - 1
    rows, cols, vals = [], [], []
    offsets = range(-reach, reach + 1)
    dim = mesh.ndim
    for dz in offsets if dim == 3 else (0,):
        for dy in offsets:
            for dx in offsets:
                d = float(np.sqrt(dx * dx + dy * dy + dz * dz))
                w = r_min - d
                if w <= 0.0:
                    continue
                src = [slice(max(0, -o), s - max(0, o)) for o, s in zip((dz, dy, dx)[-dim:], shape)]
                dst = [slice(max(0, o), s - max(0, -o)) for o, s in zip((dz, dy, dx)[-dim:], shape)]
                r = idx[tuple(src)].ravel()
                c = idx[tuple(dst)].ravel()
                rows.append(r)
                cols.append(c)
                vals.append(np.full(r.size, w))
    H = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(mesh.n_elements, mesh.n_elements),
    ).tocsr()
    row_sum = np.asarray(H.sum(axis=1)).ravel()
    W = sp.diags(1.0 / row_sum) @ H
    W = W.tocsr()
    WT = W.T.tocsr()
    _FILTER_CACHE[key] = (W, WT)
    return W, WT


def density_filter(rho: np.ndarray, r_min: float, mesh: Mesh) -> np.ndarray:
    """Cone-weighted neighborhood average of the design field."""
    W, _ = _filter_operator(mesh, r_min)
    return W @ np.asarray(rho, dtype=float)


def filter_adjoint(vec: np.ndarray, r_min: float, mesh: Mesh) -> np.ndarray:
    """Transpose of :func:`density_filter` for sensitivity chains."""
    _, WT = _filter_operator(mesh, r_min)
    return WT @ np.asarray(vec, dtype=float)


# ---------------------------------------------------------------------------
# projection

def heaviside(x: np.ndarray, beta: float, eta: float = PROJECTION_MIDPOINT) -> np.ndarray:
    """Smooth threshold mapping [0,1] onto itself, sharper with larger beta."""
    x = np.asarray(x, dtype=float)
    denom = np.tanh(beta * eta) + np.tanh(beta * (1.0 - eta))
    return (np.tanh(beta * eta) + np.tanh(beta * (x - eta))) / denom


def heaviside_derivative(x: np.ndarray, beta: float, eta: float = PROJECTION_MIDPOINT) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    denom = np.tanh(beta * eta) + np.tanh(beta * (1.0 - eta))
    t = np.tanh(beta * (x - eta))
    return beta * (1.0 - t * t) / denom


def _apply_passive(values: np.ndarray, passive_mask: np.ndarray, rho_min: float, solid_value: float = 1.0) -> np.ndarray:
    values[passive_mask == PASSIVE_VOID] = rho_min
    values[passive_mask == PASSIVE_SOLID] = solid_value
    return values


def project_design(
    rho: np.ndarray,
    mesh: Mesh,
    r_min: float,
    beta: float,
    passive_mask: np.ndarray,
    rho_min: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Design -> (filtered, projected) fields with passive values pinned."""
    rho_bar = density_filter(rho, r_min, mesh)
    rho_tilde = heaviside(rho_bar, beta)
    _apply_passive(rho_tilde, passive_mask, rho_min)
    return rho_bar, rho_tilde


def grayness_of(rho_tilde: np.ndarray) -> float:
    """4 E[x(1-x)]: 0 for a binary field, 1 for uniform 0.5."""
    x = np.asarray(rho_tilde, dtype=float)
    return float(4.0 * np.mean(x * (1.0 - x)))


# ---------------------------------------------------------------------------
# optimality-criteria update

def oc_update(
    rho: np.ndarray,
    sensitivity: np.ndarray,
    passive_mask: np.ndarray,
    volume_fraction: float,
    delta: float,
    *,
    mesh: Mesh,
    r_min: float,
    beta: float,
    rho_min: float,
) -> np.ndarray:
    """One multiplicative design update with a bisected volume multiplier.

    The multiplier is solved against the projected field so the volume
    target holds where it is measured. Passive elements take no update:
    their sensitivities are ignored and their values re-pinned.
    """
    rho = np.asarray(rho, dtype=float)
    sens = np.asarray(sensitivity, dtype=float).copy()
    sens[passive_mask != PASSIVE_FREE] = 0.0
    # compliance sensitivities are nonpositive; clip roundoff excursions
    sens = np.minimum(sens, 0.0)

    lower = np.maximum(rho - delta, rho_min)
    upper = np.minimum(rho + delta, 1.0)
    v_e = mesh.element_volume

    def candidate(lam: float) -> np.ndarray:
        step = rho * np.sqrt(-sens / (lam * v_e))
        x = np.clip(step, lower, upper)
        return _apply_passive(x, passive_mask, rho_min)

    def projected_volume(x: np.ndarray) -> float:
        _, x_tilde = project_design(x, mesh, r_min, beta, passive_mask, rho_min)
        return float(np.mean(x_tilde))

    # structural feasibility: even the extreme designs must straddle the target
    free = passive_mask == PASSIVE_FREE
    probe_hi = rho.copy()
    probe_hi[free] = 1.0
    probe_lo = rho.copy()
    probe_lo[free] = rho_min
    if projected_volume(_apply_passive(probe_hi, passive_mask, rho_min)) < volume_fraction - VOLUME_STEP_TOL:
        raise BisectionFailedError(
            "BISECTION_FAILED: volume target unreachable even with all free elements solid"
        )
    if projected_volume(_apply_passive(probe_lo, passive_mask, rho_min)) > volume_fraction + VOLUME_STEP_TOL:
        raise BisectionFailedError(
            "BISECTION_FAILED: passive solid regions exceed the volume target"
        )

    lo, hi = LAMBDA_LO, LAMBDA_HI
    x = candidate(np.sqrt(lo * hi))
    for _ in range(BISECTION_MAX_STEPS):
        lam = np.sqrt(lo * hi)  # geometric midpoint suits the huge bracket
        x = candidate(lam)
        vol = projected_volume(x)
        if abs(vol - volume_fraction) < VOLUME_BISECTION_TOL:
            return x
        if vol > volume_fraction:
            lo = lam
        else:
            hi = lam
    return x


# ---------------------------------------------------------------------------
# solve loop

ObserverFn = Callable[[IterationRecord, np.ndarray], None]


def _initial_design(n_elements: int, volume_fraction: float, passive_mask: np.ndarray, rho_min: float) -> np.ndarray:
    rho = np.full(n_elements, volume_fraction, dtype=float)
    return _apply_passive(rho, passive_mask, rho_min)


def solve(
    spec: ProblemSpec,
    controller: Controller,
    arrays: SolverArrays | None = None,
    *,
    mesh: Mesh | None = None,
    observer: ObserverFn | None = None,
    method: str = "auto",
) -> SolveResult:
    """Run the controlled main loop plus the controller's tail, if any.

    Each iteration: filter, project, FE solve, chain-ruled sensitivities,
    OC update, then the controller callback (its new parameters apply from
    the next iteration on; a restart request reseeds the design from the
    best trusted snapshot). ``observer`` receives every iteration record
    together with the projected field.
    """
    mesh = mesh if mesh is not None else mesh_from_spec(spec)
    arrays = arrays if arrays is not None else generate_bc(spec, mesh)
    vf = spec.volume_fraction
    rho_min = spec.material.rho_min
    passive = arrays.passive_mask

    rho = _initial_design(mesh.n_elements, vf, passive, rho_min)
    params = controller.init()
    history = SolveHistory()
    u_prev: np.ndarray | None = None
    last_tilde: np.ndarray | None = None
    last_compliance = float("nan")
    iteration = 0

    def run_phase(n_iters: int, phase: str, with_controller: bool) -> None:
        nonlocal rho, params, u_prev, last_tilde, last_compliance, iteration
        prev_design: np.ndarray | None = None  # design entering the previous iteration
        prev_sign: np.ndarray | None = None  # per-element direction of the last step
        move_scale: np.ndarray | None = None  # per-element damping, latched on a cycle
        for _ in range(n_iters):
            rho_bar, rho_tilde = project_design(rho, mesh, params.r_min, params.beta, passive, rho_min)
            state: FieldState = assemble_and_solve(
                mesh, rho_tilde, arrays, spec.material, params.p, method=method, warm_start=u_prev
            )
            u_prev = state.displacement
            compliance = state.compliance
            volume = float(np.mean(rho_tilde))
            gray = grayness_of(rho_tilde)

            if (
                phase == "main"
                and params.p >= P_GATE
                and volume <= vf + VOLUME_STEP_TOL
                and (history.best_valid is None or compliance < history.best_valid.compliance)
            ):
                # store the raw design, so a restart or the tail resumes the
                # exact trusted state instead of re-filtering a binarized field
                history.best_valid = Snapshot(rho.copy(), compliance, iteration)

            # pull the projected-field sensitivity back to design space
            chain = state.sensitivity * heaviside_derivative(rho_bar, params.beta)
            chain[passive != PASSIVE_FREE] = 0.0
            grad = filter_adjoint(chain, params.r_min, mesh)
            delta = params.delta if move_scale is None else params.delta * move_scale
            rho_new = oc_update(
                rho, grad, passive, vf, delta,
                mesh=mesh, r_min=params.r_min, beta=params.beta, rho_min=rho_min,
            )
            # under frozen parameters the OC map can lock into an exact
            # two-iteration orbit (symmetric loads do this reliably) that no
            # budget extension breaks; collapse the orbit onto its midpoint
            # and from then on damp every element that keeps reversing, so
            # the chatter contracts instead of re-forming at full amplitude
            step_vec = rho_new - rho
            step = float(np.max(np.abs(step_vec)))
            if move_scale is None and prev_design is not None and step > 0.0:
                cycle_gap = float(np.max(np.abs(rho_new - prev_design)))
                if cycle_gap < CYCLE_GAP_RATIO * step:
                    rho_new = 0.5 * (rho_new + rho)
                    step_vec = rho_new - rho
                    move_scale = np.ones_like(rho)
            elif move_scale is not None and prev_sign is not None:
                flips = step_vec * prev_sign < 0.0
                move_scale[flips] = np.maximum(move_scale[flips] * 0.5, MOVE_SCALE_FLOOR)
            prev_sign = np.sign(step_vec)
            prev_design = rho
            change = float(np.max(np.abs(rho_new - rho)))
            rho = rho_new

            record = IterationRecord(
                iteration=iteration,
                phase=phase,
                compliance=compliance,
                volume=volume,
                grayness=gray,
                change=change,
                params=replace(params, restart=False),
            )
            history.records.append(record)
            last_tilde, last_compliance = rho_tilde, compliance
            if observer is not None:
                observer(record, rho_tilde)
            iteration += 1

            if with_controller:
                obs = SolverObservation(
                    iteration=record.iteration,
                    budget=spec.solve.max_iterations,
                    compliance=compliance,
                    volume=volume,
                    grayness=gray,
                    change=change,
                    params=record.params,
                    has_best_valid=history.best_valid is not None,
                    best_valid_compliance=(
                        history.best_valid.compliance if history.best_valid is not None else None
                    ),
                )
                nxt = controller.step(obs)
                if nxt is not None:
                    if nxt.restart and history.best_valid is not None:
                        rho = history.best_valid.density.copy()
                        # discontinuity: orbit data and damping no longer apply
                        prev_design = prev_sign = move_scale = None
                    params = replace(nxt, restart=False)
                if getattr(controller, "early_exit", False) and change < EARLY_EXIT_CHANGE:
                    history.early_exit = True
                    break
        if getattr(controller, "functional_convergence", False):
            history.functional_convergence = True

    run_phase(spec.solve.max_iterations, "main", with_controller=True)

    tail = controller.finalize()
    if tail is not None:
        rho = (
            history.best_valid.density.copy()
            if history.best_valid is not None
            else _initial_design(mesh.n_elements, vf, passive, rho_min)
        )
        params = ControlParams(p=tail.p, beta=tail.beta, r_min=tail.r_min, delta=tail.delta)
        run_phase(tail.iterations, "tail", with_controller=False)

    if last_tilde is None:
        # zero-iteration run with no tail: report the projected initial design
        _, last_tilde = project_design(rho, mesh, params.r_min, params.beta, passive, rho_min)
        last_compliance = assemble_and_solve(
            mesh, last_tilde, arrays, spec.material, params.p, method=method
        ).compliance

    return SolveResult(
        density=last_tilde,
        compliance=last_compliance,
        history=history,
        design=rho,
    )


# ---------------------------------------------------------------------------
# composed objective, used by gradient checks

def composed_compliance_and_gradient(
    mesh: Mesh,
    arrays: SolverArrays,
    material,
    rho: np.ndarray,
    p: float,
    beta: float,
    r_min: float,
    rho_min: float = 1e-3,
    method: str = "auto",
) -> tuple[float, np.ndarray]:
    """Compliance of the full design chain and its design-space gradient."""
    rho_bar, rho_tilde = project_design(
        np.asarray(rho, dtype=float), mesh, r_min, beta, arrays.passive_mask, rho_min
    )
    state = assemble_and_solve(mesh, rho_tilde, arrays, material, p, method=method)
    chain = state.sensitivity * heaviside_derivative(rho_bar, beta)
    chain[arrays.passive_mask != PASSIVE_FREE] = 0.0
    grad = filter_adjoint(chain, r_min, mesh)
    return state.compliance, grad
