"""Continuation controllers: who turns the solver's knobs, and when.

Six interchangeable policies drive (p, beta, r_min, delta) over the
iteration budget N:

- ``schedule``: a fixed four-phase trajectory (explore, penalize, sharpen,
  converge). The reference policy.
- ``expert``: stepped penalty increases with a compliance-spike restart
  rule, modeled on how a practitioner babysits a run.
- ``three_field``: the classic short linear ramp with periodic projection
  doubling.
- ``tail_only``: no continuation at all; only the sharpening tail acts.
- ``fixed``: constant mid-range penalty, soft projection, and no tail.
- ``llm``: a chat model proposes parameter changes every ``cadence``
  iterations from recent observations; proposals pass through a safety
  gate before they reach the solver.

The deterministic kinds are pure functions of (iteration, budget), so two
runs of the same problem produce identical histories.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources

from .llm import LlmBackendConfig, extract_json_object, make_backend
from .solver import STANDARD_TAIL, ControlParams, SolverObservation, TailConfig

CONTROLLER_KINDS = ("llm", "schedule", "expert", "three_field", "tail_only", "fixed")

LLM_CADENCE = 10
LLM_OBSERVATION_WINDOW = 5
LLM_STEP_TIMEOUT = 20.0
RESTART_SPIKE_FACTOR = 5.0

# safety ranges for externally proposed parameters
P_RANGE = (1.0, 6.0)
BETA_RANGE = (1.0, 64.0)
RMIN_RANGE = (1.0, 4.0)
DELTA_RANGE = (0.01, 0.3)


def _phase_fraction(iteration: int, budget: int) -> float:
    return iteration / max(1, budget)


# ---------------------------------------------------------------------------
# schedule

def schedule_params(iteration: int, budget: int) -> ControlParams:
    """Four-phase trajectory as a pure function of progress."""
    t = _phase_fraction(iteration, budget)
    if t < 0.25:
        return ControlParams(p=1.5, beta=1.0, r_min=2.4, delta=0.2)
    if t < 0.55:
        frac = (t - 0.25) / 0.30
        return ControlParams(p=1.5 + 2.0 * frac, beta=2.0, r_min=2.0, delta=0.15)
    if t < 0.80:
        frac = (t - 0.55) / 0.25
        # projection sharpness steps 2 -> 4 -> 8 -> 16 across equal quarters
        beta = 2.0 * 2.0 ** min(3, int(frac * 4.0))
        return ControlParams(p=3.5 + 1.0 * frac, beta=beta, r_min=1.5, delta=0.1)
    return ControlParams(p=4.5, beta=16.0, r_min=1.3, delta=0.08)


@dataclass
class ScheduleController:
    budget: int

    def init(self) -> ControlParams:
        return schedule_params(0, self.budget)

    def step(self, obs: SolverObservation) -> ControlParams | None:
        return schedule_params(obs.iteration + 1, self.budget)

    def finalize(self) -> TailConfig | None:
        return STANDARD_TAIL


# ---------------------------------------------------------------------------
# expert

EXPERT_P_STEPS = (1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5)


def expert_params(iteration: int, budget: int) -> ControlParams:
    """Stepped penalty over the first 80% of the budget, then hold."""
    n = max(1, budget)
    ramp = 0.8 * n
    width = ramp / len(EXPERT_P_STEPS)
    idx = min(len(EXPERT_P_STEPS) - 1, int(iteration / width)) if iteration < ramp else len(EXPERT_P_STEPS) - 1
    p = EXPERT_P_STEPS[idx]
    # projection stays soft until the penalty is trustworthy, then doubles
    # every 10% of the budget up to 16
    t3 = 3 * width  # first iteration at p = 3.0
    if iteration < t3:
        beta = 1.0
    else:
        beta = min(16.0, 2.0 ** (1 + int((iteration - t3) / (0.1 * n))))
    if p < 3.0:
        return ControlParams(p=p, beta=beta, r_min=2.4, delta=0.2)
    return ControlParams(p=p, beta=beta, r_min=1.5, delta=0.1)


@dataclass
class ExpertController:
    budget: int

    def init(self) -> ControlParams:
        return expert_params(0, self.budget)

    def step(self, obs: SolverObservation) -> ControlParams | None:
        params = expert_params(obs.iteration + 1, self.budget)
        if (
            obs.best_valid_compliance is not None
            and obs.compliance > RESTART_SPIKE_FACTOR * obs.best_valid_compliance
        ):
            # the run blew up; fall back to the best trusted design
            return replace(params, restart=True)
        return params

    def finalize(self) -> TailConfig | None:
        return STANDARD_TAIL


# ---------------------------------------------------------------------------
# three-field ramp

THREE_FIELD_RAMP_ITERS = 30
THREE_FIELD_BETA_PERIOD = 10
THREE_FIELD_BETA_MAX = 32.0


def three_field_params(iteration: int, budget: int) -> ControlParams:
    p = 1.0 + 3.5 * min(iteration, THREE_FIELD_RAMP_ITERS) / THREE_FIELD_RAMP_ITERS
    beta = min(THREE_FIELD_BETA_MAX, 2.0 ** (iteration // THREE_FIELD_BETA_PERIOD))
    r_min = 2.4 if _phase_fraction(iteration, budget) < 0.7 else 1.5
    return ControlParams(p=p, beta=beta, r_min=r_min, delta=0.15)


@dataclass
class ThreeFieldController:
    budget: int

    def init(self) -> ControlParams:
        return three_field_params(0, self.budget)

    def step(self, obs: SolverObservation) -> ControlParams | None:
        return three_field_params(obs.iteration + 1, self.budget)

    def finalize(self) -> TailConfig | None:
        return STANDARD_TAIL


# ---------------------------------------------------------------------------
# ablation baselines

@dataclass
class TailOnlyController:
    """No continuation: the main loop never leaves the convex-ish regime."""

    def init(self) -> ControlParams:
        return ControlParams(p=1.0, beta=1.0, r_min=2.4, delta=0.2)

    def step(self, obs: SolverObservation) -> ControlParams | None:
        return None

    def finalize(self) -> TailConfig | None:
        return STANDARD_TAIL


@dataclass
class FixedController:
    """Constant mid-range parameters and no tail."""

    def init(self) -> ControlParams:
        return ControlParams(p=3.0, beta=1.0, r_min=2.4, delta=0.2)

    def step(self, obs: SolverObservation) -> ControlParams | None:
        return None

    def finalize(self) -> TailConfig | None:
        return None


# ---------------------------------------------------------------------------
# llm

def gate_llm_action(
    proposed: dict,
    current: ControlParams,
    grayness: float,
    has_best_valid: bool,
) -> ControlParams:
    """Clamp and sanity-check an externally proposed parameter update.

    Projection sharpness may never decrease, may at most double per update,
    and proposed increases are halved while the design is still mostly gray.
    Restarts are dropped when no trusted snapshot exists to restart from.
    """

    def _num(key: str, fallback: float, bounds: tuple[float, float]) -> float:
        value = proposed.get(key, fallback)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return fallback
        return min(max(float(value), bounds[0]), bounds[1])

    p = _num("p", current.p, P_RANGE)
    r_min = _num("r_min", current.r_min, RMIN_RANGE)
    delta = _num("delta", current.delta, DELTA_RANGE)
    beta = _num("beta", current.beta, BETA_RANGE)
    if beta > current.beta and grayness > 0.5:
        beta = current.beta + (beta - current.beta) / 2.0
    beta = min(beta, 2.0 * current.beta)
    beta = max(beta, current.beta)
    restart = bool(proposed.get("restart", False)) and has_best_valid
    return ControlParams(p=p, beta=beta, r_min=r_min, delta=delta, restart=restart)


def controller_system_prompt() -> str:
    return resources.files("autosimp.resources").joinpath("controller_prompt.txt").read_text()


@dataclass
class LlmController:
    """Chat-driven continuation with a deterministic safety gate.

    Every ``cadence`` iterations the recent observation window goes to the
    backend, which must answer with a JSON object of parameter targets.
    Backend failures, junk output, and timeouts all degrade to "no change",
    so a dead backend reduces to a (bad) fixed policy instead of an error.
    """

    budget: int
    backend: object | None = None
    config: LlmBackendConfig | None = None
    cadence: int = LLM_CADENCE
    window: int = LLM_OBSERVATION_WINDOW
    _observations: list[dict] = field(default_factory=list, repr=False)
    _current: ControlParams = field(default_factory=lambda: ControlParams(1.5, 1.0, 2.4, 0.2), repr=False)

    def __post_init__(self):
        if self.backend is None:
            self.backend = make_backend(self.config)

    def init(self) -> ControlParams:
        return replace(self._current)

    def step(self, obs: SolverObservation) -> ControlParams | None:
        self._observations.append(obs.to_dict())
        del self._observations[: -self.window]
        if (obs.iteration + 1) % self.cadence != 0:
            return None
        user = json.dumps(
            {
                "budget": self.budget,
                "iteration": obs.iteration,
                "current": self._current.to_dict(),
                "has_best_valid": obs.has_best_valid,
                "best_valid_compliance": obs.best_valid_compliance,
                "recent": self._observations,
            }
        )
        try:
            raw = self.backend.chat(controller_system_prompt(), user, timeout=LLM_STEP_TIMEOUT)
            proposed = extract_json_object(raw)
        except Exception:
            return None  # backend trouble must never kill a solve
        gated = gate_llm_action(proposed, self._current, obs.grayness, obs.has_best_valid)
        self._current = replace(gated, restart=False)
        return gated

    def finalize(self) -> TailConfig | None:
        return STANDARD_TAIL


def make_controller(
    kind: str,
    budget: int,
    backend: object | None = None,
    config: LlmBackendConfig | None = None,
):
    """Controller factory over the public kind names."""
    if kind == "schedule":
        return ScheduleController(budget)
    if kind == "expert":
        return ExpertController(budget)
    if kind == "three_field":
        return ThreeFieldController(budget)
    if kind == "tail_only":
        return TailOnlyController()
    if kind == "fixed":
        return FixedController()
    if kind == "llm":
        return LlmController(budget=budget, backend=backend, config=config)
    raise ValueError(f"unknown controller kind {kind!r}; expected one of {CONTROLLER_KINDS}")
