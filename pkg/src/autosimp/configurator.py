"""Natural-language problem setup with a deterministic safety net.

The primary path sends the user prompt to a chat backend that must answer
with a single JSON spec candidate; malformed replies get exactly one
repair re-prompt. Whenever the backend path fails (unreachable, junk
output twice, or a candidate the validation rails reject), a regex
fallback recognizes a handful of canonical archetypes and builds the spec
locally. Both paths feed the same :func:`~autosimp.spec.validate_spec`
gate, so nothing reaches the solver unvalidated.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import Any, Mapping

from .llm import BackendError, LlmBackendConfig, MockBackend, extract_json_object, make_backend
from .spec import (
    DEFAULT_MESH,
    ProblemSpec,
    RailEntry,
    SpecParseError,
    SpecRejection,
    parse_candidate,
    validate_spec,
)

RailLog = list[RailEntry]

ARCHETYPE_PATTERNS = (
    ("cantilever", re.compile(r"cantilever", re.IGNORECASE)),
    ("mbb", re.compile(r"\bmbb\b", re.IGNORECASE)),
    ("bridge", re.compile(r"bridge", re.IGNORECASE)),
    ("simply_supported", re.compile(r"simply[\s-]*supported", re.IGNORECASE)),
)
MESH_PATTERN = re.compile(r"(\d+)\s*[x×]\s*(\d+)(?:\s*[x×]\s*(\d+))?", re.IGNORECASE)
PERCENT_PATTERN = re.compile(r"(\d+(?:\.\d+)?)\s*(?:%|percent\b)", re.IGNORECASE)
FRACTION_PATTERN = re.compile(r"volume\s*fraction\s*(?:of\s*)?(\d*\.\d+|\d+(?:\.\d+)?)", re.IGNORECASE)
HOLE_PATTERN = re.compile(r"\bhole\b|\bvoid\b|\bopening\b|\bcutout\b|\bpipe\b", re.IGNORECASE)


class ConfigureError(RuntimeError):
    """Both the backend path and the pattern fallback failed."""

    def __init__(self, detail: str, backend_unreachable: bool = False):
        super().__init__(f"CONFIGURE_FAILED: {detail}")
        self.code = "CONFIGURE_FAILED"
        self.backend_unreachable = backend_unreachable


class FallbackNoArchetype(RuntimeError):
    """The prompt names no archetype the pattern fallback understands."""

    def __init__(self, detail: str):
        super().__init__(f"FALLBACK_NO_ARCHETYPE: {detail}")
        self.code = "FALLBACK_NO_ARCHETYPE"


def configurator_system_prompt() -> str:
    return resources.files("autosimp.resources").joinpath("configurator_prompt.txt").read_text()


def mock_backend(fixtures: Mapping[str, Any]) -> MockBackend:
    """Offline backend serving canned spec candidates keyed by prompt."""
    return MockBackend(fixtures=fixtures)


# ---------------------------------------------------------------------------
# archetype construction

def _archetype_candidate(
    archetype: str,
    nx: int,
    ny: int,
    nz: int | None,
    vf: float | None,
    with_hole: bool,
) -> dict:
    """Canonical spec dict for a recognized archetype, unit-size elements."""
    Lx, Ly = float(nx), float(ny)
    three_d = nz is not None and archetype in ("cantilever", "mbb")
    cand: dict[str, Any] = {
        "domain": {"Lx": Lx, "Ly": Ly},
        "mesh": {"nx": nx, "ny": ny},
    }
    if three_d:
        Lz = float(nz)
        cand["domain"]["Lz"] = Lz
        cand["mesh"]["nz"] = nz

    if archetype == "cantilever":
        cand["supports"] = [{"kind": "fixed", "edge": "left"}]
        if three_d:
            cand["loads"] = [{"point": [Lx, Ly / 2.0, Lz / 2.0], "force": [0.0, -1.0, 0.0]}]
        else:
            cand["loads"] = [{"point": [Lx, Ly / 2.0], "force": [0.0, -1.0]}]
    elif archetype == "mbb":
        if three_d:
            cand["supports"] = [
                {"kind": "pin_x", "edge": "left"},
                {"kind": "pin_y", "point": [Lx, 0.0, 0.0]},
                {"kind": "pin_y", "point": [Lx, 0.0, Lz]},
                {"kind": "pin_z", "point": [Lx, 0.0, 0.0]},
            ]
            cand["loads"] = [{"point": [0.0, Ly, Lz / 2.0], "force": [0.0, -1.0, 0.0]}]
        else:
            cand["supports"] = [
                {"kind": "pin_x", "edge": "left"},
                {"kind": "pin_y", "point": [Lx, 0.0]},
            ]
            cand["loads"] = [{"point": [0.0, Ly], "force": [0.0, -1.0]}]
    elif archetype == "bridge":
        cand["supports"] = [{"kind": "fixed", "edge": "bottom"}]
        cand["loads"] = [{"edge": "top", "pressure": 1.0}]
    elif archetype == "simply_supported":
        cand["supports"] = [
            {"kind": "fixed", "point": [0.0, 0.0]},
            {"kind": "pin_y", "point": [Lx, 0.0]},
        ]
        cand["loads"] = [{"point": [Lx / 2.0, Ly], "force": [0.0, -1.0]}]
    else:  # pragma: no cover - guarded by caller
        raise FallbackNoArchetype(f"unhandled archetype {archetype!r}")

    if vf is not None:
        cand["volume_fraction"] = vf
    if with_hole and not three_d:
        radius = 0.2 * min(Lx, Ly)
        cand["passive_regions"] = [
            {"shape": "circle", "fill": "void", "center": [Lx / 2.0, Ly / 2.0], "radius": radius}
        ]
    return cand


def regex_fallback(prompt: str) -> dict:
    """Pattern-matched spec candidate for canonical archetypes.

    Extracts a mesh ("NxM" or "NxMxK"), a volume fraction (percentages or
    "volume fraction 0.4"), and hole mentions. Raises
    :class:`FallbackNoArchetype` when no archetype keyword appears.
    """
    archetype = None
    for name, pattern in ARCHETYPE_PATTERNS:
        if pattern.search(prompt):
            archetype = name
            break
    if archetype is None:
        raise FallbackNoArchetype(f"no recognizable archetype in prompt {prompt[:80]!r}")

    nx, ny = DEFAULT_MESH
    nz = None
    mesh_match = MESH_PATTERN.search(prompt)
    if mesh_match:
        nx, ny = int(mesh_match.group(1)), int(mesh_match.group(2))
        if mesh_match.group(3):
            nz = int(mesh_match.group(3))

    vf = None
    frac_match = FRACTION_PATTERN.search(prompt)
    pct_match = PERCENT_PATTERN.search(prompt)
    if frac_match:
        vf = float(frac_match.group(1))
    elif pct_match:
        vf = float(pct_match.group(1)) / 100.0

    return _archetype_candidate(archetype, nx, ny, nz, vf, bool(HOLE_PATTERN.search(prompt)))


# ---------------------------------------------------------------------------
# main entry

@dataclass
class _LlmAttempt:
    candidate: dict | None = None
    error: Exception | None = None

    @property
    def backend_unreachable(self) -> bool:
        return isinstance(self.error, BackendError)


def _candidate_from_backend(backend, prompt: str, config: LlmBackendConfig) -> _LlmAttempt:
    system = configurator_system_prompt()
    try:
        raw = backend.chat(system, prompt, timeout=config.timeout_seconds)
    except Exception as exc:
        return _LlmAttempt(error=exc if isinstance(exc, BackendError) else BackendError(str(exc)))
    try:
        return _LlmAttempt(candidate=parse_candidate(extract_json_object(raw)))
    except (ValueError, SpecParseError) as first_error:
        repair = (
            f"{prompt}\n\nYour previous reply could not be used ({first_error}). "
            "Reply again with only the corrected JSON object."
        )
        try:
            raw = backend.chat(system, repair, timeout=config.timeout_seconds)
            return _LlmAttempt(candidate=parse_candidate(extract_json_object(raw)))
        except Exception as exc:
            return _LlmAttempt(error=exc)


def configure(
    prompt: str,
    backend_config: LlmBackendConfig | None = None,
    backend=None,
) -> tuple[ProblemSpec, RailLog]:
    """Prompt -> validated spec plus the audit trail of every intervention.

    Raises :class:`ConfigureError` only when the backend path and the
    pattern fallback both fail to produce a validatable spec.
    """
    config = backend_config if backend_config is not None else LlmBackendConfig.from_env()
    rails: RailLog = []

    attempt = _LlmAttempt(error=BackendError("no chat backend configured"))
    if backend is None and config.configured:
        backend = make_backend(config)
    if backend is not None:
        attempt = _candidate_from_backend(backend, prompt, config)

    llm_failure: Exception | None = attempt.error
    if attempt.candidate is not None:
        try:
            spec, vrails = validate_spec(attempt.candidate)
            return spec, rails + vrails
        except SpecRejection as exc:
            llm_failure = exc

    rails.append(
        RailEntry("configurator", "warned", f"backend path failed ({llm_failure}); using pattern fallback")
    )
    try:
        candidate = regex_fallback(prompt)
        spec, vrails = validate_spec(candidate)
    except (FallbackNoArchetype, SpecRejection, SpecParseError) as exc:
        raise ConfigureError(
            f"backend path failed ({llm_failure}) and fallback failed ({exc})",
            backend_unreachable=attempt.backend_unreachable,
        ) from exc
    rails.append(RailEntry("configurator", "adjusted", "spec built by pattern fallback"))
    return spec, rails + vrails
