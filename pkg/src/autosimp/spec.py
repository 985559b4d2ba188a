"""Problem specification: types, validation rails, canonical JSON round trip.

A spec travels through the pipeline as a frozen :class:`ProblemSpec`. Raw
candidates (LLM output, user files) pass through :func:`validate_spec`,
which applies defaults, clamps out-of-range values, repairs degenerate
meshes, and rejects structurally hopeless inputs. Every repair leaves a
:class:`RailEntry` so callers can audit what changed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .mesh import EDGES_2D, EDGES_3D, Mesh, mesh_from_spec

VF_MIN, VF_MAX = 0.1, 0.9
DEFAULT_VF = 0.5
DEFAULT_MESH = (60, 30)
MAX_ELEMENT_ASPECT = 3.0
MESH_COUNT_BAND = 0.25  # aspect repair keeps total element count within +-25%

SUPPORT_KINDS_2D = ("fixed", "pin_x", "pin_y", "roller_x", "roller_y")
SUPPORT_KINDS_3D = SUPPORT_KINDS_2D + ("pin_z", "roller_z")

# Which displacement axes each support kind constrains. Rollers are aliases:
# a roller on a grid boundary constrains the same single axis as a pin.
CONSTRAINED_AXES = {
    "fixed": (0, 1, 2),
    "pin_x": (0,),
    "pin_y": (1,),
    "pin_z": (2,),
    "roller_x": (0,),
    "roller_y": (1,),
    "roller_z": (2,),
}


class SpecParseError(ValueError):
    """Structural failure: not JSON, wrong types, or unknown fields."""

    code = "PARSE_ERROR"


class SpecRejection(ValueError):
    """Validation failure that no rail can repair."""

    def __init__(self, code: str, detail: str):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


@dataclass(frozen=True)
class RailEntry:
    """One audited intervention by the validation rails."""

    rail: str
    action: str  # clamped | defaulted | adjusted | warned | rejected
    detail: str

    def to_dict(self) -> dict:
        return {"rail": self.rail, "action": self.action, "detail": self.detail}


@dataclass(frozen=True)
class Domain:
    Lx: float
    Ly: float
    Lz: float | None = None


@dataclass(frozen=True)
class MeshSize:
    nx: int
    ny: int
    nz: int | None = None


@dataclass(frozen=True)
class SupportConstraint:
    """A named-edge or snapped-point displacement constraint."""

    kind: str
    edge: str | None = None
    point: tuple[float, ...] | None = None


@dataclass(frozen=True)
class LoadSpec:
    """Point force (snapped to the nearest node) or distributed edge pressure."""

    point: tuple[float, ...] | None = None
    force: tuple[float, ...] | None = None
    edge: str | None = None
    pressure: float | None = None

    @property
    def is_distributed(self) -> bool:
        return self.edge is not None


@dataclass(frozen=True)
class PassiveRegion:
    """Frozen-density region: circle/sphere or axis-aligned rectangle/box."""

    shape: str  # circle | rectangle
    fill: str  # void | solid
    center: tuple[float, ...] | None = None
    radius: float | None = None
    min_corner: tuple[float, ...] | None = None
    max_corner: tuple[float, ...] | None = None


@dataclass(frozen=True)
class Material:
    E0: float = 1.0
    nu: float = 0.3
    rho_min: float = 1e-3


@dataclass(frozen=True)
class SolveSettings:
    max_iterations: int = 300
    seed: int = 42


@dataclass(frozen=True)
class ProblemSpec:
    domain: Domain
    mesh: MeshSize
    volume_fraction: float
    supports: tuple[SupportConstraint, ...]
    loads: tuple[LoadSpec, ...]
    passive_regions: tuple[PassiveRegion, ...] = ()
    material: Material = field(default_factory=Material)
    solve: SolveSettings = field(default_factory=SolveSettings)

    @property
    def ndim(self) -> int:
        return 2 if self.domain.Lz is None else 3


# ---------------------------------------------------------------------------
# canonical dict form

def _point_list(p: Sequence[float] | None) -> list[float] | None:
    return None if p is None else [float(v) for v in p]


def spec_to_dict(spec: ProblemSpec) -> dict:
    """Canonical plain-dict form (fixed key order, None fields omitted)."""
    domain: dict[str, Any] = {"Lx": spec.domain.Lx, "Ly": spec.domain.Ly}
    if spec.domain.Lz is not None:
        domain["Lz"] = spec.domain.Lz
    meshd: dict[str, Any] = {"nx": spec.mesh.nx, "ny": spec.mesh.ny}
    if spec.mesh.nz is not None:
        meshd["nz"] = spec.mesh.nz

    supports = []
    for s in spec.supports:
        entry: dict[str, Any] = {"kind": s.kind}
        if s.edge is not None:
            entry["edge"] = s.edge
        if s.point is not None:
            entry["point"] = _point_list(s.point)
        supports.append(entry)

    loads = []
    for ld in spec.loads:
        entry = {}
        if ld.point is not None:
            entry["point"] = _point_list(ld.point)
            entry["force"] = _point_list(ld.force)
        else:
            entry["edge"] = ld.edge
            entry["pressure"] = float(ld.pressure)
        loads.append(entry)

    regions = []
    for r in spec.passive_regions:
        entry = {"shape": r.shape, "fill": r.fill}
        if r.shape == "circle":
            entry["center"] = _point_list(r.center)
            entry["radius"] = float(r.radius)
        else:
            entry["min_corner"] = _point_list(r.min_corner)
            entry["max_corner"] = _point_list(r.max_corner)
        regions.append(entry)

    out: dict[str, Any] = {
        "domain": domain,
        "mesh": meshd,
        "volume_fraction": spec.volume_fraction,
        "supports": supports,
        "loads": loads,
        "material": {
            "E0": spec.material.E0,
            "nu": spec.material.nu,
            "rho_min": spec.material.rho_min,
        },
        "solve": {
            "max_iterations": spec.solve.max_iterations,
            "seed": spec.solve.seed,
        },
    }
    if regions:
        out["passive_regions"] = regions
    return out


def serialize_spec(spec: ProblemSpec) -> str:
    """Canonical JSON text for a validated spec."""
    return json.dumps(spec_to_dict(spec), indent=2)


def deserialize_spec(text: str) -> dict:
    """Parse JSON text into a structurally checked candidate dict.

    Accepts either a bare spec or a document embedding one under a
    ``"spec"`` key (the shape ``configure`` writes), so configure output
    feeds straight back into solve. Raises :class:`SpecParseError` for
    malformed JSON, unknown fields (reported by dotted path), or values
    of the wrong type. The result still needs :func:`validate_spec`.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"PARSE_ERROR: invalid JSON at line {exc.lineno} col {exc.colno}: {exc.msg}") from exc
    if isinstance(raw, dict) and isinstance(raw.get("spec"), dict):
        raw = raw["spec"]
    return parse_candidate(raw)


# ---------------------------------------------------------------------------
# structural layer

_TOP_FIELDS = (
    "domain",
    "mesh",
    "volume_fraction",
    "supports",
    "loads",
    "passive_regions",
    "material",
    "solve",
)
_SUB_FIELDS = {
    "domain": ("Lx", "Ly", "Lz"),
    "mesh": ("nx", "ny", "nz"),
    "material": ("E0", "nu", "rho_min"),
    "solve": ("max_iterations", "seed"),
    "supports[]": ("kind", "edge", "point"),
    "loads[]": ("point", "force", "edge", "pressure"),
    "passive_regions[]": ("shape", "fill", "center", "radius", "min_corner", "max_corner"),
}


def _check_unknown(obj: Mapping, allowed: Sequence[str], path: str) -> None:
    unknown = [k for k in obj if k not in allowed]
    if unknown:
        where = [f"{path}.{k}" if path else k for k in unknown]
        raise SpecParseError(f"PARSE_ERROR: unknown field(s) {', '.join(where)}")


def _as_number(value: Any, path: str) -> float:
    # bool is an int subclass; it is never a valid numeric field here
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecParseError(f"PARSE_ERROR: {path} must be a number, got {type(value).__name__}")
    if not math.isfinite(value):
        raise SpecParseError(f"PARSE_ERROR: {path} must be finite")
    return float(value)


def _as_int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SpecParseError(f"PARSE_ERROR: {path} must be an integer, got {type(value).__name__}")
    return value


def _as_str(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise SpecParseError(f"PARSE_ERROR: {path} must be a string, got {type(value).__name__}")
    return value


def _as_point(value: Any, path: str) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)) or not 2 <= len(value) <= 3:
        raise SpecParseError(f"PARSE_ERROR: {path} must be a 2- or 3-coordinate list")
    return tuple(_as_number(v, f"{path}[{i}]") for i, v in enumerate(value))


def _as_mapping(value: Any, path: str) -> Mapping:
    if not isinstance(value, Mapping):
        raise SpecParseError(f"PARSE_ERROR: {path} must be an object")
    return value


def _as_list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise SpecParseError(f"PARSE_ERROR: {path} must be a list")
    return value


def parse_candidate(raw: Mapping) -> dict:
    """Structurally normalize a raw mapping; unknown fields are fatal."""
    raw = _as_mapping(raw, "$")
    _check_unknown(raw, _TOP_FIELDS, "")
    out: dict[str, Any] = {}

    if "domain" in raw:
        d = _as_mapping(raw["domain"], "domain")
        _check_unknown(d, _SUB_FIELDS["domain"], "domain")
        out["domain"] = {k: _as_number(v, f"domain.{k}") for k, v in d.items()}
    if "mesh" in raw:
        m = _as_mapping(raw["mesh"], "mesh")
        _check_unknown(m, _SUB_FIELDS["mesh"], "mesh")
        out["mesh"] = {k: _as_int(v, f"mesh.{k}") for k, v in m.items()}
    if "volume_fraction" in raw:
        out["volume_fraction"] = _as_number(raw["volume_fraction"], "volume_fraction")

    if "supports" in raw:
        entries = []
        for i, s in enumerate(_as_list(raw["supports"], "supports")):
            path = f"supports[{i}]"
            s = _as_mapping(s, path)
            _check_unknown(s, _SUB_FIELDS["supports[]"], path)
            entry: dict[str, Any] = {"kind": _as_str(s.get("kind"), f"{path}.kind")}
            if "edge" in s:
                entry["edge"] = _as_str(s["edge"], f"{path}.edge")
            if "point" in s:
                entry["point"] = _as_point(s["point"], f"{path}.point")
            entries.append(entry)
        out["supports"] = entries

    if "loads" in raw:
        entries = []
        for i, ld in enumerate(_as_list(raw["loads"], "loads")):
            path = f"loads[{i}]"
            ld = _as_mapping(ld, path)
            _check_unknown(ld, _SUB_FIELDS["loads[]"], path)
            entry = {}
            if "point" in ld:
                entry["point"] = _as_point(ld["point"], f"{path}.point")
            if "force" in ld:
                entry["force"] = _as_point(ld["force"], f"{path}.force")
            if "edge" in ld:
                entry["edge"] = _as_str(ld["edge"], f"{path}.edge")
            if "pressure" in ld:
                entry["pressure"] = _as_number(ld["pressure"], f"{path}.pressure")
            entries.append(entry)
        out["loads"] = entries

    if "passive_regions" in raw:
        entries = []
        for i, r in enumerate(_as_list(raw["passive_regions"], "passive_regions")):
            path = f"passive_regions[{i}]"
            r = _as_mapping(r, path)
            _check_unknown(r, _SUB_FIELDS["passive_regions[]"], path)
            entry = {
                "shape": _as_str(r.get("shape"), f"{path}.shape"),
                "fill": _as_str(r.get("fill"), f"{path}.fill"),
            }
            if "center" in r:
                entry["center"] = _as_point(r["center"], f"{path}.center")
            if "radius" in r:
                entry["radius"] = _as_number(r["radius"], f"{path}.radius")
            if "min_corner" in r:
                entry["min_corner"] = _as_point(r["min_corner"], f"{path}.min_corner")
            if "max_corner" in r:
                entry["max_corner"] = _as_point(r["max_corner"], f"{path}.max_corner")
            entries.append(entry)
        out["passive_regions"] = entries

    if "material" in raw:
        m = _as_mapping(raw["material"], "material")
        _check_unknown(m, _SUB_FIELDS["material"], "material")
        out["material"] = {k: _as_number(v, f"material.{k}") for k, v in m.items()}
    if "solve" in raw:
        s = _as_mapping(raw["solve"], "solve")
        _check_unknown(s, _SUB_FIELDS["solve"], "solve")
        out["solve"] = {k: _as_int(v, f"solve.{k}") for k, v in s.items()}
    return out


# ---------------------------------------------------------------------------
# validation rails

def _repair_aspect(
    Ls: list[float], ns: list[int], rails: list[RailEntry]
) -> list[int]:
    """Adjust element counts so element aspect ratio stays within bounds.

    Candidates keep one axis count and rescale the rest to near-cubic
    elements; one extra candidate rescales every axis while preserving the
    total element count. Candidates inside the +-25% count band win,
    otherwise the count-closest one is used.
    """
    hs = [L / n for L, n in zip(Ls, ns)]
    if max(hs) / min(hs) <= MAX_ELEMENT_ASPECT:
        return ns
    total = math.prod(ns)

    def candidate(anchor: int) -> list[int]:
        # keep axis `anchor`, rescale the others to near-cubic elements
        h = Ls[anchor] / ns[anchor]
        return [ns[i] if i == anchor else max(1, round(Ls[i] / h)) for i in range(len(ns))]

    cands = [candidate(i) for i in range(len(ns))]
    # count-preserving near-cubic mesh: h^d = prod(L) / total
    h_cubic = (math.prod(Ls) / total) ** (1.0 / len(Ls))
    cands.append([max(1, round(L / h_cubic)) for L in Ls])
    ok = []
    for c in cands:
        hs_c = [L / n for L, n in zip(Ls, c)]
        if max(hs_c) / min(hs_c) > MAX_ELEMENT_ASPECT:
            continue
        ok.append(c)
    if not ok:
        raise SpecRejection(
            "REJECT_BAD_GEOMETRY",
            f"element aspect ratio {max(hs) / min(hs):.2f} cannot be repaired within bounds",
        )
    in_band = [c for c in ok if abs(math.prod(c) - total) <= MESH_COUNT_BAND * total]
    pool = in_band or ok
    best = min(pool, key=lambda c: abs(math.prod(c) - total))
    rails.append(
        RailEntry(
            "mesh",
            "adjusted",
            f"element aspect ratio {max(hs) / min(hs):.2f} > {MAX_ELEMENT_ASPECT:g}; "
            f"mesh {'x'.join(map(str, ns))} -> {'x'.join(map(str, best))}",
        )
    )
    return best


def _validate_supports(
    cand: Mapping, ndim: int, edge_names: tuple[str, ...]
) -> tuple[SupportConstraint, ...]:
    raw = cand.get("supports") or []
    if not raw:
        raise SpecRejection("REJECT_NO_SUPPORTS", "spec defines no supports")
    kinds = SUPPORT_KINDS_2D if ndim == 2 else SUPPORT_KINDS_3D
    out = []
    for i, s in enumerate(raw):
        kind = s["kind"]
        if kind not in kinds:
            raise SpecRejection(
                "REJECT_BAD_GEOMETRY", f"supports[{i}].kind {kind!r} invalid for {ndim}-D"
            )
        edge, point = s.get("edge"), s.get("point")
        if (edge is None) == (point is None):
            raise SpecRejection(
                "REJECT_BAD_GEOMETRY", f"supports[{i}] needs exactly one of edge/point"
            )
        if edge is not None and edge not in edge_names:
            raise SpecRejection(
                "REJECT_BAD_GEOMETRY", f"supports[{i}].edge {edge!r} invalid for {ndim}-D"
            )
        if point is not None and len(point) != ndim:
            raise SpecRejection(
                "REJECT_BAD_GEOMETRY", f"supports[{i}].point has {len(point)} coords, domain is {ndim}-D"
            )
        out.append(SupportConstraint(kind=kind, edge=edge, point=point))
    return tuple(out)


def _validate_loads(
    cand: Mapping, ndim: int, edge_names: tuple[str, ...]
) -> tuple[LoadSpec, ...]:
    raw = cand.get("loads") or []
    if not raw:
        raise SpecRejection("REJECT_NO_LOADS", "spec defines no loads")
    out = []
    for i, ld in enumerate(raw):
        point, force = ld.get("point"), ld.get("force")
        edge, pressure = ld.get("edge"), ld.get("pressure")
        if point is not None or force is not None:
            if point is None or force is None or edge is not None or pressure is not None:
                raise SpecRejection(
                    "REJECT_BAD_GEOMETRY",
                    f"loads[{i}] must be point+force or edge+pressure",
                )
            if len(point) != ndim or len(force) != ndim:
                raise SpecRejection(
                    "REJECT_BAD_GEOMETRY",
                    f"loads[{i}] point/force must have {ndim} coords",
                )
            if not any(f != 0.0 for f in force):
                raise SpecRejection("REJECT_NO_LOADS", f"loads[{i}] has a zero force vector")
            out.append(LoadSpec(point=point, force=force))
        else:
            if edge is None or pressure is None:
                raise SpecRejection(
                    "REJECT_BAD_GEOMETRY",
                    f"loads[{i}] must be point+force or edge+pressure",
                )
            if edge not in edge_names:
                raise SpecRejection(
                    "REJECT_BAD_GEOMETRY", f"loads[{i}].edge {edge!r} invalid for {ndim}-D"
                )
            if pressure == 0.0:
                raise SpecRejection("REJECT_NO_LOADS", f"loads[{i}] has zero pressure")
            out.append(LoadSpec(edge=edge, pressure=pressure))
    return tuple(out)


def _validate_regions(cand: Mapping, ndim: int) -> tuple[PassiveRegion, ...]:
    out = []
    for i, r in enumerate(cand.get("passive_regions") or []):
        shape, fill = r["shape"], r["fill"]
        if shape not in ("circle", "rectangle"):
            raise SpecRejection(
                "REJECT_BAD_GEOMETRY", f"passive_regions[{i}].shape {shape!r} unknown"
            )
        if fill not in ("void", "solid"):
            raise SpecRejection(
                "REJECT_BAD_GEOMETRY", f"passive_regions[{i}].fill {fill!r} unknown"
            )
        if shape == "circle":
            center, radius = r.get("center"), r.get("radius")
            if center is None or radius is None or len(center) != ndim:
                raise SpecRejection(
                    "REJECT_BAD_GEOMETRY",
                    f"passive_regions[{i}] circle needs {ndim}-D center and radius",
                )
            if radius <= 0:
                raise SpecRejection(
                    "REJECT_BAD_GEOMETRY", f"passive_regions[{i}].radius must be positive"
                )
            out.append(PassiveRegion(shape=shape, fill=fill, center=center, radius=radius))
        else:
            lo, hi = r.get("min_corner"), r.get("max_corner")
            if lo is None or hi is None or len(lo) != ndim or len(hi) != ndim:
                raise SpecRejection(
                    "REJECT_BAD_GEOMETRY",
                    f"passive_regions[{i}] rectangle needs {ndim}-D min/max corners",
                )
            if any(a >= b for a, b in zip(lo, hi)):
                raise SpecRejection(
                    "REJECT_BAD_GEOMETRY",
                    f"passive_regions[{i}] min_corner must be strictly below max_corner",
                )
            out.append(PassiveRegion(shape=shape, fill=fill, min_corner=lo, max_corner=hi))
    return tuple(out)


def _warn_loads_on_fixed_dofs(spec: ProblemSpec, rails: list[RailEntry]) -> None:
    # late import in spirit: bc owns the DOF map; this stays a thin audit pass
    from .bc import fixed_dofs_for

    mesh = mesh_from_spec(spec)
    fixed = set(fixed_dofs_for(spec.supports, mesh).tolist())
    for i, ld in enumerate(spec.loads):
        if ld.point is None:
            continue
        node = mesh.snap_point(ld.point)
        for axis, f in enumerate(ld.force):
            if f != 0.0 and mesh.ndim * node + axis in fixed:
                rails.append(
                    RailEntry(
                        "WARN_LOAD_ON_FIXED_DOF",
                        "warned",
                        f"loads[{i}] snaps to node {node} whose axis-{axis} DOF is constrained",
                    )
                )


def validate_spec(raw: ProblemSpec | Mapping) -> tuple[ProblemSpec, list[RailEntry]]:
    """Turn a candidate into a validated spec, auditing every repair.

    Raises :class:`SpecRejection` when no rail can help (no supports, no
    loads, impossible geometry) and :class:`SpecParseError` for structural
    problems in mapping input. Idempotent: a validated spec passes through
    unchanged with an empty rail log.
    """
    if isinstance(raw, ProblemSpec):
        cand = parse_candidate(spec_to_dict(raw))
    else:
        cand = parse_candidate(raw)
    rails: list[RailEntry] = []

    meshd = dict(cand.get("mesh") or {})
    domaind = dict(cand.get("domain") or {})
    ndim = 3 if ("Lz" in domaind or "nz" in meshd) else 2

    if not meshd:
        if ndim == 2:
            meshd = {"nx": DEFAULT_MESH[0], "ny": DEFAULT_MESH[1]}
        else:
            # unit elements against the stated domain
            meshd = {
                "nx": max(1, round(domaind["Lx"])),
                "ny": max(1, round(domaind["Ly"])),
                "nz": max(1, round(domaind["Lz"])),
            }
        rails.append(
            RailEntry("mesh", "defaulted", f"mesh -> {'x'.join(str(meshd[k]) for k in sorted(meshd))}")
        )
    if not domaind:
        domaind = {"Lx": float(meshd["nx"]), "Ly": float(meshd["ny"])}
        if ndim == 3:
            domaind["Lz"] = float(meshd["nz"])
        rails.append(RailEntry("domain", "defaulted", "domain sized to unit elements"))

    for key in ("nx", "ny") + (("nz",) if ndim == 3 else ()):
        if key not in meshd:
            raise SpecRejection("REJECT_BAD_GEOMETRY", f"mesh.{key} missing")
        if meshd[key] < 1:
            raise SpecRejection("REJECT_BAD_GEOMETRY", f"mesh.{key} must be >= 1")
    for key in ("Lx", "Ly") + (("Lz",) if ndim == 3 else ()):
        if key not in domaind:
            raise SpecRejection("REJECT_BAD_GEOMETRY", f"domain.{key} missing")
        if domaind[key] <= 0:
            raise SpecRejection("REJECT_BAD_GEOMETRY", f"domain.{key} must be positive")
    if ndim == 2 and ("nz" in meshd or "Lz" in domaind):
        raise SpecRejection("REJECT_BAD_GEOMETRY", "mixed 2-D/3-D domain and mesh")
    if ndim == 3 and ("nz" not in meshd or "Lz" not in domaind):
        raise SpecRejection("REJECT_BAD_GEOMETRY", "3-D spec needs both domain.Lz and mesh.nz")

    axes = ("Lx", "Ly", "Lz")[:ndim]
    counts = ("nx", "ny", "nz")[:ndim]
    Ls = [float(domaind[a]) for a in axes]
    ns = _repair_aspect(Ls, [int(meshd[c]) for c in counts], rails)
    mesh_size = MeshSize(nx=ns[0], ny=ns[1], nz=ns[2] if ndim == 3 else None)
    domain = Domain(Lx=Ls[0], Ly=Ls[1], Lz=Ls[2] if ndim == 3 else None)

    if "volume_fraction" in cand:
        vf = cand["volume_fraction"]
    else:
        vf = DEFAULT_VF
        rails.append(RailEntry("volume_fraction", "defaulted", f"volume_fraction -> {DEFAULT_VF}"))
    if not VF_MIN <= vf <= VF_MAX:
        clamped = min(max(vf, VF_MIN), VF_MAX)
        rails.append(
            RailEntry("volume_fraction", "clamped", f"volume_fraction {vf:g} -> {clamped:g}")
        )
        vf = clamped

    matd = dict(cand.get("material") or {})
    material = Material(
        E0=float(matd.get("E0", 1.0)),
        nu=float(matd.get("nu", 0.3)),
        rho_min=float(matd.get("rho_min", 1e-3)),
    )
    if material.E0 <= 0:
        raise SpecRejection("REJECT_BAD_GEOMETRY", "material.E0 must be positive")
    if not 0.0 <= material.nu < 0.5:
        raise SpecRejection("REJECT_BAD_GEOMETRY", "material.nu must be in [0, 0.5)")
    if not 0.0 < material.rho_min < 1.0:
        raise SpecRejection("REJECT_BAD_GEOMETRY", "material.rho_min must be in (0, 1)")

    solved = dict(cand.get("solve") or {})
    settings = SolveSettings(
        max_iterations=int(solved.get("max_iterations", 300)),
        seed=int(solved.get("seed", 42)),
    )
    if settings.max_iterations < 0:
        raise SpecRejection("REJECT_BAD_GEOMETRY", "solve.max_iterations must be >= 0")

    edge_names = EDGES_2D if ndim == 2 else EDGES_3D
    supports = _validate_supports(cand, ndim, edge_names)
    loads = _validate_loads(cand, ndim, edge_names)
    regions = _validate_regions(cand, ndim)

    spec = ProblemSpec(
        domain=domain,
        mesh=mesh_size,
        volume_fraction=float(vf),
        supports=supports,
        loads=loads,
        passive_regions=regions,
        material=material,
        solve=settings,
    )
    _warn_loads_on_fixed_dofs(spec, rails)
    return spec, rails


def spec_mesh(spec: ProblemSpec) -> Mesh:
    """Solver mesh for a validated spec."""
    return mesh_from_spec(spec)
