"""Boundary-condition generation: spec geometry to solver arrays.

Point constraints and loads snap to the nearest node (unbounded distance,
ties to the lowest node index). Distributed edge loads use tributary
lengths, so corner nodes carry half the interior weight and the resultant
equals pressure times edge extent exactly. Passive regions mark elements
by strict centroid containment; overlapping regions resolve last-writer-wins.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .mesh import Mesh, mesh_from_spec
from .spec import CONSTRAINED_AXES, LoadSpec, PassiveRegion, ProblemSpec, SupportConstraint

PASSIVE_FREE = 0
PASSIVE_VOID = 1
PASSIVE_SOLID = 2


class BoundaryConditionWarning(UserWarning):
    """Suspicious but legal BC geometry (dead loads, empty regions)."""


@dataclass(frozen=True)
class SolverArrays:
    """Everything the FE stage needs besides densities."""

    fixed_dofs: np.ndarray  # sorted unique int64
    force: np.ndarray  # (n_dofs,) float64
    passive_mask: np.ndarray  # (n_elements,) int8 of PASSIVE_* codes

    @property
    def n_fixed(self) -> int:
        return int(self.fixed_dofs.size)


def snap_point(point: Sequence[float], mesh: Mesh) -> int:
    """Nearest node index for a physical point (ties to the lowest index)."""
    return mesh.snap_point(point)


def fixed_dofs_for(supports: Iterable[SupportConstraint], mesh: Mesh) -> np.ndarray:
    """Sorted unique DOF indices constrained by the given supports."""
    dim = mesh.ndim
    dofs: list[int] = []
    for s in supports:
        axes = [a for a in CONSTRAINED_AXES[s.kind] if a < dim]
        nodes = mesh.edge_nodes(s.edge) if s.edge is not None else [mesh.snap_point(s.point)]
        for n in np.asarray(nodes, dtype=np.int64):
            dofs.extend(dim * int(n) + a for a in axes)
    return np.unique(np.asarray(dofs, dtype=np.int64))


# Outward normal axis and sign per named edge; inward is the negation.
_EDGE_NORMALS = {
    "left": (0, -1.0),
    "right": (0, +1.0),
    "bottom": (1, -1.0),
    "top": (1, +1.0),
    "front": (2, -1.0),
    "back": (2, +1.0),
}


def _trapezoid_weights(n_segments: int, h: float) -> np.ndarray:
    """Tributary lengths for n_segments+1 evenly spaced nodes."""
    w = np.full(n_segments + 1, h)
    w[0] = w[-1] = h / 2.0
    return w


def assemble_force(loads: Iterable[LoadSpec], mesh: Mesh) -> np.ndarray:
    """Global force vector; point loads snapped, edge pressures trapezoidal."""
    dim = mesh.ndim
    force = np.zeros(mesh.n_dofs)
    for ld in loads:
        if not ld.is_distributed:
            node = mesh.snap_point(ld.point)
            for axis, f in enumerate(ld.force):
                force[dim * node + axis] += f
            continue

        axis, outward = _EDGE_NORMALS[ld.edge]
        direction = -outward  # pressure pushes along the inward normal
        nodes = mesh.edge_nodes(ld.edge)
        if dim == 2:
            # edge nodes are already sorted along the tangent axis
            tangent = 1 - axis
            h = mesh.element_dims[tangent]
            weights = _trapezoid_weights(len(nodes) - 1, h)
        else:
            # a named face: tensor product of the two tangent trapezoid rules
            tangents = [a for a in range(3) if a != axis]
            counts = [mesh.shape[a] for a in tangents]
            w0 = _trapezoid_weights(counts[0], mesh.element_dims[tangents[0]])
            w1 = _trapezoid_weights(counts[1], mesh.element_dims[tangents[1]])
            # edge_nodes sorts by node index: ix fastest, then iy, then iz,
            # which matches the (tangent0, tangent1) = meshgrid order below
            weights = (np.outer(w1, w0)).ravel()
        force[dim * nodes + axis] += ld.pressure * direction * weights
    return force


def build_passive_mask(regions: Iterable[PassiveRegion], mesh: Mesh) -> np.ndarray:
    """Per-element PASSIVE_* codes by strict centroid containment."""
    mask = np.full(mesh.n_elements, PASSIVE_FREE, dtype=np.int8)
    centroids = mesh.element_centroids()
    for i, region in enumerate(regions):
        if region.shape == "circle":
            d = np.linalg.norm(centroids - np.asarray(region.center), axis=1)
            inside = d < region.radius
        else:
            lo = np.asarray(region.min_corner)
            hi = np.asarray(region.max_corner)
            inside = np.all((centroids > lo) & (centroids < hi), axis=1)
        if not inside.any():
            warnings.warn(
                f"WARN_REGION_EMPTY: passive_regions[{i}] contains no element centroid",
                BoundaryConditionWarning,
                stacklevel=2,
            )
            continue
        mask[inside] = PASSIVE_VOID if region.fill == "void" else PASSIVE_SOLID
    return mask


def generate_bc(spec: ProblemSpec, mesh: Mesh | None = None) -> SolverArrays:
    """Full BC build for a validated spec.

    Warns (``BoundaryConditionWarning``) when a load lands on a constrained
    DOF: the component still enters the force vector but does no work.
    """
    mesh = mesh if mesh is not None else mesh_from_spec(spec)
    fixed = fixed_dofs_for(spec.supports, mesh)
    force = assemble_force(spec.loads, mesh)

    fixed_set = set(fixed.tolist())
    dim = mesh.ndim
    for i, ld in enumerate(spec.loads):
        if ld.point is None:
            continue
        node = mesh.snap_point(ld.point)
        dead = [a for a, f in enumerate(ld.force) if f != 0.0 and dim * node + a in fixed_set]
        if dead:
            warnings.warn(
                f"WARN_LOAD_ON_FIXED_DOF: loads[{i}] axis {dead} at node {node} is constrained",
                BoundaryConditionWarning,
                stacklevel=2,
            )

    return SolverArrays(
        fixed_dofs=fixed,
        force=force,
        passive_mask=build_passive_mask(spec.passive_regions, mesh),
    )
