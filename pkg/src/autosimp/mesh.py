"""Structured-grid mesh: index conventions shared by every stage.

All arrays in the pipeline use a single flat ordering. Elements:
``e = iz*(nx*ny) + iy*nx + ix`` (ix fastest, iy=0 at the bottom, iz=0 at
the front face). Nodes: ``n = iz*((nx+1)*(ny+1)) + iy*(nx+1) + ix``.
Degrees of freedom interleave per node: ``dof = ndim*n + axis``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

EDGES_2D = ("left", "right", "bottom", "top")
EDGES_3D = EDGES_2D + ("front", "back")


@dataclass(frozen=True)
class Mesh:
    """Regular grid of quad (2-D) or hex (3-D) elements."""

    nx: int
    ny: int
    nz: int | None = None
    hx: float = 1.0
    hy: float = 1.0
    hz: float | None = None

    @property
    def ndim(self) -> int:
        return 2 if self.nz is None else 3

    @property
    def shape(self) -> tuple[int, ...]:
        if self.nz is None:
            return (self.nx, self.ny)
        return (self.nx, self.ny, self.nz)

    @property
    def n_elements(self) -> int:
        return int(np.prod(self.shape))

    @property
    def n_nodes(self) -> int:
        n = (self.nx + 1) * (self.ny + 1)
        return n if self.nz is None else n * (self.nz + 1)

    @property
    def n_dofs(self) -> int:
        return self.ndim * self.n_nodes

    @property
    def element_dims(self) -> tuple[float, ...]:
        if self.nz is None:
            return (self.hx, self.hy)
        return (self.hx, self.hy, float(self.hz))

    @property
    def element_volume(self) -> float:
        return float(np.prod(self.element_dims))

    def node_index(self, ix: int, iy: int, iz: int = 0) -> int:
        return iz * (self.nx + 1) * (self.ny + 1) + iy * (self.nx + 1) + ix

    def element_index(self, ix: int, iy: int, iz: int = 0) -> int:
        return iz * self.nx * self.ny + iy * self.nx + ix

    def element_grid_coords(self) -> np.ndarray:
        """(n_elements, ndim) integer grid coordinates in flat order."""
        if self.nz is None:
            iy, ix = np.meshgrid(np.arange(self.ny), np.arange(self.nx), indexing="ij")
            return np.column_stack([ix.ravel(), iy.ravel()])
        iz, iy, ix = np.meshgrid(
            np.arange(self.nz), np.arange(self.ny), np.arange(self.nx), indexing="ij"
        )
        return np.column_stack([ix.ravel(), iy.ravel(), iz.ravel()])

    def element_centroids(self) -> np.ndarray:
        """(n_elements, ndim) centroid coordinates in physical units."""
        dims = np.asarray(self.element_dims)
        return (self.element_grid_coords() + 0.5) * dims

    def node_coords(self) -> np.ndarray:
        """(n_nodes, ndim) node coordinates in physical units."""
        if self.nz is None:
            iy, ix = np.meshgrid(
                np.arange(self.ny + 1), np.arange(self.nx + 1), indexing="ij"
            )
            grid = np.column_stack([ix.ravel(), iy.ravel()])
        else:
            iz, iy, ix = np.meshgrid(
                np.arange(self.nz + 1),
                np.arange(self.ny + 1),
                np.arange(self.nx + 1),
                indexing="ij",
            )
            grid = np.column_stack([ix.ravel(), iy.ravel(), iz.ravel()])
        return grid * np.asarray(self.element_dims)

    @cached_property
    def element_nodes(self) -> np.ndarray:
        """(n_elements, 4 or 8) corner node indices, counterclockwise bottom-up."""
        coords = self.element_grid_coords()
        ix, iy = coords[:, 0], coords[:, 1]
        if self.nz is None:
            n00 = iy * (self.nx + 1) + ix
            return np.column_stack(
                [n00, n00 + 1, n00 + self.nx + 2, n00 + self.nx + 1]
            )
        iz = coords[:, 2]
        layer = (self.nx + 1) * (self.ny + 1)
        n000 = iz * layer + iy * (self.nx + 1) + ix
        quad = np.column_stack([n000, n000 + 1, n000 + self.nx + 2, n000 + self.nx + 1])
        return np.hstack([quad, quad + layer])

    @cached_property
    def element_dofs(self) -> np.ndarray:
        """(n_elements, 8 or 24) global DOF indices per element."""
        nodes = self.element_nodes
        dim = self.ndim
        dofs = np.empty((nodes.shape[0], nodes.shape[1] * dim), dtype=np.int64)
        for axis in range(dim):
            dofs[:, axis::dim] = dim * nodes + axis
        return dofs

    def edge_nodes(self, edge: str) -> np.ndarray:
        """Node indices on a named boundary edge (2-D) or face (3-D)."""
        names = EDGES_2D if self.nz is None else EDGES_3D
        if edge not in names:
            raise ValueError(f"unknown edge {edge!r}, expected one of {names}")
        nxn, nyn = self.nx + 1, self.ny + 1
        nzn = 1 if self.nz is None else self.nz + 1
        ix = np.arange(nxn)
        iy = np.arange(nyn)
        iz = np.arange(nzn)
        if edge == "left":
            ix = np.array([0])
        elif edge == "right":
            ix = np.array([self.nx])
        elif edge == "bottom":
            iy = np.array([0])
        elif edge == "top":
            iy = np.array([self.ny])
        elif edge == "front":
            iz = np.array([0])
        elif edge == "back":
            iz = np.array([nzn - 1])
        gz, gy, gx = np.meshgrid(iz, iy, ix, indexing="ij")
        nodes = gz.ravel() * nxn * nyn + gy.ravel() * nxn + gx.ravel()
        return np.sort(nodes)

    def snap_point(self, point) -> int:
        """Nearest node to ``point``; Euclidean distance, ties go to the lowest index."""
        p = np.asarray(point, dtype=float)
        if p.shape != (self.ndim,):
            raise ValueError(
                f"point has {p.shape[0] if p.ndim == 1 else '?'} coords, mesh is {self.ndim}-D"
            )
        d2 = ((self.node_coords() - p) ** 2).sum(axis=1)
        return int(np.argmin(d2))  # argmin returns the first (lowest) index on ties

    def elements_touching_node(self, node: int) -> np.ndarray:
        """Flat indices of elements incident to ``node``."""
        nxn, nyn = self.nx + 1, self.ny + 1
        iz, rem = divmod(int(node), nxn * nyn)
        iy, ix = divmod(rem, nxn)
        out = []
        zs = [0] if self.nz is None else range(max(0, iz - 1), min(self.nz, iz + 1))
        for ez in zs:
            for ey in range(max(0, iy - 1), min(self.ny, iy + 1)):
                for ex in range(max(0, ix - 1), min(self.nx, ix + 1)):
                    out.append(self.element_index(ex, ey, ez))
        return np.array(sorted(out), dtype=np.int64)


def mesh_from_spec(spec) -> Mesh:
    """Build the solver mesh for a validated problem spec."""
    if spec.domain.Lz is None:
        return Mesh(
            nx=spec.mesh.nx,
            ny=spec.mesh.ny,
            hx=spec.domain.Lx / spec.mesh.nx,
            hy=spec.domain.Ly / spec.mesh.ny,
        )
    return Mesh(
        nx=spec.mesh.nx,
        ny=spec.mesh.ny,
        nz=spec.mesh.nz,
        hx=spec.domain.Lx / spec.mesh.nx,
        hy=spec.domain.Ly / spec.mesh.ny,
        hz=spec.domain.Lz / spec.mesh.nz,
    )
