"""Linear elastic FE core on regular grids.

2-D uses bilinear plane-stress quads, 3-D trilinear hexes, both integrated
with full Gauss quadrature on rectangular elements. Stiffness interpolates
density as E(rho) = E_min + rho^p (E0 - E_min) with E_min = 1e-9 E0, which
keeps void elements numerically alive without stiffening the structure.
Constrained DOFs are eliminated by row/column reduction so the reduced
operator stays symmetric positive definite for both solve paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .bc import SolverArrays
from .mesh import Mesh
from .spec import Material

EMIN_RATIO = 1e-9
CG_RTOL = 1e-8
CG_MAXITER_FACTOR = 10

_GAUSS_1D = (-1.0 / np.sqrt(3.0), 1.0 / np.sqrt(3.0))

# local corner coordinates matching Mesh.element_nodes ordering
_CORNERS_2D = np.array([(-1, -1), (1, -1), (1, 1), (-1, 1)], dtype=float)
_CORNERS_3D = np.array(
    [
        (-1, -1, -1), (1, -1, -1), (1, 1, -1), (-1, 1, -1),
        (-1, -1, 1), (1, -1, 1), (1, 1, 1), (-1, 1, 1),
    ],
    dtype=float,
)


class SingularSystemError(RuntimeError):
    """Stiffness system not solvable: missing constraints or CG stagnation."""


def _elasticity_matrix(nu: float, ndim: int) -> np.ndarray:
    """Unit-modulus constitutive matrix (plane stress in 2-D)."""
    if ndim == 2:
        c = 1.0 / (1.0 - nu * nu)
        return c * np.array(
            [
                [1.0, nu, 0.0],
                [nu, 1.0, 0.0],
                [0.0, 0.0, (1.0 - nu) / 2.0],
            ]
        )
    lam = nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    mu = 1.0 / (2.0 * (1.0 + nu))
    D = np.zeros((6, 6))
    D[:3, :3] = lam
    D[np.arange(3), np.arange(3)] = lam + 2.0 * mu
    D[np.arange(3, 6), np.arange(3, 6)] = mu
    return D


def _strain_displacement(dN_dx: np.ndarray, ndim: int) -> np.ndarray:
    """B matrix from shape-function gradients (columns per node)."""
    n_nodes = dN_dx.shape[1]
    if ndim == 2:
        B = np.zeros((3, 2 * n_nodes))
        B[0, 0::2] = dN_dx[0]
        B[1, 1::2] = dN_dx[1]
        B[2, 0::2] = dN_dx[1]
        B[2, 1::2] = dN_dx[0]
        return B
    B = np.zeros((6, 3 * n_nodes))
    B[0, 0::3] = dN_dx[0]
    B[1, 1::3] = dN_dx[1]
    B[2, 2::3] = dN_dx[2]
    B[3, 0::3] = dN_dx[1]  # gamma_xy
    B[3, 1::3] = dN_dx[0]
    B[4, 1::3] = dN_dx[2]  # gamma_yz
    B[4, 2::3] = dN_dx[1]
    B[5, 0::3] = dN_dx[2]  # gamma_zx
    B[5, 2::3] = dN_dx[0]
    return B


def element_stiffness(material: Material, dims: tuple[float, ...]) -> np.ndarray:
    """Element stiffness for a fully solid element of the given dimensions."""
    return material.E0 * unit_element_stiffness(tuple(dims), material.nu)


_K0_CACHE: dict[tuple, np.ndarray] = {}


def unit_element_stiffness(dims: tuple[float, ...], nu: float) -> np.ndarray:
    """Unit-modulus element stiffness (8x8 quad or 24x24 hex), cached."""
    key = (tuple(float(d) for d in dims), float(nu))
    if key in _K0_CACHE:
        return _K0_CACHE[key]
    ndim = len(dims)
    corners = _CORNERS_2D if ndim == 2 else _CORNERS_3D
    D = _elasticity_matrix(nu, ndim)
    jac = np.asarray(dims) / 2.0  # diagonal Jacobian of the rectangular map
    detJ = float(np.prod(jac))
    n_dof = corners.shape[0] * ndim
    K = np.zeros((n_dof, n_dof))
    for gp in np.array(np.meshgrid(*([_GAUSS_1D] * ndim))).T.reshape(-1, ndim):
        # dN/dxi_a = corner_a/2^(d-1)... evaluate per shape function
        dN = np.empty((ndim, corners.shape[0]))
        for i, corner in enumerate(corners):
            terms = 1.0 + corner * gp
            for a in range(ndim):
                others = np.prod(np.delete(terms, a))
                dN[a, i] = corner[a] * others / (2.0**ndim)
        dN_dx = dN / jac[:, None]
        B = _strain_displacement(dN_dx, ndim)
        K += B.T @ D @ B * detJ
    K = (K + K.T) / 2.0
    _K0_CACHE[key] = K
    return K


@dataclass
class FieldState:
    """One FE solve: displacements, compliance, per-element quantities."""

    displacement: np.ndarray
    compliance: float
    strain_energy: np.ndarray  # u_e^T k0 u_e per element (unit modulus)
    sensitivity: np.ndarray  # dC/d(rho_phys) per element


def young_modulus(rho_phys: np.ndarray, material: Material, p: float) -> np.ndarray:
    emin = EMIN_RATIO * material.E0
    return emin + rho_phys**p * (material.E0 - emin)


def assemble_stiffness(
    mesh: Mesh, rho_phys: np.ndarray, material: Material, p: float
) -> sp.csc_matrix:
    """Global stiffness in CSC form (duplicate triplets summed)."""
    k0 = unit_element_stiffness(mesh.element_dims, material.nu)
    E = young_modulus(np.asarray(rho_phys, dtype=float), material, p)
    edof = mesh.element_dofs
    n = edof.shape[1]
    iK = np.repeat(edof, n, axis=1).ravel()
    jK = np.tile(edof, (1, n)).ravel()
    data = (E[:, None] * k0.ravel()[None, :]).ravel()
    K = sp.coo_matrix((data, (iK, jK)), shape=(mesh.n_dofs, mesh.n_dofs))
    return K.tocsc()


def _solve_direct(Kff: sp.csc_matrix, f: np.ndarray) -> np.ndarray:
    try:
        lu = spla.splu(Kff)
        u = lu.solve(f)
    except RuntimeError as exc:  # singular factorization
        raise SingularSystemError(f"SINGULAR_SYSTEM: direct factorization failed ({exc})") from exc
    if not np.all(np.isfinite(u)):
        raise SingularSystemError("SINGULAR_SYSTEM: direct solve produced non-finite values")
    return u


def _solve_cg(Kff: sp.csc_matrix, f: np.ndarray, x0: np.ndarray | None) -> np.ndarray:
    diag = Kff.diagonal()
    if np.any(diag <= 0):
        raise SingularSystemError("SINGULAR_SYSTEM: non-positive diagonal in reduced stiffness")
    M = sp.diags(1.0 / diag)
    maxiter = CG_MAXITER_FACTOR * f.size
    u, info = spla.cg(Kff.tocsr(), f, x0=x0, rtol=CG_RTOL, atol=0.0, maxiter=maxiter, M=M)
    if info != 0 or not np.all(np.isfinite(u)):
        raise SingularSystemError(f"SINGULAR_SYSTEM: CG did not converge (info={info})")
    return u


def assemble_and_solve(
    mesh: Mesh,
    rho_phys: np.ndarray,
    arrays: SolverArrays,
    material: Material,
    p: float,
    method: str = "auto",
    warm_start: np.ndarray | None = None,
) -> FieldState:
    """Assemble, solve K u = f, and return compliance plus sensitivities.

    ``method``: "direct" (sparse LU), "cg" (Jacobi-preconditioned conjugate
    gradients), or "auto" (direct in 2-D, cg in 3-D). ``warm_start`` is a
    full-length displacement guess for the cg path.
    """
    rho_phys = np.asarray(rho_phys, dtype=float)
    if rho_phys.shape != (mesh.n_elements,):
        raise ValueError(f"density has shape {rho_phys.shape}, expected ({mesh.n_elements},)")
    if method == "auto":
        method = "direct" if mesh.ndim == 2 else "cg"
    if arrays.fixed_dofs.size == 0:
        raise SingularSystemError("SINGULAR_SYSTEM: no constrained DOFs")

    K = assemble_stiffness(mesh, rho_phys, material, p)
    free = np.setdiff1d(np.arange(mesh.n_dofs, dtype=np.int64), arrays.fixed_dofs)
    Kff = K[free][:, free]
    f = arrays.force[free]

    u_full = np.zeros(mesh.n_dofs)
    if method == "direct":
        u_full[free] = _solve_direct(Kff, f)
    elif method == "cg":
        x0 = warm_start[free] if warm_start is not None else None
        u_full[free] = _solve_cg(Kff, f, x0)
    else:
        raise ValueError(f"unknown solve method {method!r}")

    compliance = float(arrays.force @ u_full)
    k0 = unit_element_stiffness(mesh.element_dims, material.nu)
    ue = u_full[mesh.element_dofs]
    strain_energy = np.einsum("ei,ij,ej->e", ue, k0, ue)
    emin = EMIN_RATIO * material.E0
    sensitivity = -p * rho_phys ** (p - 1.0) * (material.E0 - emin) * strain_energy
    return FieldState(
        displacement=u_full,
        compliance=compliance,
        strain_energy=strain_energy,
        sensitivity=sensitivity,
    )


def compliance_gradient_check(
    mesh: Mesh,
    arrays: SolverArrays,
    material: Material,
    rho_phys: np.ndarray,
    p: float,
    step: float = 1e-6,
    method: str = "auto",
) -> float:
    """Error of analytic dC/drho against central differences.

    Perturbs physical densities directly (no filter or projection in the
    loop), so this isolates the FE sensitivity path. Returns the worst
    per-element deviation scaled by the largest gradient entry; per-element
    relative errors would be dominated by cancellation noise wherever the
    true gradient is tiny.
    """
    rho_phys = np.asarray(rho_phys, dtype=float)
    base = assemble_and_solve(mesh, rho_phys, arrays, material, p, method=method)
    fd = np.empty(mesh.n_elements)
    for e in range(mesh.n_elements):
        bumped = rho_phys.copy()
        bumped[e] = rho_phys[e] + step
        c_plus = assemble_and_solve(mesh, bumped, arrays, material, p, method=method).compliance
        bumped[e] = rho_phys[e] - step
        c_minus = assemble_and_solve(mesh, bumped, arrays, material, p, method=method).compliance
        fd[e] = (c_plus - c_minus) / (2.0 * step)
    scale = max(np.max(np.abs(fd)), np.max(np.abs(base.sensitivity)))
    if scale == 0.0:
        return float(np.max(np.abs(base.sensitivity - fd)))
    return float(np.max(np.abs(base.sensitivity - fd)) / scale)
