"""FE core checked against exact-arithmetic and closed-form references.

The stiffness reference integrates B^T D B with Fraction arithmetic, which
is exact because every integrand entry is polynomial (degree <= 2 per
variable) over the reference square/cube. The uniaxial tension problems have
linear exact solutions inside the FE space, so the solver must reproduce
them to machine precision on any mesh.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from autosimp.bc import generate_bc
from autosimp.fem import (
    SingularSystemError,
    assemble_and_solve,
    assemble_stiffness,
    compliance_gradient_check,
    element_stiffness,
    unit_element_stiffness,
)
from autosimp.mesh import Mesh, mesh_from_spec
from autosimp.spec import Material

from conftest import make_spec

CORNERS_2D = ((-1, -1), (1, -1), (1, 1), (-1, 1))
CORNERS_3D = (
    (-1, -1, -1), (1, -1, -1), (1, 1, -1), (-1, 1, -1),
    (-1, -1, 1), (1, -1, 1), (1, 1, 1), (-1, 1, 1),
)

Poly = dict  # exponent tuple -> Fraction coefficient


def _poly_mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for ea, ca in p.items():
        for eb, cb in q.items():
            key = tuple(a + b for a, b in zip(ea, eb))
            out[key] = out.get(key, Fraction(0)) + ca * cb
    return out


def _poly_integrate(p: Poly) -> Fraction:
    """Integrate over [-1, 1]^d exactly: odd powers vanish."""
    total = Fraction(0)
    for exps, coeff in p.items():
        factor = Fraction(1)
        for e in exps:
            if e % 2 == 1:
                factor = Fraction(0)
                break
            factor *= Fraction(2, e + 1)
        total += coeff * factor
    return total


def _shape_gradients(corners, ndim: int) -> list[list[Poly]]:
    """dN_i/dxi_a as polynomials in the reference coordinates."""
    grads = []
    scale = Fraction(1, 2**ndim)
    for corner in corners:
        per_axis = []
        for a in range(ndim):
            poly: Poly = {tuple(0 for _ in range(ndim)): Fraction(corner[a]) * scale}
            for b in range(ndim):
                if b == a:
                    continue
                lin = {
                    tuple(0 for _ in range(ndim)): Fraction(1),
                    tuple(1 if k == b else 0 for k in range(ndim)): Fraction(corner[b]),
                }
                poly = _poly_mul(poly, lin)
            per_axis.append(poly)
        grads.append(per_axis)
    return grads


def _elasticity_fraction(nu: Fraction, ndim: int):
    if ndim == 2:
        c = 1 / (1 - nu * nu)
        return [
            [c, c * nu, Fraction(0)],
            [c * nu, c, Fraction(0)],
            [Fraction(0), Fraction(0), c * (1 - nu) / 2],
        ]
    lam = nu / ((1 + nu) * (1 - 2 * nu))
    mu = 1 / (2 * (1 + nu))
    D = [[Fraction(0)] * 6 for _ in range(6)]
    for i in range(3):
        for j in range(3):
            D[i][j] = lam
        D[i][i] = lam + 2 * mu
    for i in range(3, 6):
        D[i][i] = mu
    return D


def _b_rows(grad: list[Poly], node: int, ndim: int) -> dict[tuple[int, int], Poly]:
    """Nonzero B entries for one node: (strain row, local dof axis) -> poly."""
    if ndim == 2:
        return {
            (0, 0): grad[0],
            (1, 1): grad[1],
            (2, 0): grad[1],
            (2, 1): grad[0],
        }
    return {
        (0, 0): grad[0],
        (1, 1): grad[1],
        (2, 2): grad[2],
        (3, 0): grad[1],
        (3, 1): grad[0],
        (4, 1): grad[2],
        (4, 2): grad[1],
        (5, 0): grad[2],
        (5, 2): grad[0],
    }


def exact_stiffness(dims, nu: Fraction) -> np.ndarray:
    """Exact unit-modulus element stiffness via rational integration."""
    ndim = len(dims)
    corners = CORNERS_2D if ndim == 2 else CORNERS_3D
    jac = [Fraction(d) / 2 for d in dims]
    detJ = Fraction(1)
    for j in jac:
        detJ *= j
    grads = _shape_gradients(corners, ndim)
    # physical gradients: divide axis a by jac[a]
    grads = [
        [{k: c / jac[a] for k, c in poly.items()} for a, poly in per_node]
        for per_node in [list(enumerate(g)) for g in grads]
    ]
    D = _elasticity_fraction(nu, ndim)
    n_nodes = len(corners)
    n_dof = n_nodes * ndim
    K = [[Fraction(0)] * n_dof for _ in range(n_dof)]
    b_entries = [_b_rows(grads[i], i, ndim) for i in range(n_nodes)]
    for i in range(n_nodes):
        for j in range(n_nodes):
            for (row_i, ax_i), poly_i in b_entries[i].items():
                for (row_j, ax_j), poly_j in b_entries[j].items():
                    d = D[row_i][row_j]
                    if d == 0:
                        continue
                    val = d * _poly_integrate(_poly_mul(poly_i, poly_j)) * detJ
                    K[ndim * i + ax_i][ndim * j + ax_j] += val
    return np.array([[float(v) for v in row] for row in K])


@pytest.mark.parametrize(
    "dims",
    [(1.0, 1.0), (2.0, 1.0), (0.5, 1.5), (1.0, 3.0)],
)
def test_quad_stiffness_matches_exact_integral(dims):
    nu = 0.3
    got = unit_element_stiffness(dims, nu)
    want = exact_stiffness(
        [Fraction.from_float(d) for d in dims], Fraction.from_float(nu)
    )
    np.testing.assert_allclose(got, want, rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("dims", [(1.0, 1.0, 1.0), (2.0, 1.0, 0.5)])
def test_hex_stiffness_matches_exact_integral(dims):
    nu = 0.3
    got = unit_element_stiffness(dims, nu)
    want = exact_stiffness(
        [Fraction.from_float(d) for d in dims], Fraction.from_float(nu)
    )
    np.testing.assert_allclose(got, want, rtol=1e-13, atol=1e-15)


def test_quad_corner_entry_matches_hand_derivation():
    # K[0,0] = (3 - nu) / (6 (1 - nu^2)) for a unit square, by direct integration
    nu = 0.3
    K = unit_element_stiffness((1.0, 1.0), nu)
    assert K[0, 0] == pytest.approx((3.0 - nu) / (6.0 * (1.0 - nu * nu)), rel=1e-14)


def _rigid_modes(dims, ndim: int) -> list[np.ndarray]:
    corners = np.array(CORNERS_2D if ndim == 2 else CORNERS_3D, dtype=float)
    xyz = corners * (np.asarray(dims) / 2.0)
    modes = []
    for a in range(ndim):
        m = np.zeros((len(corners), ndim))
        m[:, a] = 1.0
        modes.append(m.ravel())
    if ndim == 2:
        rot = np.stack([-xyz[:, 1], xyz[:, 0]], axis=1)
        modes.append(rot.ravel())
    else:
        for a, b in ((0, 1), (1, 2), (0, 2)):
            m = np.zeros((len(corners), 3))
            m[:, a] = -xyz[:, b]
            m[:, b] = xyz[:, a]
            modes.append(m.ravel())
    return modes


@pytest.mark.parametrize("dims", [(1.0, 1.0), (2.0, 0.5), (1.0, 1.0, 1.0), (1.5, 1.0, 2.0)])
def test_stiffness_annihilates_rigid_modes(dims):
    ndim = len(dims)
    K = unit_element_stiffness(dims, 0.3)
    modes = _rigid_modes(dims, ndim)
    for mode in modes:
        np.testing.assert_allclose(K @ mode, 0.0, atol=1e-12)
    # and nothing else: rank equals dof count minus rigid mode count
    rank = np.linalg.matrix_rank(K, tol=1e-10)
    assert rank == K.shape[0] - len(modes)


def test_stiffness_is_symmetric_positive_semidefinite():
    for dims in ((1.0, 1.0), (1.0, 1.0, 1.0)):
        K = unit_element_stiffness(dims, 0.3)
        np.testing.assert_allclose(K, K.T, atol=1e-14)
        eigs = np.linalg.eigvalsh(K)
        assert eigs.min() > -1e-12


def test_element_stiffness_scales_with_modulus():
    k1 = element_stiffness(Material(E0=1.0), (1.0, 1.0))
    k7 = element_stiffness(Material(E0=7.0), (1.0, 1.0))
    np.testing.assert_allclose(k7, 7.0 * k1, rtol=1e-15)


def _tension_spec_2d(nx: int, ny: int) -> dict:
    return {
        "domain": {"Lx": float(nx), "Ly": float(ny)},
        "mesh": {"nx": nx, "ny": ny},
        "volume_fraction": 0.5,
        "supports": [
            {"kind": "pin_x", "edge": "left"},
            {"kind": "pin_y", "point": [0.0, 0.0]},
        ],
        "loads": [{"edge": "right", "pressure": -1.0}],
    }


@pytest.mark.parametrize("nx,ny", [(1, 1), (4, 3), (10, 6)])
def test_uniaxial_tension_patch_2d(nx, ny):
    # exact solution u = (x, -nu y) is in the FE space: machine precision holds
    spec = make_spec(_tension_spec_2d(nx, ny))
    mesh = mesh_from_spec(spec)
    arrays = generate_bc(spec, mesh)
    rho = np.ones(mesh.n_elements)
    state = assemble_and_solve(mesh, rho, arrays, spec.material, p=3.0, method="direct")
    coords = mesh.node_coords()
    u = state.displacement.reshape(-1, 2)
    np.testing.assert_allclose(u[:, 0], coords[:, 0], rtol=1e-9, atol=1e-10)
    np.testing.assert_allclose(u[:, 1], -spec.material.nu * coords[:, 1], rtol=1e-9, atol=1e-10)
    assert state.compliance == pytest.approx(float(nx * ny), rel=1e-10)


def test_uniaxial_tension_patch_3d():
    raw = {
        "domain": {"Lx": 3.0, "Ly": 2.0, "Lz": 2.0},
        "mesh": {"nx": 3, "ny": 2, "nz": 2},
        "volume_fraction": 0.5,
        "supports": [
            {"kind": "pin_x", "edge": "left"},
            {"kind": "pin_y", "point": [0.0, 0.0, 0.0]},
            {"kind": "pin_z", "point": [0.0, 0.0, 0.0]},
            {"kind": "pin_y", "point": [0.0, 0.0, 2.0]},
        ],
        "loads": [{"edge": "right", "pressure": -1.0}],
    }
    spec = make_spec(raw)
    mesh = mesh_from_spec(spec)
    arrays = generate_bc(spec, mesh)
    rho = np.ones(mesh.n_elements)
    state = assemble_and_solve(mesh, rho, arrays, spec.material, p=3.0, method="direct")
    coords = mesh.node_coords()
    u = state.displacement.reshape(-1, 3)
    nu = spec.material.nu
    np.testing.assert_allclose(u[:, 0], coords[:, 0], rtol=1e-9, atol=1e-10)
    np.testing.assert_allclose(u[:, 1], -nu * coords[:, 1], rtol=1e-9, atol=1e-10)
    np.testing.assert_allclose(u[:, 2], -nu * coords[:, 2], rtol=1e-9, atol=1e-10)
    assert state.compliance == pytest.approx(3.0 * 2.0 * 2.0, rel=1e-9)


def test_assembly_matches_per_element_sum():
    mesh = Mesh(nx=3, ny=2)
    material = Material()
    gen = np.random.default_rng(2)
    rho = 0.2 + 0.8 * gen.random(mesh.n_elements)
    p = 3.0
    K = assemble_stiffness(mesh, rho, material, p).toarray()
    k0 = unit_element_stiffness(mesh.element_dims, material.nu)
    emin = 1e-9 * material.E0
    E = emin + rho**p * (material.E0 - emin)
    want = np.zeros_like(K)
    for e in range(mesh.n_elements):
        dofs = mesh.element_dofs[e]
        want[np.ix_(dofs, dofs)] += E[e] * k0
    np.testing.assert_allclose(K, want, rtol=1e-12, atol=1e-14)


def test_unconstrained_system_raises():
    raw = {
        "domain": {"Lx": 4.0, "Ly": 2.0},
        "mesh": {"nx": 4, "ny": 2},
        "volume_fraction": 0.5,
        "supports": [{"kind": "fixed", "edge": "left"}],
        "loads": [{"point": [4.0, 0.0], "force": [0.0, -1.0]}],
    }
    spec = make_spec(raw)
    mesh = mesh_from_spec(spec)
    arrays = generate_bc(spec, mesh)
    stripped = type(arrays)(
        fixed_dofs=np.array([], dtype=np.int64),
        force=arrays.force,
        passive_mask=arrays.passive_mask,
    )
    rho = np.ones(mesh.n_elements)
    with pytest.raises(SingularSystemError):
        assemble_and_solve(mesh, rho, stripped, spec.material, p=3.0, method="direct")


def test_cg_agrees_with_direct_solver_3d():
    raw = {
        "domain": {"Lx": 4.0, "Ly": 3.0, "Lz": 2.0},
        "mesh": {"nx": 4, "ny": 3, "nz": 2},
        "volume_fraction": 0.5,
        "supports": [{"kind": "fixed", "edge": "left"}],
        "loads": [{"point": [4.0, 0.0, 1.0], "force": [0.0, -1.0, 0.0]}],
    }
    spec = make_spec(raw)
    mesh = mesh_from_spec(spec)
    arrays = generate_bc(spec, mesh)
    rho = 0.3 + 0.7 * np.random.default_rng(4).random(mesh.n_elements)
    direct = assemble_and_solve(mesh, rho, arrays, spec.material, p=3.0, method="direct")
    cg = assemble_and_solve(mesh, rho, arrays, spec.material, p=3.0, method="cg")
    assert cg.compliance == pytest.approx(direct.compliance, rel=1e-7)
    np.testing.assert_allclose(cg.displacement, direct.displacement, rtol=1e-5, atol=1e-9)


def test_raw_sensitivity_matches_finite_differences(small_cantilever):
    spec, mesh, arrays = small_cantilever
    gen = np.random.default_rng(9)
    rho = 0.3 + 0.5 * gen.random(mesh.n_elements)
    err = compliance_gradient_check(mesh, arrays, spec.material, rho, p=3.0)
    assert err < 1e-4


def test_compliance_decreases_with_added_material(small_cantilever):
    spec, mesh, arrays = small_cantilever
    lo = assemble_and_solve(mesh, np.full(mesh.n_elements, 0.4), arrays, spec.material, p=3.0)
    hi = assemble_and_solve(mesh, np.full(mesh.n_elements, 0.8), arrays, spec.material, p=3.0)
    assert hi.compliance < lo.compliance


def test_sensitivity_is_nonpositive(small_cantilever):
    spec, mesh, arrays = small_cantilever
    rho = 0.2 + 0.6 * np.random.default_rng(12).random(mesh.n_elements)
    state = assemble_and_solve(mesh, rho, arrays, spec.material, p=3.0)
    assert np.all(state.sensitivity <= 1e-30)
