from __future__ import annotations

import numpy as np
import pytest

from autosimp.bc import generate_bc
from autosimp.mesh import Mesh, mesh_from_spec
from autosimp.spec import validate_spec


def make_spec(raw: dict):
    spec, _ = validate_spec(raw)
    return spec


def cantilever_raw(nx: int = 20, ny: int = 10, vf: float = 0.5, iters: int = 60,
                   **extra) -> dict:
    raw = {
        "domain": {"Lx": float(nx), "Ly": float(ny)},
        "mesh": {"nx": nx, "ny": ny},
        "volume_fraction": vf,
        "supports": [{"kind": "fixed", "edge": "left"}],
        "loads": [{"point": [float(nx), 0.0], "force": [0.0, -1.0]}],
        "solve": {"max_iterations": iters, "seed": 42},
    }
    raw.update(extra)
    return raw


def mbb_raw(nx: int = 90, ny: int = 30, vf: float = 0.5, iters: int = 300) -> dict:
    return {
        "domain": {"Lx": float(nx), "Ly": float(ny)},
        "mesh": {"nx": nx, "ny": ny},
        "volume_fraction": vf,
        "supports": [
            {"kind": "pin_x", "edge": "left"},
            {"kind": "pin_y", "point": [float(nx), 0.0]},
        ],
        "loads": [{"point": [0.0, float(ny)], "force": [0.0, -1.0]}],
        "solve": {"max_iterations": iters, "seed": 42},
    }


@pytest.fixture
def small_cantilever():
    spec = make_spec(cantilever_raw())
    mesh = mesh_from_spec(spec)
    arrays = generate_bc(spec, mesh)
    return spec, mesh, arrays


@pytest.fixture
def tiny_mesh_2d() -> Mesh:
    return Mesh(nx=4, ny=3)


@pytest.fixture
def tiny_mesh_3d() -> Mesh:
    return Mesh(nx=3, ny=2, nz=2)


def rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)
