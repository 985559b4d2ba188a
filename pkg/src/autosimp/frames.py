"""Density frame codec shared by the service, the CLI stream, and the UI.

A frame is the flat projected-density array in canonical element order,
quantized to little-endian float32 and base64-encoded, plus the grid
dimensions needed to rasterize it.
"""

from __future__ import annotations

import base64

import numpy as np

from .mesh import Mesh


def encode_frame(rho: np.ndarray, mesh: Mesh) -> dict:
    data = np.ascontiguousarray(np.asarray(rho, dtype="<f4"))
    frame = {
        "data": base64.b64encode(data.tobytes()).decode("ascii"),
        "nx": mesh.nx,
        "ny": mesh.ny,
    }
    if mesh.nz is not None:
        frame["nz"] = mesh.nz
    return frame


def decode_frame(frame: dict) -> np.ndarray:
    """Exact inverse of :func:`encode_frame` (float32 values round-trip)."""
    raw = base64.b64decode(frame["data"])
    values = np.frombuffer(raw, dtype="<f4")
    expected = frame["nx"] * frame["ny"] * frame.get("nz", 1)
    if values.size != expected:
        raise ValueError(f"frame payload has {values.size} values, dims imply {expected}")
    return values.copy()
