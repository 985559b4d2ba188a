/** Density frame codec, byte-compatible with the service.
 *
 * A frame is the flat projected-density field in canonical element order
 * (index = iz * nx * ny + iy * nx + ix), quantized to little-endian float32
 * and base64-encoded.
 */

import type { Frame } from "./types.js";

export interface DecodedFrame {
  values: Float32Array;
  nx: number;
  ny: number;
  nz: number; // 1 for 2-D frames
}

export function decodeFrame(frame: Frame): DecodedFrame {
  const binary = atob(frame.data);
  const bytes = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) bytes[i] = binary.charCodeAt(i);
  const nz = frame.nz ?? 1;
  const expected = frame.nx * frame.ny * nz;
  if (bytes.length !== expected * 4) {
    throw new Error(
      `frame payload has ${bytes.length / 4} values, dims imply ${expected}`,
    );
  }
  // base64 payloads are little-endian by contract; DataView reads explicitly
  const view = new DataView(bytes.buffer);
  const values = new Float32Array(expected);
  for (let i = 0; i < expected; i++) values[i] = view.getFloat32(4 * i, true);
  return { values, nx: frame.nx, ny: frame.ny, nz };
}

export function encodeFrame(values: ArrayLike<number>, nx: number, ny: number, nz?: number): Frame {
  const n = values.length;
  const bytes = new Uint8Array(4 * n);
  const view = new DataView(bytes.buffer);
  for (let i = 0; i < n; i++) view.setFloat32(4 * i, Math.fround(values[i] as number), true);
  let binary = "";
  for (let i = 0; i < bytes.length; i++) binary += String.fromCharCode(bytes[i] as number);
  const frame: Frame = { data: btoa(binary), nx, ny };
  if (nz !== undefined) frame.nz = nz;
  return frame;
}

export function elementIndex(f: DecodedFrame, ix: number, iy: number, iz = 0): number {
  return iz * f.nx * f.ny + iy * f.nx + ix;
}

/** 2-D field for display: a z-slice of a 3-D frame, or the 2-D frame itself. */
export function sliceZ(f: DecodedFrame, iz: number): Float32Array {
  const n = f.nx * f.ny;
  return f.values.subarray(iz * n, (iz + 1) * n);
}

export type ProjectionAxis = "x" | "y" | "z";

export interface Projection {
  width: number;
  height: number;
  /** row-major, row 0 = lowest coordinate of the vertical axis */
  values: Float32Array;
}

/** X-ray view of a 3-D frame: mean density along one axis.
 *
 * z -> (nx wide, ny tall); y -> (nx wide, nz tall); x -> (nz wide, ny tall).
 * 2-D frames only support the z axis (the identity projection).
 */
export function meanProjection(f: DecodedFrame, axis: ProjectionAxis): Projection {
  const { nx, ny, nz } = f;
  if (axis === "z") {
    const out = new Float32Array(nx * ny);
    for (let iy = 0; iy < ny; iy++) {
      for (let ix = 0; ix < nx; ix++) {
        let sum = 0;
        for (let iz = 0; iz < nz; iz++) sum += f.values[elementIndex(f, ix, iy, iz)] as number;
        out[iy * nx + ix] = sum / nz;
      }
    }
    return { width: nx, height: ny, values: out };
  }
  if (nz === 1) throw new Error(`axis ${axis} projection needs a 3-D frame`);
  if (axis === "y") {
    const out = new Float32Array(nx * nz);
    for (let iz = 0; iz < nz; iz++) {
      for (let ix = 0; ix < nx; ix++) {
        let sum = 0;
        for (let iy = 0; iy < ny; iy++) sum += f.values[elementIndex(f, ix, iy, iz)] as number;
        out[iz * nx + ix] = sum / ny;
      }
    }
    return { width: nx, height: nz, values: out };
  }
  const out = new Float32Array(nz * ny);
  for (let iy = 0; iy < ny; iy++) {
    for (let iz = 0; iz < nz; iz++) {
      let sum = 0;
      for (let ix = 0; ix < nx; ix++) sum += f.values[elementIndex(f, ix, iy, iz)] as number;
      out[iy * nz + iz] = sum / nx;
    }
  }
  return { width: nz, height: ny, values: out };
}
