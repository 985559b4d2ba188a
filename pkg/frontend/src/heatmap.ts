/** Density field -> RGBA pixels. Pure buffer math; canvas work stays in main. */

import type { Projection } from "./frames.js";

const VOID_RGB: readonly [number, number, number] = [250, 250, 250];
const SOLID_RGB: readonly [number, number, number] = [22, 26, 38];

/** Linear void-to-solid ramp, clamped to [0, 1]. */
export function densityColor(v: number): [number, number, number] {
  const t = Math.min(1, Math.max(0, v));
  return [
    Math.round(VOID_RGB[0] + t * (SOLID_RGB[0] - VOID_RGB[0])),
    Math.round(VOID_RGB[1] + t * (SOLID_RGB[1] - VOID_RGB[1])),
    Math.round(VOID_RGB[2] + t * (SOLID_RGB[2] - VOID_RGB[2])),
  ];
}

/** RGBA buffer for putImageData.
 *
 * Field rows run bottom-up (row 0 = lowest y); images run top-down, so the
 * rows are flipped here.
 */
export function densityImage(field: Projection): Uint8ClampedArray<ArrayBuffer> {
  const { width, height, values } = field;
  const out = new Uint8ClampedArray(4 * width * height);
  for (let row = 0; row < height; row++) {
    const fieldRow = height - 1 - row;
    for (let col = 0; col < width; col++) {
      const [r, g, b] = densityColor(values[fieldRow * width + col] as number);
      const o = 4 * (row * width + col);
      out[o] = r;
      out[o + 1] = g;
      out[o + 2] = b;
      out[o + 3] = 255;
    }
  }
  return out;
}
