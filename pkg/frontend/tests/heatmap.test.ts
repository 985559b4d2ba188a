import { describe, expect, it } from "vitest";

import { densityColor, densityImage } from "../src/heatmap.js";

describe("densityColor", () => {
  it("maps void to the light endpoint", () => {
    expect(densityColor(0)).toEqual([250, 250, 250]);
  });

  it("maps solid to the dark endpoint", () => {
    expect(densityColor(1)).toEqual([22, 26, 38]);
  });

  it("interpolates linearly at the midpoint", () => {
    const [r, g, b] = densityColor(0.5);
    expect(r).toBe(Math.round((250 + 22) / 2));
    expect(g).toBe(Math.round((250 + 26) / 2));
    expect(b).toBe(Math.round((250 + 38) / 2));
  });

  it("clamps out-of-range densities", () => {
    expect(densityColor(-0.4)).toEqual(densityColor(0));
    expect(densityColor(1.7)).toEqual(densityColor(1));
  });
});

describe("densityImage", () => {
  it("flips rows so y increases upward on screen", () => {
    // field row 0 (bottom) solid, row 1 (top) void
    const projection = {
      values: Float32Array.from([1, 1, 0, 0]),
      width: 2,
      height: 2,
    };
    const rgba = densityImage(projection);
    expect(rgba.length).toBe(2 * 2 * 4);
    // image row 0 is field row 1 (void)
    expect(rgba[0]).toBe(250);
    expect(rgba[1]).toBe(250);
    expect(rgba[2]).toBe(250);
    // image row 1 is field row 0 (solid)
    expect(rgba[8]).toBe(22);
    expect(rgba[9]).toBe(26);
    expect(rgba[10]).toBe(38);
  });

  it("sets alpha to fully opaque everywhere", () => {
    const projection = { values: Float32Array.from([0.3, 0.6]), width: 2, height: 1 };
    const rgba = densityImage(projection);
    expect(rgba[3]).toBe(255);
    expect(rgba[7]).toBe(255);
  });
});
