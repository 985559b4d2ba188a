/** Compliance history chart geometry (SVG polyline points). */

import type { HistoryRecordJson } from "./types.js";

export interface ChartLayout {
  width: number;
  height: number;
  padding: number;
}

export interface ChartData {
  /** "x,y x,y ..." for an SVG <polyline> */
  points: string;
  /** iteration index where the tail phase starts, or null */
  tailStart: number | null;
  yMin: number;
  yMax: number;
}

/** Log-scale compliance polyline; tail-phase records are included so the
 * final sharpening is visible, with the boundary reported for a marker. */
export function complianceChart(records: HistoryRecordJson[], layout: ChartLayout): ChartData {
  if (records.length === 0) {
    return { points: "", tailStart: null, yMin: 0, yMax: 0 };
  }
  const values = records.map((r) => Math.max(r.compliance, 1e-30));
  const logs = values.map(Math.log10);
  let lo = Math.min(...logs);
  let hi = Math.max(...logs);
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const { width, height, padding } = layout;
  const spanX = Math.max(records.length - 1, 1);
  const pts = logs.map((lv, i) => {
    const x = padding + ((width - 2 * padding) * i) / spanX;
    const y = height - padding - ((height - 2 * padding) * (lv - lo)) / (hi - lo);
    return `${round2(x)},${round2(y)}`;
  });
  const tailIndex = records.findIndex((r) => r.phase === "tail");
  return {
    points: pts.join(" "),
    tailStart: tailIndex === -1 ? null : tailIndex,
    yMin: 10 ** lo,
    yMax: 10 ** hi,
  };
}

function round2(v: number): number {
  return Math.round(v * 100) / 100;
}
