/** Geometry for the interactive spec preview.
 *
 * Everything here is pure data-in data-out so the drag/snap behavior is
 * testable without a canvas; main.ts only draws the shapes this module
 * computes. World coordinates follow the solver (y up), screen follows the
 * canvas (y down).
 */

import type { LoadSpec, Spec, SupportSpec } from "./types.js";

export interface ViewTransform {
  scale: number; // pixels per world unit
  ox: number; // screen x of world x = 0
  oy: number; // screen y of world y = 0 (the domain bottom)
  Ly: number;
}

export function fitTransform(
  spec: Spec,
  canvasWidth: number,
  canvasHeight: number,
  pad = 40,
): ViewTransform {
  const { Lx, Ly } = spec.domain;
  const scale = Math.min((canvasWidth - 2 * pad) / Lx, (canvasHeight - 2 * pad) / Ly);
  const ox = (canvasWidth - scale * Lx) / 2;
  const oy = (canvasHeight + scale * Ly) / 2;
  return { scale, ox, oy, Ly };
}

export function worldToScreen(t: ViewTransform, x: number, y: number): [number, number] {
  return [t.ox + t.scale * x, t.oy - t.scale * y];
}

export function screenToWorld(t: ViewTransform, sx: number, sy: number): [number, number] {
  return [(sx - t.ox) / t.scale, (t.oy - sy) / t.scale];
}

/** Nearest mesh node in world coordinates, clamped into the domain. */
export function snapToNode(spec: Spec, x: number, y: number): [number, number] {
  const hx = spec.domain.Lx / spec.mesh.nx;
  const hy = spec.domain.Ly / spec.mesh.ny;
  const ix = Math.min(spec.mesh.nx, Math.max(0, Math.round(x / hx)));
  const iy = Math.min(spec.mesh.ny, Math.max(0, Math.round(y / hy)));
  return [ix * hx, iy * hy];
}

export interface LoadMarker {
  index: number;
  tip: [number, number]; // screen position of the application point
  tail: [number, number]; // arrow start, opposite the force direction
  label: string;
}

const ARROW_PIXELS = 36;

export function loadMarkers(spec: Spec, t: ViewTransform): LoadMarker[] {
  const markers: LoadMarker[] = [];
  spec.loads.forEach((load, index) => {
    if (!load.point || !load.force) return; // edge pressures are drawn as bands
    const [px, py] = load.point;
    const tip = worldToScreen(t, px ?? 0, py ?? 0);
    const [fx, fy] = [load.force[0] ?? 0, load.force[1] ?? 0];
    const norm = Math.hypot(fx, fy) || 1;
    // screen y grows downward, so the world force y flips sign
    const tail: [number, number] = [
      tip[0] - (ARROW_PIXELS * fx) / norm,
      tip[1] + (ARROW_PIXELS * fy) / norm,
    ];
    markers.push({ index, tip, tail, label: formatForce(load) });
  });
  return markers;
}

function formatForce(load: LoadSpec): string {
  const comps = (load.force ?? []).map((v) => v.toFixed(2)).join(", ");
  return `(${comps})`;
}

/** Index of the load marker whose tip is within `radius` pixels, else null. */
export function hitTestLoads(
  markers: LoadMarker[],
  sx: number,
  sy: number,
  radius = 12,
): number | null {
  let best: number | null = null;
  let bestDist = radius;
  for (const m of markers) {
    const d = Math.hypot(m.tip[0] - sx, m.tip[1] - sy);
    if (d <= bestDist) {
      best = m.index;
      bestDist = d;
    }
  }
  return best;
}

/** New spec with load `index` moved to the node nearest the world point. */
export function moveLoad(spec: Spec, index: number, x: number, y: number): Spec {
  const snapped = snapToNode(spec, x, y);
  const loads = spec.loads.map((load, i) => {
    if (i !== index || !load.point) return load;
    const point =
      load.point.length === 3 ? [snapped[0], snapped[1], load.point[2] ?? 0] : [...snapped];
    return { ...load, point };
  });
  return { ...spec, loads };
}

/** New spec with one force component of load `index` replaced. */
export function setLoadForce(spec: Spec, index: number, axis: number, value: number): Spec {
  const loads = spec.loads.map((load, i) => {
    if (i !== index || !load.force) return load;
    const force = [...load.force];
    force[axis] = value;
    return { ...load, force };
  });
  return { ...spec, loads };
}

export function clampVolumeFraction(v: number): number {
  if (Number.isNaN(v)) return 0.5;
  return Math.min(0.9, Math.max(0.1, v));
}

export function setVolumeFraction(spec: Spec, v: number): Spec {
  return { ...spec, volume_fraction: clampVolumeFraction(v) };
}

export interface SupportMarker {
  kind: string;
  /** hatch line segments in screen coordinates */
  segments: Array<[number, number, number, number]>;
}

const EDGE_ENDPOINTS: Record<string, (Lx: number, Ly: number) => [number, number, number, number]> = {
  left: (_Lx, Ly) => [0, 0, 0, Ly],
  right: (Lx, Ly) => [Lx, 0, Lx, Ly],
  bottom: (Lx) => [0, 0, Lx, 0],
  top: (Lx, Ly) => [0, Ly, Lx, Ly],
};

export function supportMarkers(spec: Spec, t: ViewTransform, hatches = 9): SupportMarker[] {
  const { Lx, Ly } = spec.domain;
  const out: SupportMarker[] = [];
  for (const support of spec.supports) {
    const segments: Array<[number, number, number, number]> = [];
    if (support.edge && EDGE_ENDPOINTS[support.edge]) {
      const [x0, y0, x1, y1] = EDGE_ENDPOINTS[support.edge]!(Lx, Ly);
      for (let i = 0; i < hatches; i++) {
        const f = hatches === 1 ? 0.5 : i / (hatches - 1);
        const [sx, sy] = worldToScreen(t, x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        segments.push([sx, sy, sx - 8, sy + 8]);
      }
    } else if (support.point) {
      const [sx, sy] = worldToScreen(t, support.point[0] ?? 0, support.point[1] ?? 0);
      segments.push([sx - 7, sy + 9, sx, sy], [sx, sy, sx + 7, sy + 9]);
    }
    out.push({ kind: support.kind, segments });
  }
  return out;
}

/** Passive regions as screen shapes for the preview underlay. */
export type RegionShape =
  | { kind: "circle"; fill: string; cx: number; cy: number; r: number }
  | { kind: "rect"; fill: string; x: number; y: number; w: number; h: number };

export function regionShapes(spec: Spec, t: ViewTransform): RegionShape[] {
  const out: RegionShape[] = [];
  for (const region of spec.passive_regions ?? []) {
    if (region.shape === "circle" && region.center && region.radius) {
      const [cx, cy] = worldToScreen(t, region.center[0] ?? 0, region.center[1] ?? 0);
      out.push({ kind: "circle", fill: region.fill, cx, cy, r: region.radius * t.scale });
    } else if (region.shape === "rectangle" && region.min_corner && region.max_corner) {
      const [x0, y0] = worldToScreen(t, region.min_corner[0] ?? 0, region.max_corner[1] ?? 0);
      const w = ((region.max_corner[0] ?? 0) - (region.min_corner[0] ?? 0)) * t.scale;
      const h = ((region.max_corner[1] ?? 0) - (region.min_corner[1] ?? 0)) * t.scale;
      out.push({ kind: "rect", fill: region.fill, x: x0, y: y0, w, h });
    }
  }
  return out;
}
