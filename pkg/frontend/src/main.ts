/** DOM wiring for the five-stage workflow. All logic lives in the pure
 * modules; this file only moves data between them and the page. */

import { ApiClient, ApiError } from "./api.js";
import { complianceChart } from "./charts.js";
import { decodeFrame, meanProjection, type DecodedFrame, type ProjectionAxis } from "./frames.js";
import { densityImage } from "./heatmap.js";
import {
  attemptRows,
  gateRows,
  headline,
  metricRows,
  railRows,
} from "./results.js";
import {
  fitTransform,
  hitTestLoads,
  loadMarkers,
  moveLoad,
  regionShapes,
  screenToWorld,
  setLoadForce,
  setVolumeFraction,
  supportMarkers,
} from "./specview.js";
import {
  POLL_INTERVAL_MS,
  initialState,
  jobStatusSeen,
  loadSettings,
  reset,
  saveSettings,
  solveSubmitted,
  specConfigured,
  specEdited,
  type AppState,
  type Settings,
} from "./state.js";
import type { Frame, RailEntry, ResultDocument, Spec } from "./types.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

let state: AppState = initialState();
let settings: Settings = loadSettings(window.localStorage);
let client = new ApiClient(settings.baseUrl);
let pollTimer: number | null = null;
let dragIndex: number | null = null;
let lastFrame: Frame | null = null;
let resultDoc: ResultDocument | null = null;
let projectionAxis: ProjectionAxis = "z";

function setStage(stage: AppState["stage"]): void {
  for (const s of ["prompt", "review", "solving", "results"]) {
    $(`stage-${s}`).classList.toggle("active", s === stage);
  }
}

function render(): void {
  setStage(state.stage);
  if (state.spec && state.stage === "review") drawSpecPreview(state.spec);
  $("status-line").textContent = state.error ?? "";
}

// --- stage 1: prompt + settings ---

function bindSettings(): void {
  const baseUrl = $<HTMLInputElement>("setting-base-url");
  const controller = $<HTMLSelectElement>("setting-controller");
  const retries = $<HTMLInputElement>("setting-retries");
  baseUrl.value = settings.baseUrl;
  controller.value = settings.controller;
  retries.value = String(settings.retries);
  const update = () => {
    settings = {
      baseUrl: baseUrl.value.trim(),
      controller: controller.value,
      retries: Math.max(0, Number(retries.value) || 0),
    };
    saveSettings(window.localStorage, settings);
    client = new ApiClient(settings.baseUrl);
  };
  baseUrl.addEventListener("change", update);
  controller.addEventListener("change", update);
  retries.addEventListener("change", update);
}

async function onConfigure(): Promise<void> {
  const prompt = $<HTMLTextAreaElement>("prompt-input").value.trim();
  if (!prompt) return;
  $("configure-button").setAttribute("disabled", "true");
  try {
    const resp = await client.configure(prompt);
    state = specConfigured(state, resp.spec);
    renderRailLog(resp.rail_log);
    bindSpecFields(resp.spec);
  } catch (err) {
    state = { ...state, error: describeError(err) };
  } finally {
    $("configure-button").removeAttribute("disabled");
    render();
  }
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  return err instanceof Error ? err.message : String(err);
}

// --- stage 2: review (rail log + interactive preview + editable fields) ---

function renderRailLog(entries: RailEntry[]): void {
  const list = $("rail-log");
  list.innerHTML = "";
  if (entries.length === 0) {
    list.innerHTML = "<li class='quiet'>no interventions: the spec was used as provided</li>";
    return;
  }
  for (const row of railRows(entries)) {
    const item = document.createElement("li");
    item.className = `rail-${row.severity}`;
    item.textContent = row.text;
    list.appendChild(item);
  }
}

function bindSpecFields(spec: Spec): void {
  const vf = $<HTMLInputElement>("vf-slider");
  vf.value = String(spec.volume_fraction);
  $("vf-value").textContent = spec.volume_fraction.toFixed(2);
  const iters = $<HTMLInputElement>("iters-input");
  iters.value = String(spec.solve?.max_iterations ?? 300);
}

function currentCanvasTransform(spec: Spec) {
  const canvas = $<HTMLCanvasElement>("preview-canvas");
  return fitTransform(spec, canvas.width, canvas.height);
}

function drawSpecPreview(spec: Spec): void {
  const canvas = $<HTMLCanvasElement>("preview-canvas");
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const t = currentCanvasTransform(spec);
  ctx.clearRect(0, 0, canvas.width, canvas.height);

  // domain outline
  ctx.strokeStyle = "#47506b";
  ctx.lineWidth = 1.5;
  const [x0, y0] = [t.ox, t.oy - t.scale * spec.domain.Ly];
  ctx.strokeRect(x0, y0, t.scale * spec.domain.Lx, t.scale * spec.domain.Ly);

  for (const region of regionShapes(spec, t)) {
    ctx.fillStyle = region.fill === "void" ? "#f3f4f8" : "#9aa3bd";
    if (region.kind === "circle") {
      ctx.beginPath();
      ctx.arc(region.cx, region.cy, region.r, 0, 2 * Math.PI);
      ctx.fill();
      ctx.stroke();
    } else {
      ctx.fillRect(region.x, region.y, region.w, region.h);
    }
  }

  ctx.strokeStyle = "#2c6e49";
  ctx.lineWidth = 1.2;
  for (const support of supportMarkers(spec, t)) {
    for (const [ax, ay, bx, by] of support.segments) {
      ctx.beginPath();
      ctx.moveTo(ax, ay);
      ctx.lineTo(bx, by);
      ctx.stroke();
    }
  }

  ctx.strokeStyle = "#b3261e";
  ctx.fillStyle = "#b3261e";
  ctx.lineWidth = 2;
  for (const marker of loadMarkers(spec, t)) {
    ctx.beginPath();
    ctx.moveTo(marker.tail[0], marker.tail[1]);
    ctx.lineTo(marker.tip[0], marker.tip[1]);
    ctx.stroke();
    ctx.beginPath();
    ctx.arc(marker.tip[0], marker.tip[1], 5, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillText(marker.label, marker.tip[0] + 8, marker.tip[1] - 8);
  }
}

function bindPreviewInteraction(): void {
  const canvas = $<HTMLCanvasElement>("preview-canvas");
  canvas.addEventListener("mousedown", (ev) => {
    if (!state.spec) return;
    const rect = canvas.getBoundingClientRect();
    const t = currentCanvasTransform(state.spec);
    dragIndex = hitTestLoads(
      loadMarkers(state.spec, t),
      ev.clientX - rect.left,
      ev.clientY - rect.top,
    );
  });
  canvas.addEventListener("mousemove", (ev) => {
    if (dragIndex === null || !state.spec) return;
    const rect = canvas.getBoundingClientRect();
    const t = currentCanvasTransform(state.spec);
    const [wx, wy] = screenToWorld(t, ev.clientX - rect.left, ev.clientY - rect.top);
    state = specEdited(state, moveLoad(state.spec, dragIndex, wx, wy));
    drawSpecPreview(state.spec!);
  });
  const stopDrag = () => {
    dragIndex = null;
  };
  canvas.addEventListener("mouseup", stopDrag);
  canvas.addEventListener("mouseleave", stopDrag);

  $<HTMLInputElement>("vf-slider").addEventListener("input", (ev) => {
    if (!state.spec) return;
    const value = Number((ev.target as HTMLInputElement).value);
    state = specEdited(state, setVolumeFraction(state.spec, value));
    $("vf-value").textContent = state.spec!.volume_fraction.toFixed(2);
  });
  $<HTMLInputElement>("iters-input").addEventListener("change", (ev) => {
    if (!state.spec) return;
    const value = Math.max(0, Number((ev.target as HTMLInputElement).value) || 0);
    const solve = { max_iterations: value, seed: state.spec.solve?.seed ?? 42 };
    state = specEdited(state, { ...state.spec, solve });
  });
  $<HTMLInputElement>("force-x").addEventListener("change", () => applyForceEdit(0));
  $<HTMLInputElement>("force-y").addEventListener("change", () => applyForceEdit(1));
}

function applyForceEdit(axis: number): void {
  if (!state.spec) return;
  const input = $<HTMLInputElement>(axis === 0 ? "force-x" : "force-y");
  const value = Number(input.value);
  if (!Number.isFinite(value)) return;
  const index = state.spec.loads.findIndex((l) => l.point && l.force);
  if (index === -1) return;
  state = specEdited(state, setLoadForce(state.spec, index, axis, value));
  drawSpecPreview(state.spec!);
}

// --- stage 3: solving (poll + live heatmap) ---

async function onSolve(): Promise<void> {
  if (!state.spec) return;
  try {
    const resp = await client.solve(state.spec, settings.controller, settings.retries, 2);
    state = solveSubmitted(state, resp.job_id);
    render();
    pollTimer = window.setInterval(() => void pollJob(), POLL_INTERVAL_MS);
  } catch (err) {
    state = { ...state, error: describeError(err) };
    render();
  }
}

async function pollJob(): Promise<void> {
  const jobId = state.jobId;
  if (!jobId) return;
  try {
    const poll = await client.jobStatus(jobId);
    state = jobStatusSeen(state, poll.status, poll.error);
    if ("iteration" in poll.progress) {
      const p = poll.progress;
      $("solve-progress").textContent =
        `iter ${p.iteration} [${p.phase}] C=${p.compliance.toFixed(4)} ` +
        `gray=${p.grayness.toFixed(3)} change=${p.change.toFixed(4)} ` +
        `p=${p.params.p.toFixed(2)} beta=${p.params.beta}`;
    }
    if (poll.frame) {
      lastFrame = poll.frame;
      drawDensity(poll.frame, "live-canvas");
    }
    if (poll.status === "done" || poll.status === "failed") {
      stopPolling();
      if (poll.status === "done") await showResult(jobId);
      render();
    }
  } catch (err) {
    stopPolling();
    state = { ...state, error: describeError(err) };
    render();
  }
}

function stopPolling(): void {
  if (pollTimer !== null) {
    window.clearInterval(pollTimer);
    pollTimer = null;
  }
}

function drawDensity(frame: Frame, canvasId: string): void {
  const decoded = decodeFrame(frame);
  const axisRow = $("projection-controls");
  axisRow.style.display = decoded.nz > 1 ? "flex" : "none";
  const field = meanProjection(decoded, decoded.nz > 1 ? projectionAxis : "z");
  const canvas = $<HTMLCanvasElement>(canvasId);
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const image = new ImageData(densityImage(field), field.width, field.height);
  // draw at native resolution, then scale up with crisp pixels
  const off = document.createElement("canvas");
  off.width = field.width;
  off.height = field.height;
  off.getContext("2d")!.putImageData(image, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const scale = Math.min(canvas.width / field.width, canvas.height / field.height);
  ctx.drawImage(
    off,
    0,
    0,
    field.width,
    field.height,
    (canvas.width - field.width * scale) / 2,
    (canvas.height - field.height * scale) / 2,
    field.width * scale,
    field.height * scale,
  );
}

// --- stage 4: results ---

async function showResult(jobId: string): Promise<void> {
  try {
    resultDoc = await client.jobResult(jobId);
  } catch (err) {
    state = { ...state, error: describeError(err) };
    return;
  }
  $("result-headline").textContent = headline(resultDoc);
  const gates = $("gate-table");
  gates.innerHTML = "";
  if (resultDoc.evaluation) {
    for (const row of gateRows(resultDoc.evaluation)) {
      const tr = document.createElement("tr");
      tr.className = `gate-${row.status}`;
      tr.innerHTML = `<td>${row.name}</td><td>${row.status}</td><td>${row.value}</td><td>${row.detail}</td>`;
      gates.appendChild(tr);
    }
    const metrics = $("metric-list");
    metrics.innerHTML = "";
    for (const row of metricRows(resultDoc.evaluation)) {
      const li = document.createElement("li");
      li.textContent = `${row.name}: ${row.value}`;
      metrics.appendChild(li);
    }
  }
  const attempts = $("attempt-list");
  attempts.innerHTML = "";
  for (const row of attemptRows(resultDoc.attempts)) {
    const li = document.createElement("li");
    li.textContent = `${row.label}: ${row.outcome} (compliance ${row.compliance})` +
      (row.followUp ? ` -> ${row.followUp}` : "");
    attempts.appendChild(li);
  }
  if (resultDoc.history) {
    const chart = complianceChart(resultDoc.history.records, {
      width: 640,
      height: 200,
      padding: 24,
    });
    document.getElementById("history-line")?.setAttribute("points", chart.points);
    $("history-range").textContent =
      `compliance ${chart.yMin.toPrecision(3)} .. ${chart.yMax.toPrecision(3)} (log scale)`;
  }
  if (lastFrame) drawDensity(lastFrame, "result-canvas");
}

// --- boot ---

function bindProjectionControls(): void {
  for (const axis of ["x", "y", "z"] as const) {
    $(`project-${axis}`).addEventListener("click", () => {
      projectionAxis = axis;
      if (lastFrame) {
        drawDensity(lastFrame, state.stage === "results" ? "result-canvas" : "live-canvas");
      }
    });
  }
}

export function boot(): void {
  bindSettings();
  bindPreviewInteraction();
  bindProjectionControls();
  $("configure-button").addEventListener("click", () => void onConfigure());
  $("solve-button").addEventListener("click", () => void onSolve());
  $("reset-button").addEventListener("click", () => {
    stopPolling();
    state = reset(state);
    resultDoc = null;
    lastFrame = null;
    render();
  });
  render();
}

boot();
