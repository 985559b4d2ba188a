/** Result document -> display rows (pure, rendered by main.ts). */

import type { AttemptJson, EvaluationJson, GateJson, RailEntry, ResultDocument } from "./types.js";

/** Rail-log entries ranked: rejections first, then adjustments, then notes. */
export function railRows(entries: RailEntry[]): Array<{ severity: string; text: string }> {
  const rank: Record<string, number> = { rejected: 0, clamped: 1, adjusted: 1, defaulted: 2, warned: 3 };
  return entries
    .map((e) => ({
      severity: e.action,
      text: `${e.rail}: ${e.detail}`,
      order: rank[e.action] ?? 4,
    }))
    .sort((a, b) => a.order - b.order)
    .map(({ severity, text }) => ({ severity, text }));
}

export interface GateRow {
  name: string;
  status: "pass" | "fail" | "skipped";
  value: string;
  detail: string;
}

export function gateRows(evaluation: EvaluationJson): GateRow[] {
  return evaluation.gates.map((g: GateJson) => ({
    name: g.name.replace(/_/g, " "),
    status: !g.evaluated ? "skipped" : g.passed ? "pass" : "fail",
    value: g.value === null ? "-" : formatNumber(g.value),
    detail: g.detail,
  }));
}

export function metricRows(evaluation: EvaluationJson): Array<{ name: string; value: string }> {
  return Object.entries(evaluation.metrics).map(([name, value]) => ({
    name: name.replace(/_/g, " "),
    value: formatNumber(value),
  }));
}

export interface AttemptRow {
  label: string;
  outcome: string;
  compliance: string;
  followUp: string;
}

/** Audit trail of the retry loop: what each attempt did and what changed. */
export function attemptRows(attempts: AttemptJson[]): AttemptRow[] {
  return attempts.map((a) => {
    let outcome: string;
    if (a.error) outcome = `error: ${a.error}`;
    else if (a.passed) outcome = "passed all gates";
    else if (a.report) {
      const failed = a.report.gates.filter((g) => g.evaluated && !g.passed).map((g) => g.name);
      outcome = failed.length ? `failed: ${failed.join(", ")}` : "failed";
    } else outcome = "not evaluated";
    const followUp = a.hint
      ? `rerun with ${a.hint.field} = ${formatNumber(a.hint.value)} (${a.hint.reason})`
      : "";
    return {
      label: `attempt ${a.index + 1}`,
      outcome,
      compliance: a.compliance === null ? "-" : formatNumber(a.compliance),
      followUp,
    };
  });
}

export function headline(doc: ResultDocument): string {
  const verdict = doc.passed ? "PASSED" : "FAILED";
  const compliance = doc.compliance === null ? "no design" : `C = ${formatNumber(doc.compliance)}`;
  return `${verdict} (${doc.controller}) ${compliance}`;
}

export function formatNumber(v: number): string {
  if (v === 0) return "0";
  const magnitude = Math.abs(v);
  if (magnitude >= 10000 || magnitude < 0.001) return v.toExponential(3);
  if (Number.isInteger(v)) return String(v);
  return v.toPrecision(4);
}
