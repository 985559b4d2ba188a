import { describe, expect, it } from "vitest";

import {
  attemptRows,
  formatNumber,
  gateRows,
  headline,
  metricRows,
  railRows,
} from "../src/results.js";
import type { AttemptJson, EvaluationJson, ResultDocument, Spec } from "../src/types.js";

const SPEC: Spec = {
  domain: { Lx: 10, Ly: 5 },
  mesh: { nx: 10, ny: 5 },
  volume_fraction: 0.5,
  supports: [{ kind: "fixed", edge: "left" }],
  loads: [{ point: [10, 2.5], force: [0, -1] }],
};

function evaluation(overrides: Partial<EvaluationJson> = {}): EvaluationJson {
  return {
    gates: [
      { name: "connectivity", passed: true, value: 1.0, detail: "all solid reached", evaluated: true },
      { name: "compliance_ratio", passed: false, value: 2.4, detail: "worse than best", evaluated: true },
      { name: "convergence", passed: false, value: null, detail: "no history", evaluated: false },
    ],
    metrics: { thin_member_fraction: 0.125, checkerboard_index: 0.0 },
    passed: false,
    partial: true,
    ...overrides,
  };
}

describe("railRows", () => {
  it("orders rejections before adjustments before notes", () => {
    const rows = railRows([
      { rail: "MESH", action: "warned", detail: "coarse mesh" },
      { rail: "VF", action: "clamped", detail: "0.95 -> 0.9" },
      { rail: "LOADS", action: "rejected", detail: "no loads" },
      { rail: "SEED", action: "defaulted", detail: "seed 42" },
    ]);
    expect(rows.map((r) => r.severity)).toEqual(["rejected", "clamped", "defaulted", "warned"]);
    expect(rows[0]!.text).toBe("LOADS: no loads");
  });

  it("treats unknown actions as lowest severity", () => {
    const rows = railRows([
      { rail: "X", action: "mystery", detail: "?" },
      { rail: "Y", action: "warned", detail: "!" },
    ]);
    expect(rows.map((r) => r.severity)).toEqual(["warned", "mystery"]);
  });
});

describe("gateRows", () => {
  it("maps evaluated flags to pass/fail/skipped and formats values", () => {
    const rows = gateRows(evaluation());
    expect(rows[0]).toEqual({
      name: "connectivity",
      status: "pass",
      value: "1",
      detail: "all solid reached",
    });
    expect(rows[1]!.status).toBe("fail");
    expect(rows[1]!.name).toBe("compliance ratio"); // underscores become spaces
    expect(rows[2]!.status).toBe("skipped");
    expect(rows[2]!.value).toBe("-");
  });
});

describe("metricRows", () => {
  it("lists every metric with readable names", () => {
    const rows = metricRows(evaluation());
    expect(rows).toEqual([
      { name: "thin member fraction", value: "0.1250" },
      { name: "checkerboard index", value: "0" },
    ]);
  });
});

describe("attemptRows", () => {
  function attempt(overrides: Partial<AttemptJson>): AttemptJson {
    return {
      index: 0,
      spec: SPEC,
      passed: false,
      compliance: null,
      report: null,
      hint: null,
      error: null,
      ...overrides,
    };
  }

  it("describes each outcome", () => {
    const rows = attemptRows([
      attempt({ index: 0, error: "singular system" }),
      attempt({ index: 1, passed: true, compliance: 64.5 }),
      attempt({ index: 2, report: evaluation(), compliance: 120 }),
      attempt({ index: 3 }),
    ]);
    expect(rows[0]!.label).toBe("attempt 1");
    expect(rows[0]!.outcome).toBe("error: singular system");
    expect(rows[0]!.compliance).toBe("-");
    expect(rows[1]!.outcome).toBe("passed all gates");
    expect(rows[1]!.compliance).toBe("64.50");
    expect(rows[2]!.outcome).toBe("failed: compliance_ratio");
    expect(rows[3]!.outcome).toBe("not evaluated");
  });

  it("spells out the follow-up hint", () => {
    const rows = attemptRows([
      attempt({ hint: { field: "max_iterations", value: 390, reason: "convergence" } }),
    ]);
    expect(rows[0]!.followUp).toBe("rerun with max_iterations = 390 (convergence)");
  });

  it("leaves the follow-up blank without a hint", () => {
    expect(attemptRows([attempt({})])[0]!.followUp).toBe("");
  });
});

describe("headline", () => {
  function doc(overrides: Partial<ResultDocument>): ResultDocument {
    return {
      passed: true,
      controller: "schedule",
      spec: SPEC,
      final_spec: SPEC,
      compliance: 72.13,
      density: null,
      history: null,
      evaluation: null,
      attempts: [],
      rail_log: [],
      timings: {},
      ...overrides,
    };
  }

  it("summarizes verdict, controller, and compliance", () => {
    expect(headline(doc({}))).toBe("PASSED (schedule) C = 72.13");
    expect(headline(doc({ passed: false, controller: "llm", compliance: 191.42 }))).toBe(
      "FAILED (llm) C = 191.4",
    );
  });

  it("notes when no design survived", () => {
    expect(headline(doc({ passed: false, compliance: null }))).toBe("FAILED (schedule) no design");
  });
});

describe("formatNumber", () => {
  it("covers the magnitude branches", () => {
    expect(formatNumber(0)).toBe("0");
    expect(formatNumber(390)).toBe("390");
    expect(formatNumber(0.5)).toBe("0.5000");
    expect(formatNumber(72.1345)).toBe("72.13");
    expect(formatNumber(12345)).toBe("1.235e+4");
    expect(formatNumber(0.0004)).toBe("4.000e-4");
    expect(formatNumber(-0.25)).toBe("-0.2500");
  });
});
