/** JSON contracts of the HTTP service, mirrored field for field. */

export interface DomainDims {
  Lx: number;
  Ly: number;
  Lz?: number;
}

export interface MeshDims {
  nx: number;
  ny: number;
  nz?: number;
}

export interface SupportSpec {
  kind: string;
  edge?: string;
  point?: number[];
}

export interface LoadSpec {
  point?: number[];
  force?: number[];
  edge?: string;
  pressure?: number;
}

export interface PassiveRegionSpec {
  shape: string;
  fill: string;
  center?: number[];
  radius?: number;
  min_corner?: number[];
  max_corner?: number[];
}

export interface Spec {
  domain: DomainDims;
  mesh: MeshDims;
  volume_fraction: number;
  supports: SupportSpec[];
  loads: LoadSpec[];
  passive_regions?: PassiveRegionSpec[];
  material?: Record<string, number>;
  solve?: { max_iterations: number; seed: number };
}

export interface RailEntry {
  rail: string;
  action: string;
  detail: string;
}

export interface Frame {
  data: string; // base64 little-endian float32, canonical element order
  nx: number;
  ny: number;
  nz?: number;
}

export interface ControlParamsJson {
  p: number;
  beta: number;
  r_min: number;
  delta: number;
}

export interface ProgressSnapshot {
  iteration: number;
  phase: string;
  compliance: number;
  volume: number;
  grayness: number;
  change: number;
  params: ControlParamsJson;
}

export type JobStatus = "queued" | "running" | "tail" | "done" | "failed";

export interface JobPoll {
  job_id: string;
  status: JobStatus;
  progress: ProgressSnapshot | Record<string, never>;
  frame: Frame | null;
  error?: string;
}

export interface GateJson {
  name: string;
  passed: boolean;
  value: number | null;
  detail: string;
  evaluated: boolean;
}

export interface EvaluationJson {
  gates: GateJson[];
  metrics: Record<string, number>;
  passed: boolean;
  partial: boolean;
}

export interface HistoryRecordJson {
  iteration: number;
  phase: string;
  compliance: number;
  volume: number;
  grayness: number;
  change: number;
  params: ControlParamsJson;
}

export interface AttemptJson {
  index: number;
  spec: Spec;
  passed: boolean;
  compliance: number | null;
  report: EvaluationJson | null;
  hint: { field: string; value: number; reason: string } | null;
  error: string | null;
}

export interface ResultDocument {
  passed: boolean;
  controller: string;
  spec: Spec;
  final_spec: Spec | null;
  compliance: number | null;
  density: number[] | null;
  history: {
    records: HistoryRecordJson[];
    early_exit: boolean;
    functional_convergence: boolean;
  } | null;
  evaluation: EvaluationJson | null;
  attempts: AttemptJson[];
  rail_log: RailEntry[];
  timings: Record<string, unknown>;
}

export interface ConfigureResponse {
  spec: Spec;
  rail_log: RailEntry[];
}
