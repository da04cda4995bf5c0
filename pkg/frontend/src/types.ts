// JSON shapes of the engine API (see docs/api.md in the repository root).

export type IntentClass = 'YES' | 'NO' | 'OTHER';
export type EscalationReason = 'SYMPTOMATIC' | 'UNCERTAIN' | 'INCOMPLETE';
export type ReviewStatus = 'PENDING' | 'REVIEWED';
export type Verdict = 'CONFIRM_SYMPTOMATIC' | 'OVERRIDE_CLEAR';

export interface TranscriptRow {
  seq: number;
  speaker: 'SYSTEM' | 'CALLEE';
  text: string;
  ts: string;
  class: IntentClass | null;
  p_top1: number | null;
}

export interface EscalationRecord {
  record_id: string;
  session_id: string;
  subject_id: string;
  reason: EscalationReason;
  created_at: string;
  review_status: ReviewStatus;
  transcript: TranscriptRow[];
}

export interface ReviewRequest {
  operator_id: string;
  verdict: Verdict;
  labels: Array<[number, IntentClass]>;
}

export interface ReviewResponse {
  record_id: string;
  review_status: ReviewStatus;
  labels_emitted: number;
  lexicon_version: number;
}

export interface BatchItem {
  text: string;
  ts: string;
  p_top1: number;
  uncertainty: number;
  top1: IntentClass;
  session_id: string;
  seq: number;
  question_key: string;
}

export interface BatchResponse {
  items: BatchItem[];
  lexicon_version: number;
}

export interface LabelsResponse {
  version: number;
  examples_added: number;
}

export interface MetricsReport {
  period: [string, string];
  total_turns: number;
  fn_count: number;
  fp_count: number;
  fn_ratio: number;
  fp_ratio: number;
  calls_total: number;
  hangup_rate: number;
  failure_rate: number;
  escalations: number;
}

export interface PosteriorResult {
  p_T1: number;
  q_mean: number;
  q_ci: [number, number];
  z_post: Record<string, number>;
  point_mass: number;
  grid_size: number;
  q_grid: number[];
  q_density: number[];
}

export interface SpreadRequest {
  observations: Array<{
    id: string;
    features: Record<string, number>;
    confirmed?: boolean;
  }>;
  prior?: { pi_T: number; alpha: number; beta: number };
  G?: number;
}
