// Mirrors of the trial service's resources. The UI renders these verbatim;
// every number shown to the user originates from a service response.

export interface Recommendation {
  cohort_number: number;
  dose: number;
  cohort_size: number;
}

export interface SessionState {
  n: number[];
  y: number[];
  current_dose: number;
  cohort_index: number;
}

export interface ScheduleView {
  mode: "unequal" | "fixed";
  n: number;
  cohort: number | null;
  sizes: number[];
}

export interface SessionEvent {
  seq: number;
  kind: "created" | "cohort-recorded" | "finalized";
  payload: Record<string, unknown>;
  timestamp: string;
}

export interface SessionView {
  id: string;
  status: "awaiting-cohort" | "complete";
  design: Record<string, unknown>;
  schedule: ScheduleView;
  state: SessionState;
  recommendation: Recommendation | null;
  selected_mtd: number | null;
  created_at: string;
  updated_at: string;
  last_seq: number;
  history?: SessionEvent[];
}

export interface WhatIfPreview {
  dlt: number;
  cohort_dose: number;
  cohort_size: number;
  would_complete: boolean;
  selected_mtd: number | null;
  next_dose: number | null;
}

export interface NewSessionForm {
  design: "crm" | "keyboard";
  target: string;
  skeleton: string; // comma-separated, CRM only
  interval_lower: string; // keyboard only
  interval_upper: string;
  doses: string; // keyboard only
  schedule_mode: "unequal" | "fixed";
  n: string;
  cohort: string; // fixed mode only
}

export interface SessionRequest {
  design: Record<string, unknown>;
  schedule: Record<string, unknown>;
}
