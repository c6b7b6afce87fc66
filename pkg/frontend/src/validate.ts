import type { NewSessionForm, SessionRequest } from "./types.js";

// Client-side mirror of the service's create-session validation: catches the
// obvious mistakes before any request is sent. The service remains the
// authority; anything it rejects is surfaced inline per field.

export type FieldErrors = Partial<Record<string, string>>;

export interface ValidationResult {
  errors: FieldErrors;
  request: SessionRequest | null;
}

function parseProbability(text: string): number | null {
  const value = Number(text.trim());
  if (!Number.isFinite(value) || value <= 0 || value >= 1) return null;
  return value;
}

function parsePositiveInt(text: string): number | null {
  const value = Number(text.trim());
  if (!Number.isInteger(value) || value < 1) return null;
  return value;
}

export function parseSkeleton(text: string): number[] | null {
  const parts = text.split(",").map((p) => p.trim()).filter((p) => p.length > 0);
  if (parts.length === 0) return null;
  const values: number[] = [];
  for (const part of parts) {
    const p = parseProbability(part);
    if (p === null) return null;
    values.push(p);
  }
  for (let i = 1; i < values.length; i++) {
    if (values[i] <= values[i - 1]) return null;
  }
  return values;
}

export function validateNewSession(form: NewSessionForm): ValidationResult {
  const errors: FieldErrors = {};
  const target = parseProbability(form.target);
  if (target === null) errors.target = "target must be a probability strictly between 0 and 1";
  const n = parsePositiveInt(form.n);
  if (n === null) errors.n = "total patients must be a positive integer";

  const design: Record<string, unknown> = { design: form.design, target };
  if (form.design === "crm") {
    const skeleton = parseSkeleton(form.skeleton);
    if (skeleton === null) {
      errors.skeleton =
        "skeleton must be comma-separated probabilities, strictly increasing, each in (0, 1)";
    } else {
      design.skeleton = skeleton;
    }
  } else {
    const lower = parseProbability(form.interval_lower);
    const upper = parseProbability(form.interval_upper);
    if (lower === null || upper === null || lower >= upper) {
      errors.interval = "interval needs 0 < lower < upper < 1";
    } else {
      design.interval = [lower, upper];
      if (target !== null && (target < lower || target > upper)) {
        errors.target = "target must lie inside the dosing interval";
      }
    }
    const doses = parsePositiveInt(form.doses);
    if (doses === null) errors.doses = "dose count must be a positive integer";
    else design.doses = doses;
  }

  const schedule: Record<string, unknown> = { mode: form.schedule_mode, n };
  if (form.schedule_mode === "fixed") {
    const cohort = parsePositiveInt(form.cohort);
    if (cohort === null) errors.cohort = "fixed cohort size must be a positive integer";
    else schedule.cohort = cohort;
  }

  if (Object.keys(errors).length > 0) return { errors, request: null };
  return { errors: {}, request: { design, schedule } };
}

export function validateDltCount(text: string, cohortSize: number): string | null {
  const value = Number(text.trim());
  if (!Number.isInteger(value) || value < 0 || value > cohortSize) {
    return `DLT count must be an integer between 0 and ${cohortSize}`;
  }
  return null;
}
