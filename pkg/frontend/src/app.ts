import { ApiError, TrialApi } from "./api.js";
import type { NewSessionForm, SessionView, WhatIfPreview } from "./types.js";
import { validateDltCount, validateNewSession } from "./validate.js";
import {
  renderApiError,
  renderDoseLadder,
  renderHistory,
  renderRecommendation,
  renderScheduleChips,
  renderWhatIfTable,
} from "./views.js";

// Single-page wiring. The page shows server-confirmed state only: inputs are
// disabled while a request is in flight and every update re-renders from the
// service's response (no optimistic UI in a clinical context).

declare global {
  interface Window {
    DOSEWISE_API?: string;
  }
}

function defaultApiBase(): string {
  return (
    window.DOSEWISE_API ??
    localStorage.getItem("dosewise_api_base") ??
    "http://127.0.0.1:8411"
  );
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

let api = new TrialApi(defaultApiBase());
let current: SessionView | null = null;
let busy = false;

function readForm(): NewSessionForm {
  return {
    design: (el<HTMLSelectElement>("design")).value as "crm" | "keyboard",
    target: el<HTMLInputElement>("target").value,
    skeleton: el<HTMLInputElement>("skeleton").value,
    interval_lower: el<HTMLInputElement>("interval-lower").value,
    interval_upper: el<HTMLInputElement>("interval-upper").value,
    doses: el<HTMLInputElement>("doses").value,
    schedule_mode: (el<HTMLSelectElement>("schedule-mode")).value as "unequal" | "fixed",
    n: el<HTMLInputElement>("total-n").value,
    cohort: el<HTMLInputElement>("fixed-cohort").value,
  };
}

function showFormErrors(errors: Record<string, string | undefined>): void {
  for (const field of ["target", "skeleton", "interval", "doses", "n", "cohort"]) {
    const node = document.getElementById(`err-${field}`);
    if (node) node.textContent = errors[field] ?? "";
  }
}

function setBusy(value: boolean): void {
  busy = value;
  el<HTMLButtonElement>("record-btn").disabled = value || current?.status === "complete";
  el<HTMLButtonElement>("create-btn").disabled = value;
}

function showError(error: unknown): void {
  const box = el<HTMLDivElement>("error-box");
  if (error instanceof ApiError) {
    box.innerHTML = renderApiError(error);
    if (error.kind === "conflict" && current) {
      void refreshSession();
    }
  } else {
    box.textContent = String(error);
  }
}

function clearError(): void {
  el<HTMLDivElement>("error-box").innerHTML = "";
}

async function renderSession(session: SessionView): Promise<void> {
  current = session;
  el<HTMLDivElement>("session-panel").style.display = "block";
  el<HTMLSpanElement>("session-id").textContent = session.id;
  el<HTMLDivElement>("chips").innerHTML = renderScheduleChips(session);
  el<HTMLDivElement>("ladder").innerHTML = renderDoseLadder(session);
  el<HTMLDivElement>("recommendation").innerHTML = renderRecommendation(session);
  el<HTMLDivElement>("history").innerHTML = renderHistory(session.history ?? []);
  const dltInput = el<HTMLInputElement>("dlt-count");
  const recordBtn = el<HTMLButtonElement>("record-btn");
  const awaiting = session.status === "awaiting-cohort";
  dltInput.disabled = !awaiting || busy;
  recordBtn.disabled = !awaiting || busy;
  el<HTMLDivElement>("whatif").innerHTML = "";
  if (awaiting && session.recommendation) {
    dltInput.max = String(session.recommendation.cohort_size);
    await renderWhatIf(session);
  }
}

async function renderWhatIf(session: SessionView): Promise<void> {
  const size = session.recommendation?.cohort_size ?? 0;
  const previews: WhatIfPreview[] = [];
  for (let k = 0; k <= size; k++) {
    previews.push(await api.whatIf(session.id, k));
  }
  el<HTMLDivElement>("whatif").innerHTML = renderWhatIfTable(previews);
}

async function refreshSession(): Promise<void> {
  if (!current) return;
  try {
    await renderSession(await api.getSession(current.id));
    clearError();
  } catch (error) {
    showError(error);
  }
}

async function onCreate(): Promise<void> {
  clearError();
  const { errors, request } = validateNewSession(readForm());
  showFormErrors(errors);
  if (!request) return; // invalid form: nothing is sent
  setBusy(true);
  try {
    await renderSession(await api.createSession(request));
  } catch (error) {
    showError(error);
  } finally {
    setBusy(false);
  }
}

async function onRecord(): Promise<void> {
  if (!current || busy) return;
  clearError();
  const size = current.recommendation?.cohort_size ?? 0;
  const text = el<HTMLInputElement>("dlt-count").value;
  const problem = validateDltCount(text, size);
  if (problem) {
    el<HTMLDivElement>("error-box").innerHTML =
      `<div class="error validation">${problem}</div>`;
    return; // blocked client-side
  }
  setBusy(true);
  try {
    const updated = await api.recordCohort(current.id, Number(text));
    const full = await api.getSession(updated.id); // pick up history
    await renderSession(full);
    el<HTMLInputElement>("dlt-count").value = "";
  } catch (error) {
    showError(error);
  } finally {
    setBusy(false);
  }
}

function onDesignChange(): void {
  const design = el<HTMLSelectElement>("design").value;
  el<HTMLDivElement>("crm-fields").style.display = design === "crm" ? "block" : "none";
  el<HTMLDivElement>("keyboard-fields").style.display =
    design === "keyboard" ? "block" : "none";
}

function onScheduleModeChange(): void {
  const mode = el<HTMLSelectElement>("schedule-mode").value;
  el<HTMLDivElement>("fixed-fields").style.display = mode === "fixed" ? "block" : "none";
}

export function boot(): void {
  const baseInput = el<HTMLInputElement>("api-base");
  baseInput.value = api.base;
  baseInput.addEventListener("change", () => {
    api = new TrialApi(baseInput.value.replace(/\/$/, ""));
    localStorage.setItem("dosewise_api_base", api.base);
  });
  el<HTMLSelectElement>("design").addEventListener("change", onDesignChange);
  el<HTMLSelectElement>("schedule-mode").addEventListener("change", onScheduleModeChange);
  el<HTMLButtonElement>("create-btn").addEventListener("click", () => void onCreate());
  el<HTMLButtonElement>("record-btn").addEventListener("click", () => void onRecord());
  el<HTMLButtonElement>("refresh-btn").addEventListener("click", () => void refreshSession());
  onDesignChange();
  onScheduleModeChange();
}

if (typeof document !== "undefined" && document.getElementById("create-btn")) {
  boot();
}
