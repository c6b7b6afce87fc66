import type { ApiError } from "./api.js";
import type { SessionEvent, SessionView, WhatIfPreview } from "./types.js";

// Pure render helpers: SessionView in, HTML string out. No dose arithmetic
// happens here; doses, sizes, and MTDs are echoed from service responses.

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function scheduleChipsText(session: SessionView): string {
  return session.schedule.sizes.join(" ");
}

export function renderScheduleChips(session: SessionView): string {
  const done = session.state.cohort_index;
  const chips = session.schedule.sizes
    .map((size, i) => {
      const cls = i < done ? "chip done" : "chip pending";
      return `<span class="${cls}" data-cohort="${i + 1}">${size}</span>`;
    })
    .join(" ");
  return `<div class="schedule-chips" aria-label="cohort schedule">${chips}</div>`;
}

export function renderDoseLadder(session: SessionView): string {
  const rec = session.recommendation;
  const rows: string[] = [];
  for (let dose = session.state.n.length; dose >= 1; dose--) {
    const n = session.state.n[dose - 1];
    const y = session.state.y[dose - 1];
    const classes = ["rung"];
    if (rec && rec.dose === dose) classes.push("recommended");
    if (session.selected_mtd === dose) classes.push("mtd");
    rows.push(
      `<tr class="${classes.join(" ")}" data-dose="${dose}">` +
        `<td>dose ${dose}</td><td>${n} treated</td><td>${y} DLTs</td></tr>`,
    );
  }
  return `<table class="dose-ladder">${rows.join("")}</table>`;
}

export function recommendationText(session: SessionView): string {
  if (session.status === "complete") {
    return `Trial complete: selected MTD is dose ${session.selected_mtd}`;
  }
  const rec = session.recommendation;
  if (!rec) return "No recommendation available";
  const patients = rec.cohort_size === 1 ? "1 patient" : `${rec.cohort_size} patients`;
  return `Cohort ${rec.cohort_number}: treat ${patients} at dose ${rec.dose}`;
}

export function renderRecommendation(session: SessionView): string {
  const cls = session.status === "complete" ? "banner mtd-banner" : "banner next-cohort";
  return `<div class="${cls}">${escapeHtml(recommendationText(session))}</div>`;
}

export function whatIfRowText(preview: WhatIfPreview): string {
  if (preview.would_complete) {
    return `if ${preview.dlt} DLTs → trial completes, MTD dose ${preview.selected_mtd}`;
  }
  return `if ${preview.dlt} DLTs → next dose ${preview.next_dose}`;
}

export function renderWhatIfTable(previews: WhatIfPreview[]): string {
  const rows = previews
    .map((p) => `<tr data-dlt="${p.dlt}"><td>${escapeHtml(whatIfRowText(p))}</td></tr>`)
    .join("");
  return `<table class="whatif">${rows}</table>`;
}

export function renderHistory(events: SessionEvent[]): string {
  const items = events
    .map((e) => {
      let text = e.kind as string;
      if (e.kind === "cohort-recorded") {
        text = `cohort at dose ${e.payload.dose}: ${e.payload.dlts}/${e.payload.size} DLTs`;
      } else if (e.kind === "finalized") {
        text = `finalized: MTD dose ${e.payload.selected_mtd}`;
      }
      return `<li data-seq="${e.seq}">#${e.seq} ${escapeHtml(text)}</li>`;
    })
    .join("");
  return `<ol class="history">${items}</ol>`;
}

// Each error kind gets its own class and wording so a 409 (someone else
// recorded this cohort) can never be mistaken for a fixable 422.
export function renderApiError(error: ApiError): string {
  switch (error.kind) {
    case "conflict":
      return (
        `<div class="error conflict">Session changed elsewhere: ${escapeHtml(error.message)}.` +
        ` Reload the session before acting.</div>`
      );
    case "validation":
      return `<div class="error validation">Input rejected: ${escapeHtml(error.message)}</div>`;
    case "not-found":
      return `<div class="error not-found">Unknown session: ${escapeHtml(error.message)}</div>`;
    case "network":
      return `<div class="error network">Cannot reach the trial service: ${escapeHtml(error.message)}</div>`;
    default:
      return `<div class="error server">Service error (${error.status}): ${escapeHtml(error.message)}</div>`;
  }
}
