import { describe, expect, it } from "vitest";

import { ApiError } from "../src/api.js";
import type { SessionView, WhatIfPreview } from "../src/types.js";
import {
  recommendationText,
  renderApiError,
  renderDoseLadder,
  renderScheduleChips,
  renderWhatIfTable,
  scheduleChipsText,
  whatIfRowText,
} from "../src/views.js";

// Recorded from a live service response (CRM, N=30, growing schedule).
const FIXTURE: SessionView = {
  id: "abc123",
  status: "awaiting-cohort",
  design: { design: "crm", target: 0.3, skeleton: [0.1, 0.2, 0.3, 0.4, 0.5, 0.6] },
  schedule: { mode: "unequal", n: 30, cohort: null, sizes: [1, 1, 2, 2, 3, 3, 4, 4, 5, 5] },
  state: { n: [1, 0, 0, 0, 0, 0], y: [0, 0, 0, 0, 0, 0], current_dose: 1, cohort_index: 1 },
  recommendation: { cohort_number: 2, dose: 2, cohort_size: 1 },
  selected_mtd: null,
  created_at: "2026-08-09T00:00:00+00:00",
  updated_at: "2026-08-09T00:00:00+00:00",
  last_seq: 2,
};

describe("schedule chips", () => {
  it("shows the growing schedule for N=30", () => {
    expect(scheduleChipsText(FIXTURE)).toBe("1 1 2 2 3 3 4 4 5 5");
  });

  it("marks completed cohorts", () => {
    const html = renderScheduleChips(FIXTURE);
    expect(html.match(/chip done/g)?.length).toBe(1);
    expect(html.match(/chip pending/g)?.length).toBe(9);
  });
});

describe("recommendation banner", () => {
  it("echoes the service recommendation verbatim", () => {
    expect(recommendationText(FIXTURE)).toBe("Cohort 2: treat 1 patient at dose 2");
  });

  it("shows the MTD banner when complete", () => {
    const done: SessionView = {
      ...FIXTURE,
      status: "complete",
      recommendation: null,
      selected_mtd: 3,
    };
    expect(recommendationText(done)).toBe("Trial complete: selected MTD is dose 3");
  });
});

describe("dose ladder", () => {
  it("highlights the recommended dose and lists tallies", () => {
    const html = renderDoseLadder(FIXTURE);
    expect(html).toContain('data-dose="2"');
    expect(html).toMatch(/recommended[^>]*data-dose="2"/);
    expect(html).toContain("1 treated");
    expect(html.match(/<tr/g)?.length).toBe(6);
  });
});

describe("what-if table", () => {
  const previews: WhatIfPreview[] = [
    { dlt: 0, cohort_dose: 1, cohort_size: 3, would_complete: false, selected_mtd: null, next_dose: 2 },
    { dlt: 1, cohort_dose: 1, cohort_size: 3, would_complete: false, selected_mtd: null, next_dose: 1 },
    { dlt: 2, cohort_dose: 1, cohort_size: 3, would_complete: false, selected_mtd: null, next_dose: 1 },
    { dlt: 3, cohort_dose: 1, cohort_size: 3, would_complete: false, selected_mtd: null, next_dose: 1 },
  ];

  it("renders one row per feasible DLT count", () => {
    const html = renderWhatIfTable(previews);
    expect(html.match(/<tr/g)?.length).toBe(4);
    expect(whatIfRowText(previews[0])).toBe("if 0 DLTs → next dose 2");
  });

  it("announces completion rows", () => {
    const row = whatIfRowText({
      dlt: 1,
      cohort_dose: 4,
      cohort_size: 5,
      would_complete: true,
      selected_mtd: 4,
      next_dose: null,
    });
    expect(row).toBe("if 1 DLTs → trial completes, MTD dose 4");
  });
});

describe("error rendering", () => {
  it("renders distinct states for 409, 422 and 5xx", () => {
    const conflict = renderApiError(new ApiError("conflict", 409, "seq moved"));
    const validation = renderApiError(new ApiError("validation", 422, "dlt out of range"));
    const server = renderApiError(new ApiError("server", 500, "boom"));
    const network = renderApiError(new ApiError("network", null, "refused"));
    expect(conflict).toContain("error conflict");
    expect(conflict).toContain("Reload");
    expect(validation).toContain("error validation");
    expect(server).toContain("error server");
    expect(network).toContain("error network");
    const classes = [conflict, validation, server, network].map(
      (h) => h.match(/class="([^"]+)"/)?.[1],
    );
    expect(new Set(classes).size).toBe(4);
  });

  it("escapes service-provided text", () => {
    const html = renderApiError(new ApiError("validation", 422, "<script>alert(1)</script>"));
    expect(html).not.toContain("<script>");
  });
});
