"""Table emission for batch results: markdown for reading, CSV/JSON for
machines.  Markdown rounds percentages to two decimals; CSV and JSON carry
full precision so emitted files round-trip exactly."""

from __future__ import annotations

import csv
import io
import json
from typing import Sequence

from dosewise.simkit import SimSummary

CSV_COLUMNS = (
    "scenario",
    "dose",
    "true_tox",
    "selection_pct",
    "mean_patients",
    "overdose_selection_pct",
    "overdose_patient_mean",
)


def format_markdown(summaries: Sequence[SimSummary], title: str = "") -> str:
    lines: list[str] = []
    if title:
        lines.append(f"# {title}")
        lines.append("")
    first = summaries[0]
    lines.append(
        f"N = {first.n_total}, replications = {first.replications}, "
        f"master seed = {first.master_seed}"
    )
    lines.append("")
    for s in summaries:
        mtd = f"dose {s.scenario.mtd_index}" if s.scenario.mtd_index else "none"
        lines.append(f"## {s.scenario.name} (MTD = {mtd})")
        lines.append("")
        doses = range(1, len(s.selection_pct) + 1)
        header = "| | " + " | ".join(str(d) for d in doses) + " | Overdose |"
        rule = "|---" * (len(s.selection_pct) + 2) + "|"
        tox_row = (
            "| True toxicity | "
            + " | ".join(f"{p:.2f}" for p in s.scenario.true_tox)
            + " | |"
        )
        over_sel = "" if s.overdose_selection_pct is None else f"{s.overdose_selection_pct:.2f}"
        over_pat = "" if s.overdose_patient_mean is None else f"{s.overdose_patient_mean:.2f}"
        sel_row = (
            "| Selection (%) | "
            + " | ".join(f"{v:.2f}" for v in s.selection_pct)
            + f" | {over_sel} |"
        )
        pat_row = (
            "| Patients (mean) | "
            + " | ".join(f"{v:.2f}" for v in s.mean_patients)
            + f" | {over_pat} |"
        )
        lines.extend([header, rule, tox_row, sel_row, pat_row, ""])
    return "\n".join(lines)


def format_csv(summaries: Sequence[SimSummary]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for s in summaries:
        over_sel = "" if s.overdose_selection_pct is None else repr(s.overdose_selection_pct)
        over_pat = "" if s.overdose_patient_mean is None else repr(s.overdose_patient_mean)
        for d in range(len(s.selection_pct)):
            writer.writerow(
                [
                    s.scenario.name,
                    d + 1,
                    repr(s.scenario.true_tox[d]),
                    repr(s.selection_pct[d]),
                    repr(s.mean_patients[d]),
                    over_sel,
                    over_pat,
                ]
            )
    return buf.getvalue()


def parse_csv(text: str) -> dict[str, dict[str, object]]:
    """Rebuild per-scenario values from an emitted CSV (exact round trip)."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header: {reader.fieldnames}")
    out: dict[str, dict[str, object]] = {}
    for row in reader:
        entry = out.setdefault(
            row["scenario"],
            {
                "true_tox": [],
                "selection_pct": [],
                "mean_patients": [],
                "overdose_selection_pct": None,
                "overdose_patient_mean": None,
            },
        )
        entry["true_tox"].append(float(row["true_tox"]))
        entry["selection_pct"].append(float(row["selection_pct"]))
        entry["mean_patients"].append(float(row["mean_patients"]))
        if row["overdose_selection_pct"]:
            entry["overdose_selection_pct"] = float(row["overdose_selection_pct"])
        if row["overdose_patient_mean"]:
            entry["overdose_patient_mean"] = float(row["overdose_patient_mean"])
    return out


def summary_to_dict(s: SimSummary) -> dict:
    return {
        "scenario": s.scenario.name,
        "true_tox": list(s.scenario.true_tox),
        "mtd_index": s.scenario.mtd_index,
        "n_total": s.n_total,
        "selection_pct": list(s.selection_pct),
        "mean_patients": list(s.mean_patients),
        "overdose_selection_pct": s.overdose_selection_pct,
        "overdose_patient_mean": s.overdose_patient_mean,
        "replications": s.replications,
        "master_seed": s.master_seed,
    }


def format_json(summaries: Sequence[SimSummary]) -> str:
    return json.dumps([summary_to_dict(s) for s in summaries], indent=2)


def format_comparison(
    label_a: str,
    label_b: str,
    summaries_a: Sequence[SimSummary],
    summaries_b: Sequence[SimSummary],
) -> str:
    """Side-by-side MTD-selection and overdose deltas, flagging where B wins
    (higher MTD selection; lower overdose)."""
    lines = [
        f"Comparison: A = {label_a}, B = {label_b}",
        "",
        "| Scenario | MTD sel A | MTD sel B | dSel (B-A) | Overdose A | Overdose B | dOver (B-A) | B better? |",
        "|---|---|---|---|---|---|---|---|",
    ]
    for a, b in zip(summaries_a, summaries_b):
        mtd = a.scenario.mtd_index
        if mtd is None:
            continue
        sel_a = a.selection_pct[mtd - 1]
        sel_b = b.selection_pct[mtd - 1]
        over_a = a.overdose_selection_pct or 0.0
        over_b = b.overdose_selection_pct or 0.0
        flags = []
        if sel_b > sel_a:
            flags.append("selection")
        if over_b < over_a:
            flags.append("overdose")
        flag = "+".join(flags) if flags else "no"
        lines.append(
            f"| {a.scenario.name} | {sel_a:.2f} | {sel_b:.2f} | {sel_b - sel_a:+.2f} "
            f"| {over_a:.2f} | {over_b:.2f} | {over_b - over_a:+.2f} | {flag} |"
        )
    return "\n".join(lines) + "\n"
