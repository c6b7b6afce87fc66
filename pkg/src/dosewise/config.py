"""Strict JSON configuration for simulation runs.

Unknown keys are rejected and every cross-field constraint is checked before
any simulation starts; silent typos in a scientific config are worse than a
loud failure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from dosewise import crm, keyboard
from dosewise.schedule import CohortSchedule, build_fixed_schedule, build_unequal_schedule
from dosewise.simkit import DesignConfig, ScenarioSpec, paper_scenarios

OUTPUT_FORMATS = ("markdown", "csv", "json")


class ConfigError(ValueError):
    """A configuration problem, with the offending field in the message."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config field {field!r}: {message}")


@dataclass(frozen=True)
class SimConfig:
    design_name: str  # "crm" | "keyboard"
    design: DesignConfig
    n_total: int
    schedule_mode: str  # "unequal" | "fixed"
    fixed_cohort: int | None
    schedule: CohortSchedule
    scenarios: tuple[ScenarioSpec, ...]
    replications: int
    master_seed: int
    output: str


_TOP_KEYS = {
    "design",
    "N",
    "target",
    "schedule",
    "skeleton",
    "interval",
    "prior_variance",
    "estimator",
    "scenarios",
    "replications",
    "master_seed",
    "output",
}


def _require(raw: dict, key: str) -> Any:
    if key not in raw:
        raise ConfigError(key, "missing required field")
    return raw[key]


def _as_int(value: Any, field: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(field, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(field, f"must be >= {minimum}, got {value}")
    return value


def _as_prob(value: Any, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(field, f"expected a number, got {value!r}")
    if not 0.0 < float(value) < 1.0:
        raise ConfigError(field, f"must lie strictly in (0, 1), got {value}")
    return float(value)


def _parse_schedule(raw: Any, n_total: int) -> tuple[str, int | None, CohortSchedule]:
    if not isinstance(raw, dict):
        raise ConfigError("schedule", f"expected an object, got {raw!r}")
    unknown = set(raw) - {"mode", "cohort"}
    if unknown:
        raise ConfigError("schedule", f"unknown keys {sorted(unknown)}")
    mode = _require(raw, "mode") if "mode" in raw else None
    if mode not in ("unequal", "fixed"):
        raise ConfigError("schedule.mode", f"expected 'unequal' or 'fixed', got {mode!r}")
    if mode == "unequal":
        if "cohort" in raw:
            raise ConfigError("schedule.cohort", "only valid for mode 'fixed'")
        return mode, None, build_unequal_schedule(n_total)
    cohort = _as_int(_require(raw, "cohort"), "schedule.cohort", minimum=1)
    return mode, cohort, build_fixed_schedule(n_total, cohort)


def _parse_scenarios(raw: Any, target: float) -> tuple[ScenarioSpec, ...]:
    if raw == "paper6":
        scenarios = tuple(paper_scenarios())
    else:
        if not isinstance(raw, list) or not raw:
            raise ConfigError("scenarios", "expected 'paper6' or a non-empty list")
        parsed = []
        for i, item in enumerate(raw):
            field = f"scenarios[{i}]"
            if not isinstance(item, dict):
                raise ConfigError(field, f"expected an object, got {item!r}")
            unknown = set(item) - {"name", "true_tox", "mtd_index"}
            if unknown:
                raise ConfigError(field, f"unknown keys {sorted(unknown)}")
            name = item.get("name", f"scenario-{i + 1}")
            tox = _require(item, "true_tox") if "true_tox" in item else None
            if tox is None:
                raise ConfigError(f"{field}.true_tox", "missing required field")
            if not isinstance(tox, list) or not all(
                isinstance(p, (int, float)) and not isinstance(p, bool) for p in tox
            ):
                raise ConfigError(f"{field}.true_tox", "expected a list of numbers")
            mtd = item.get("mtd_index")
            if mtd is not None:
                mtd = _as_int(mtd, f"{field}.mtd_index", minimum=1)
            try:
                parsed.append(ScenarioSpec(name=str(name), true_tox=tuple(tox), mtd_index=mtd))
            except ValueError as exc:
                raise ConfigError(field, str(exc)) from exc
        scenarios = tuple(parsed)
    lengths = {s.n_doses for s in scenarios}
    if len(lengths) != 1:
        raise ConfigError("scenarios", f"scenarios disagree on dose count: {sorted(lengths)}")
    for s in scenarios:
        try:
            s.check_mtd(target)
        except ValueError as exc:
            raise ConfigError("scenarios", str(exc)) from exc
    return scenarios


def parse_design(raw: dict, field_prefix: str = "") -> tuple[str, DesignConfig]:
    """Validate the design portion of a config: the shared rules for the
    simulate command and the trial-conduct service."""

    def fld(name: str) -> str:
        return f"{field_prefix}{name}"

    name = raw.get("design")
    if name not in ("crm", "keyboard"):
        raise ConfigError(fld("design"), f"expected 'crm' or 'keyboard', got {name!r}")
    target = _as_prob(_require(raw, "target"), fld("target"))
    if name == "crm":
        if "interval" in raw:
            raise ConfigError(fld("interval"), "only valid for the keyboard design")
        skeleton = _require(raw, "skeleton")
        if not isinstance(skeleton, list) or not all(
            isinstance(p, (int, float)) and not isinstance(p, bool) for p in skeleton
        ):
            raise ConfigError(fld("skeleton"), "expected a list of numbers")
        prior_variance = raw.get("prior_variance", 1.34)
        if isinstance(prior_variance, bool) or not isinstance(prior_variance, (int, float)):
            raise ConfigError(fld("prior_variance"), f"expected a number, got {prior_variance!r}")
        estimator = raw.get("estimator", crm.PLUGIN)
        try:
            design = crm.CrmConfig(
                skeleton=tuple(skeleton),
                target=target,
                prior_variance=float(prior_variance),
                estimator_mode=estimator,
            )
        except ValueError as exc:
            raise ConfigError(fld("skeleton"), str(exc)) from exc
        return name, design
    if "skeleton" in raw:
        raise ConfigError(fld("skeleton"), "only valid for the crm design")
    if "prior_variance" in raw:
        raise ConfigError(fld("prior_variance"), "only valid for the crm design")
    if "estimator" in raw:
        raise ConfigError(fld("estimator"), "only valid for the crm design")
    interval = _require(raw, "interval")
    if (
        not isinstance(interval, list)
        or len(interval) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in interval)
    ):
        raise ConfigError(fld("interval"), "expected [lower, upper]")
    try:
        design = keyboard.KeyboardConfig.from_interval(
            target=target, interval=(float(interval[0]), float(interval[1]))
        )
    except ValueError as exc:
        raise ConfigError(fld("interval"), str(exc)) from exc
    return name, design


def validate_sim_config(raw: Any) -> SimConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", f"expected a JSON object, got {type(raw).__name__}")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError("<root>", f"unknown keys {sorted(unknown)}")
    design_name, design = parse_design(raw)
    n_total = _as_int(_require(raw, "N"), "N", minimum=1)
    mode, fixed_cohort, schedule = _parse_schedule(_require(raw, "schedule"), n_total)
    target = design.target
    scenarios = _parse_scenarios(_require(raw, "scenarios"), target)
    if design_name == "crm" and scenarios[0].n_doses != design.n_doses:
        raise ConfigError(
            "scenarios",
            f"scenarios have {scenarios[0].n_doses} doses but the skeleton has {design.n_doses}",
        )
    replications = _as_int(raw.get("replications", 10_000), "replications", minimum=1)
    master_seed = _as_int(raw.get("master_seed", 0), "master_seed", minimum=0)
    if master_seed >= 1 << 64:
        raise ConfigError("master_seed", "must fit in 64 bits")
    output = raw.get("output", "markdown")
    if output not in OUTPUT_FORMATS:
        raise ConfigError("output", f"expected one of {OUTPUT_FORMATS}, got {output!r}")
    return SimConfig(
        design_name=design_name,
        design=design,
        n_total=n_total,
        schedule_mode=mode,
        fixed_cohort=fixed_cohort,
        schedule=schedule,
        scenarios=scenarios,
        replications=replications,
        master_seed=master_seed,
        output=output,
    )


def load_sim_config(path: str | Path) -> SimConfig:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return validate_sim_config(raw)
