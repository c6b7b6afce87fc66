"""Monte Carlo harness: single trials, replicated batches, and the usual
operating characteristics (selection percentages, mean patient allocation,
overdose aggregates).

Batches aggregate with exact integer counters and derive every replication's
seed from (master_seed, replication index), so summaries are bit-identical
regardless of worker count or scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from dosewise import crm, keyboard
from dosewise.schedule import CohortSchedule
from dosewise.seeding import replication_seed, trial_rng
from dosewise.trial import TrialState

DesignConfig = Union[crm.CrmConfig, keyboard.KeyboardConfig]


@dataclass(frozen=True)
class ScenarioSpec:
    """A true dose-toxicity curve with the index of the true MTD (1-based),
    or ``None`` when no dose sits at the target."""

    name: str
    true_tox: tuple[float, ...]
    mtd_index: int | None

    def __post_init__(self) -> None:
        object.__setattr__(self, "true_tox", tuple(float(p) for p in self.true_tox))
        if not self.true_tox:
            raise ValueError("true_tox must not be empty")
        for p in self.true_tox:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"true toxicity must lie in [0, 1], got {p}")
        if self.mtd_index is not None and not 1 <= self.mtd_index <= len(self.true_tox):
            raise ValueError(f"mtd_index {self.mtd_index} outside 1..{len(self.true_tox)}")

    @property
    def n_doses(self) -> int:
        return len(self.true_tox)

    def check_mtd(self, target: float) -> None:
        """Verify the declared MTD is the dose closest to ``target``."""
        if self.mtd_index is None:
            return
        dists = [abs(p - target) for p in self.true_tox]
        if dists[self.mtd_index - 1] > min(dists):
            raise ValueError(
                f"scenario {self.name!r}: dose {self.mtd_index} is not closest to target {target}"
            )


def paper_scenarios() -> list[ScenarioSpec]:
    """The six benchmark toxicity curves (target 0.3), MTD moving from the
    lowest dose to the highest."""
    return [
        ScenarioSpec("S1", (0.30, 0.38, 0.48, 0.58, 0.69, 0.78), 1),
        ScenarioSpec("S2", (0.20, 0.30, 0.45, 0.55, 0.60, 0.70), 2),
        ScenarioSpec("S3", (0.05, 0.10, 0.30, 0.50, 0.65, 0.75), 3),
        ScenarioSpec("S4", (0.07, 0.12, 0.17, 0.30, 0.45, 0.60), 4),
        ScenarioSpec("S5", (0.04, 0.08, 0.12, 0.15, 0.30, 0.50), 5),
        ScenarioSpec("S6", (0.05, 0.14, 0.18, 0.20, 0.23, 0.30), 6),
    ]


@dataclass(frozen=True)
class TrialResult:
    selected_dose: int
    patients: tuple[int, ...]
    dlts: tuple[int, ...]
    dose_path: tuple[tuple[int, int], ...]  # (cohort size, dose)


@dataclass(frozen=True)
class SimSummary:
    scenario: ScenarioSpec
    n_total: int
    selection_pct: tuple[float, ...]
    mean_patients: tuple[float, ...]
    overdose_selection_pct: float | None
    overdose_patient_mean: float | None
    replications: int
    master_seed: int


class CrmEngine:
    """CRM decision engine with per-state memoization of the model's
    nearest-to-target dose (the posterior depends only on the tallies)."""

    def __init__(self, cfg: crm.CrmConfig):
        self.cfg = cfg
        self._argmin_cache: dict[tuple, int] = {}

    @property
    def n_doses(self) -> int:
        return self.cfg.n_doses

    def _model_choice(self, state: TrialState) -> int:
        key = (state.n, state.y)
        j = self._argmin_cache.get(key)
        if j is None:
            post = crm.posterior_summary(state, self.cfg)
            j = crm.closest_to_target(post.tox_estimates, self.cfg.target)
            self._argmin_cache[key] = j
        return j

    def next_dose(self, state: TrialState) -> int:
        j = self._model_choice(state)
        low = max(1, state.current_dose - 1)
        high = min(self.n_doses, state.current_dose + 1)
        return min(max(j, low), high)

    def select_mtd(self, state: TrialState) -> int:
        return self._model_choice(state)


class KeyboardEngine:
    """Keyboard decision engine; decisions depend only on the current dose's
    cumulative (n, y) and are cached as the decision table fills in."""

    def __init__(self, cfg: keyboard.KeyboardConfig, n_doses: int, use_table: bool = True):
        self.cfg = cfg
        self._n_doses = n_doses
        self._use_table = use_table
        self._table: dict[tuple[int, int], keyboard.Action] = {}

    @property
    def n_doses(self) -> int:
        return self._n_doses

    def precompute_table(self, max_n: int) -> None:
        for n in range(1, max_n + 1):
            for y in range(0, n + 1):
                self._decision(n, y)

    def _decision(self, n: int, y: int) -> keyboard.Action:
        if not self._use_table:
            return keyboard.decide(n, y, self.cfg)
        key = (n, y)
        action = self._table.get(key)
        if action is None:
            action = keyboard.decide(n, y, self.cfg)
            self._table[key] = action
        return action

    def next_dose(self, state: TrialState) -> int:
        d = state.current_dose
        action = self._decision(state.n[d - 1], state.y[d - 1])
        if action is keyboard.Action.ESCALATE:
            return min(d + 1, self._n_doses)
        if action is keyboard.Action.DEESCALATE:
            return max(d - 1, 1)
        return d

    def select_mtd(self, state: TrialState) -> int:
        return keyboard.select_mtd(state, self.cfg)


Engine = Union[CrmEngine, KeyboardEngine]


def as_engine(design: DesignConfig | Engine, n_doses: int) -> Engine:
    if isinstance(design, (CrmEngine, KeyboardEngine)):
        return design
    if isinstance(design, crm.CrmConfig):
        return CrmEngine(design)
    if isinstance(design, keyboard.KeyboardConfig):
        return KeyboardEngine(design, n_doses)
    raise TypeError(f"not a design config or engine: {design!r}")


def run_trial(
    design: DesignConfig | Engine,
    scenario: ScenarioSpec,
    schedule: CohortSchedule,
    seed: int,
) -> TrialResult:
    """Simulate one trial: cohort 1 at the lowest dose, each patient an
    independent Bernoulli draw at the cohort's dose, engine decisions between
    cohorts (one-level moves only), final selection after the last cohort."""
    engine = as_engine(design, scenario.n_doses)
    if engine.n_doses != scenario.n_doses:
        raise ValueError(
            f"design covers {engine.n_doses} doses but scenario has {scenario.n_doses}"
        )
    rng = trial_rng(seed)
    state = TrialState.empty(scenario.n_doses)
    dose = 1
    path: list[tuple[int, int]] = []
    for k, size in enumerate(schedule.sizes):
        dlts = int(np.count_nonzero(rng.random(size) < scenario.true_tox[dose - 1]))
        state = state.after_cohort(dose, size, dlts)
        path.append((size, dose))
        if k + 1 < len(schedule.sizes):
            dose = engine.next_dose(state)
    selected = engine.select_mtd(state)
    return TrialResult(
        selected_dose=selected,
        patients=state.n,
        dlts=state.y,
        dose_path=tuple(path),
    )


def summarize_counts(
    scenario: ScenarioSpec,
    n_total: int,
    selection_counts: Sequence[int],
    patient_counts: Sequence[int],
    replications: int,
    master_seed: int,
) -> SimSummary:
    """Turn exact integer tallies into the reported percentages and means.

    Overdose aggregates are partial sums of the reported per-dose values over
    doses strictly above the MTD, so the identity holds exactly.
    """
    selection_pct = tuple(100.0 * c / replications for c in selection_counts)
    mean_patients = tuple(c / replications for c in patient_counts)
    if scenario.mtd_index is None:
        over_sel = over_pat = None
    else:
        over_sel = sum(selection_pct[scenario.mtd_index :])
        over_pat = sum(mean_patients[scenario.mtd_index :])
    return SimSummary(
        scenario=scenario,
        n_total=n_total,
        selection_pct=selection_pct,
        mean_patients=mean_patients,
        overdose_selection_pct=over_sel,
        overdose_patient_mean=over_pat,
        replications=replications,
        master_seed=master_seed,
    )


def summarize_results(
    results: Sequence[TrialResult],
    scenario: ScenarioSpec,
    n_total: int,
    master_seed: int,
) -> SimSummary:
    """Aggregate explicit trial results (mainly for tests and small studies)."""
    j = scenario.n_doses
    selection = [0] * j
    patients = [0] * j
    for r in results:
        selection[r.selected_dose - 1] += 1
        for d in range(j):
            patients[d] += r.patients[d]
    return summarize_counts(scenario, n_total, selection, patients, len(results), master_seed)


def _simulate_range(
    design: DesignConfig,
    scenario: ScenarioSpec,
    schedule: CohortSchedule,
    master_seed: int,
    start: int,
    stop: int,
) -> tuple[list[int], list[int]]:
    engine = as_engine(design, scenario.n_doses)
    j = scenario.n_doses
    selection = [0] * j
    patients = [0] * j
    for r in range(start, stop):
        result = run_trial(engine, scenario, schedule, replication_seed(master_seed, r))
        selection[result.selected_dose - 1] += 1
        for d in range(j):
            patients[d] += result.patients[d]
    return selection, patients


def run_batch(
    design: DesignConfig,
    scenario: ScenarioSpec,
    schedule: CohortSchedule,
    replications: int = 10_000,
    master_seed: int = 0,
    workers: int | None = None,
) -> SimSummary:
    """Replicate ``run_trial`` and aggregate operating characteristics.

    Identical output for any ``workers`` value: seeds are per-replication and
    tallies are integers, so neither scheduling nor summation order matters.
    """
    if replications < 1:
        raise ValueError(f"replications must be >= 1, got {replications}")
    if workers is None:
        workers = max(1, min(os.cpu_count() or 1, 8))
    j = scenario.n_doses
    selection = [0] * j
    patients = [0] * j
    if workers == 1 or replications < 4 * workers:
        selection, patients = _simulate_range(
            design, scenario, schedule, master_seed, 0, replications
        )
    else:
        bounds = [round(i * replications / workers) for i in range(workers + 1)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(
                    _simulate_range, design, scenario, schedule, master_seed, lo, hi
                )
                for lo, hi in zip(bounds, bounds[1:])
                if hi > lo
            ]
            for fut in futures:
                sel, pat = fut.result()
                for d in range(j):
                    selection[d] += sel[d]
                    patients[d] += pat[d]
    return summarize_counts(
        scenario, schedule.total, selection, patients, replications, master_seed
    )


def overdose_metrics(summary: SimSummary, mtd_index: int | None) -> tuple[float, float]:
    """Selection percentage and mean patient count over doses strictly above
    the MTD."""
    if mtd_index is None:
        raise ValueError("overdose metrics need a defined MTD index")
    if not 1 <= mtd_index <= len(summary.selection_pct):
        raise ValueError(f"mtd_index {mtd_index} outside 1..{len(summary.selection_pct)}")
    return (
        sum(summary.selection_pct[mtd_index:]),
        sum(summary.mean_patients[mtd_index:]),
    )
