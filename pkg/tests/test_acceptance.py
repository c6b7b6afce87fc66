"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest -s`` to watch them stream).

The Monte Carlo fixture performs the full N=30 sweep (both designs, both
schedules, all six scenarios, 10,000 replications each) plus the N=24 and
N=42 cells the published tables are checked against.
"""

from __future__ import annotations

import itertools
import math
import os
import random
import time

import numpy as np
import pytest

from oracles import crm_trapezoid_batch, enumerate_states, isotonic_grid_oracle
from dosewise.crm import CrmConfig, posterior_summary, recommend_next_dose
from dosewise.eventlog import EventStore
from dosewise.keyboard import Action, KeyboardConfig, decide, key_masses, pava
from dosewise.schedule import build_fixed_schedule, build_unequal_schedule
from dosewise.simkit import paper_scenarios, run_batch
from dosewise.trial import TrialState
from dosewise.trialsvc import SessionManager, replay

MASTER_SEED = 20260809
REPLICATIONS = 10_000
WORKERS = max(1, min(os.cpu_count() or 1, 4))

STANDARD_SKELETON = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
CRM_CFG = CrmConfig(skeleton=STANDARD_SKELETON, target=0.3)
KB_CFG = KeyboardConfig.from_interval(target=0.3, interval=(0.25, 0.35))


def report(line: str) -> None:
    print(f"ACCEPTANCE PASS: {line}", flush=True)


# --- criterion: schedule golden tables -------------------------------------

def test_schedule_golden_tables():
    start = time.perf_counter()
    published = {
        24: ((1, 1, 2, 2, 3, 3, 4, 4, 4), 9, 8),
        30: ((1, 1, 2, 2, 3, 3, 4, 4, 5, 5), 10, 10),
        36: ((1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6), 11, 12),
        42: ((1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6), 12, 14),
    }
    for total, (sizes, n_unequal, n_fixed) in published.items():
        unequal = build_unequal_schedule(total)
        fixed = build_fixed_schedule(total, 3)
        assert unequal.sizes == sizes
        assert unequal.n_cohorts == n_unequal
        assert fixed.sizes == (3,) * (total // 3)
        assert fixed.n_cohorts == n_fixed
    assert build_unequal_schedule(24).sizes[-1] == 4
    assert build_unequal_schedule(26).sizes == (1, 1, 2, 2, 3, 3, 4, 4, 6)
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    report(f"schedule golden tables (N=24/26/30/36/42 exact) in {elapsed:.3f}s")


def test_cohort_halving_at_132():
    unequal = build_unequal_schedule(132)
    fixed = build_fixed_schedule(132, 3)
    assert fixed.n_cohorts == 44
    assert unequal.n_cohorts <= fixed.n_cohorts / 2
    report(
        f"cohort halving at N=132 (unequal {unequal.n_cohorts} vs fixed {fixed.n_cohorts})"
    )


# --- criterion: CRM quadrature vs exhaustive trapezoid oracle ---------------

def test_crm_quadrature_oracle_exhaustive():
    start = time.perf_counter()
    skeleton = (0.1, 0.2, 0.3)
    cfg = CrmConfig(skeleton=skeleton, target=0.3)
    ns, ys = enumerate_states(n_doses=3, max_total=12)
    oracle_means = crm_trapezoid_batch(ns, ys, skeleton, cfg.prior_variance)
    worst_mean = worst_tox = 0.0
    for n, y, ref_mean in zip(ns, ys, oracle_means):
        state = TrialState(n=tuple(int(v) for v in n), y=tuple(int(v) for v in y))
        post = posterior_summary(state, cfg)
        worst_mean = max(worst_mean, abs(post.alpha_mean - ref_mean))
        ref_e = math.exp(ref_mean)
        for est, p in zip(post.tox_estimates, skeleton):
            worst_tox = max(worst_tox, abs(est - p**ref_e))
    elapsed = time.perf_counter() - start
    assert worst_mean < 1e-6, f"worst alpha_mean deviation {worst_mean}"
    assert worst_tox < 1e-6, f"worst tox deviation {worst_tox}"
    assert elapsed < 120.0, f"exhaustive oracle check took {elapsed:.1f}s"
    report(
        f"CRM quadrature vs oracle on {len(ns)} states (N<=12, 3 doses): "
        f"max |d alpha_mean| {worst_mean:.2e}, max |d tox| {worst_tox:.2e}, {elapsed:.1f}s"
    )


# --- criterion: Keyboard closed forms ---------------------------------------

def test_keyboard_closed_forms():
    m30 = key_masses(3, 0, KB_CFG)
    assert m30[0] == pytest.approx(0.95**4 - 0.85**4, abs=1e-10)
    assert m30[2] == pytest.approx(0.75**4 - 0.65**4, abs=1e-10)
    m31 = key_masses(3, 1, KB_CFG)
    assert m31[2] == pytest.approx(0.17530, abs=1e-10)
    m32 = key_masses(3, 2, KB_CFG)
    assert m32[6] == pytest.approx(m31[2], abs=1e-10)  # Beta(3,2) mirrors Beta(2,3)
    assert decide(3, 0, KB_CFG) is Action.ESCALATE
    assert decide(3, 1, KB_CFG) is Action.STAY
    assert decide(3, 2, KB_CFG) is Action.DEESCALATE
    report("keyboard closed-form masses (1e-10) and decisions (E, S, D) for n=3")


# --- criterion: PAVA vs brute-force monotone least squares ------------------

def test_pava_brute_force_oracle():
    start = time.perf_counter()
    grid = [round(0.1 * i, 1) for i in range(11)]
    worst = 0.0
    count = 0
    for length in range(1, 5):
        for values in itertools.product(grid, repeat=length):
            fitted = pava(list(values), [1.0] * length)
            reference = isotonic_grid_oracle(list(values), [1.0] * length)
            for f, r in zip(fitted, reference):
                worst = max(worst, abs(f - r))
            count += 1
    elapsed = time.perf_counter() - start
    assert worst < 2e-3, f"worst deviation from grid oracle {worst}"
    report(
        f"PAVA vs DP grid oracle on {count} inputs (len<=4): max deviation "
        f"{worst:.2e}, {elapsed:.1f}s"
    )


# --- criterion: published-table reproduction --------------------------------

def _batch(design, scenario, schedule, workers=WORKERS):
    return run_batch(
        design,
        scenario,
        schedule,
        replications=REPLICATIONS,
        master_seed=MASTER_SEED,
        workers=workers,
    )


@pytest.fixture(scope="module")
def mc_results():
    scenarios = paper_scenarios()
    results = {}
    sweep_start = time.perf_counter()
    for design_name, design in (("crm", CRM_CFG), ("keyboard", KB_CFG)):
        for mode, schedule in (
            ("fixed", build_fixed_schedule(30, 3)),
            ("unequal", build_unequal_schedule(30)),
        ):
            for scenario in scenarios:
                results[(design_name, 30, mode, scenario.name)] = _batch(
                    design, scenario, schedule
                )
    sweep_elapsed = time.perf_counter() - sweep_start
    results[("crm", 24, "fixed", "S1")] = _batch(CRM_CFG, scenarios[0], build_fixed_schedule(24, 3))
    results[("crm", 42, "fixed", "S6")] = _batch(CRM_CFG, scenarios[5], build_fixed_schedule(42, 3))
    results[("crm", 42, "unequal", "S6")] = _batch(CRM_CFG, scenarios[5], build_unequal_schedule(42))
    return results, sweep_elapsed


def test_published_cell_crm_n30_scenario3(mc_results):
    results, _ = mc_results
    fixed = results[("crm", 30, "fixed", "S3")].selection_pct[2]
    unequal = results[("crm", 30, "unequal", "S3")].selection_pct[2]
    assert fixed == pytest.approx(67.16, abs=3.0)
    assert unequal == pytest.approx(68.64, abs=3.0)
    report(
        f"CRM N=30 S3 dose-3 selection: fixed {fixed:.2f} (pub 67.16), "
        f"unequal {unequal:.2f} (pub 68.64), tol 3pp"
    )


def test_published_cell_keyboard_n30_scenario3(mc_results):
    results, _ = mc_results
    fixed = results[("keyboard", 30, "fixed", "S3")].selection_pct[2]
    unequal = results[("keyboard", 30, "unequal", "S3")].selection_pct[2]
    assert fixed == pytest.approx(71.17, abs=3.0)
    assert unequal == pytest.approx(74.27, abs=3.0)
    report(
        f"Keyboard N=30 S3 dose-3 selection: fixed {fixed:.2f} (pub 71.17), "
        f"unequal {unequal:.2f} (pub 74.27), tol 3pp"
    )


def test_published_cell_crm_n24_scenario1(mc_results):
    results, _ = mc_results
    summary = results[("crm", 24, "fixed", "S1")]
    assert summary.selection_pct[0] == pytest.approx(65.71, abs=3.0)
    assert summary.overdose_selection_pct == pytest.approx(34.29, abs=3.0)
    report(
        f"CRM N=24 S1 fixed: dose-1 selection {summary.selection_pct[0]:.2f} "
        f"(pub 65.71), overdose {summary.overdose_selection_pct:.2f} (pub 34.29), tol 3pp"
    )


def test_published_cell_crm_n42_scenario6_directional(mc_results):
    results, _ = mc_results
    fixed = results[("crm", 42, "fixed", "S6")].selection_pct[5]
    unequal = results[("crm", 42, "unequal", "S6")].selection_pct[5]
    assert fixed == pytest.approx(34.44, abs=3.0)
    assert unequal == pytest.approx(41.24, abs=3.0)
    assert unequal - fixed >= 3.0
    report(
        f"CRM N=42 S6 dose-6 selection: fixed {fixed:.2f} (pub 34.44), unequal "
        f"{unequal:.2f} (pub 41.24), gap {unequal - fixed:.2f} >= 3pp"
    )


def test_sweep_runtime_target(mc_results):
    _, sweep_elapsed = mc_results
    cores = os.cpu_count() or 1
    budget = 300.0 * max(1.0, 4.0 / min(cores, 4))
    assert sweep_elapsed < budget, f"sweep took {sweep_elapsed:.0f}s on {cores} cores"
    report(
        f"full N=30 sweep (2 designs x 2 schedules x 6 scenarios x 10k reps) in "
        f"{sweep_elapsed:.1f}s on {cores} cores (budget {budget:.0f}s; target 300s on 4)"
    )


# --- criterion: structural Monte Carlo invariants ---------------------------

def test_structural_invariants_on_every_batch(mc_results):
    results, _ = mc_results
    for key, summary in results.items():
        assert sum(summary.selection_pct) == pytest.approx(100.0, abs=0.01), key
        assert sum(summary.mean_patients) == pytest.approx(summary.n_total, abs=1e-9), key
        mtd = summary.scenario.mtd_index
        assert summary.overdose_selection_pct == sum(summary.selection_pct[mtd:]), key
        assert summary.overdose_patient_mean == sum(summary.mean_patients[mtd:]), key
    report(
        f"structural invariants on {len(results)} batches: selections sum to 100, "
        f"patients sum to N, overdose = exact partial sums"
    )


def test_worker_count_bit_identity(mc_results):
    results, _ = mc_results
    kb_solo = _batch(KB_CFG, paper_scenarios()[2], build_fixed_schedule(30, 3), workers=1)
    assert kb_solo == results[("keyboard", 30, "fixed", "S3")]
    crm_solo = _batch(CRM_CFG, paper_scenarios()[0], build_fixed_schedule(24, 3), workers=1)
    assert crm_solo == results[("crm", 24, "fixed", "S1")]
    report(
        f"worker-count bit identity at 10k replications (1 worker == {WORKERS} workers) "
        f"for a CRM and a Keyboard batch"
    )


# --- criterion: service contract --------------------------------------------

def _random_session_body(rng: random.Random) -> dict:
    if rng.random() < 0.5:
        n_doses = rng.randint(2, 6)
        skeleton = sorted(rng.sample([i / 20 for i in range(1, 19)], n_doses))
        design = {"design": "crm", "target": 0.3, "skeleton": skeleton}
    else:
        design = {
            "design": "keyboard",
            "target": 0.3,
            "interval": [0.25, 0.35],
            "doses": rng.randint(2, 6),
        }
    if rng.random() < 0.5:
        schedule = {"mode": "unequal", "n": rng.randint(1, 16)}
    else:
        schedule = {"mode": "fixed", "n": rng.randint(1, 16), "cohort": rng.randint(1, 4)}
    return {"design": design, "schedule": schedule}


def test_service_contract(tmp_path):
    start = time.perf_counter()
    rng = random.Random(4242)
    manager = SessionManager(EventStore(tmp_path / "events"))
    checks = {"crm": 0, "keyboard": 0}
    replays = 0
    for _ in range(1000):
        body = _random_session_body(rng)
        session = manager.create_session(body)
        sid = session.id
        while manager.get(sid).status != "complete" and rng.random() > 0.15:
            session = manager.get(sid)
            rec = manager.recommendation(session)
            design_name = session.design_name
            if checks[design_name] < 500 and session.state.cohort_index > 0:
                if design_name == "crm":
                    direct = recommend_next_dose(session.state, session.design)
                else:
                    action = decide(
                        session.state.n[session.state.current_dose - 1],
                        session.state.y[session.state.current_dose - 1],
                        session.design,
                    )
                    move = {Action.ESCALATE: 1, Action.STAY: 0, Action.DEESCALATE: -1}[action]
                    direct = min(max(session.state.current_dose + move, 1), session.n_doses)
                assert rec.dose == direct, f"service drift on {design_name} state {session.state}"
                checks[design_name] += 1
            manager.record_cohort(sid, rng.randint(0, rec.cohort_size))
        assert replay(manager.store.read(sid)) == manager.get(sid)
        replays += 1
    assert replays == 1000
    # top up engine comparisons to 500 each with fresh mid-flight sessions
    while min(checks.values()) < 500:
        body = _random_session_body(rng)
        session = manager.create_session(body)
        sid = session.id
        rec = manager.recommendation(session)
        manager.record_cohort(sid, rng.randint(0, rec.cohort_size))
        session = manager.get(sid)
        if session.status == "complete":
            continue
        rec = manager.recommendation(session)
        if session.design_name == "crm":
            direct = recommend_next_dose(session.state, session.design)
        else:
            action = decide(
                session.state.n[session.state.current_dose - 1],
                session.state.y[session.state.current_dose - 1],
                session.design,
            )
            move = {Action.ESCALATE: 1, Action.STAY: 0, Action.DEESCALATE: -1}[action]
            direct = min(max(session.state.current_dose + move, 1), session.n_doses)
        assert rec.dose == direct
        checks[session.design_name] += 1

    # what-if purity: every feasible preview on live sessions, storage untouched
    live = [sid for sid in manager.session_ids() if manager.get(sid).status != "complete"]
    digest_before = manager.store.digest()
    previews = 0
    for sid in live[:50]:
        size = manager.recommendation(manager.get(sid)).cohort_size
        for dlt in range(size + 1):
            manager.whatif(sid, dlt)
            previews += 1
    assert manager.store.digest() == digest_before
    elapsed = time.perf_counter() - start
    report(
        f"service contract: 1000 histories replay-equal, {previews} what-ifs leave "
        f"storage digest unchanged, engine-vs-service agreement x{checks['crm']} (CRM) "
        f"x{checks['keyboard']} (Keyboard), {elapsed:.1f}s"
    )
