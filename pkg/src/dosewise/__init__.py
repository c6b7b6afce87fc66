"""Phase I dose-finding with growing cohort sizes.

Cohort schedules that grow as 1,1,2,2,3,3,..., CRM and Keyboard decision
engines, a reproducible Monte Carlo harness for operating characteristics,
and a trial-conduct REST service.
"""

from dosewise.schedule import (
    Allocation,
    CohortSchedule,
    base_cohort_size,
    build_fixed_schedule,
    build_unequal_schedule,
    fisher_information,
    sqrt_table,
)
from dosewise.trial import TrialState
from dosewise.crm import CrmConfig, CrmPosterior, posterior_summary, recommend_next_dose
from dosewise.keyboard import Action, KeySet, KeyboardConfig, build_keys, decide, key_masses, pava
from dosewise.simkit import (
    CrmEngine,
    KeyboardEngine,
    ScenarioSpec,
    SimSummary,
    TrialResult,
    overdose_metrics,
    paper_scenarios,
    run_batch,
    run_trial,
)

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "CohortSchedule",
    "base_cohort_size",
    "build_fixed_schedule",
    "build_unequal_schedule",
    "fisher_information",
    "sqrt_table",
    "TrialState",
    "CrmConfig",
    "CrmPosterior",
    "posterior_summary",
    "recommend_next_dose",
    "Action",
    "KeySet",
    "KeyboardConfig",
    "build_keys",
    "decide",
    "key_masses",
    "pava",
    "CrmEngine",
    "KeyboardEngine",
    "ScenarioSpec",
    "SimSummary",
    "TrialResult",
    "overdose_metrics",
    "paper_scenarios",
    "run_batch",
    "run_trial",
]
