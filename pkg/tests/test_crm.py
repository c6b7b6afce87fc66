import math

import numpy as np
import pytest

from oracles import crm_trapezoid_mean, crm_trapezoid_tox_means, enumerate_states
from dosewise.crm import (
    POSTERIOR_MEAN,
    CrmConfig,
    closest_to_target,
    log_unnormalized_posterior,
    posterior_summary,
    recommend_next_dose,
    select_mtd,
)
from dosewise.trial import TrialState

STANDARD_SKELETON = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)


@pytest.fixture(scope="module")
def cfg():
    return CrmConfig(skeleton=STANDARD_SKELETON, target=0.3)


def test_config_validation():
    with pytest.raises(ValueError):
        CrmConfig(skeleton=(0.3, 0.2))
    with pytest.raises(ValueError):
        CrmConfig(skeleton=(0.1, 1.0))
    with pytest.raises(ValueError):
        CrmConfig(skeleton=(0.1, 0.2), target=1.2)
    with pytest.raises(ValueError):
        CrmConfig(skeleton=(0.1, 0.2), prior_variance=0.0)
    with pytest.raises(ValueError):
        CrmConfig(skeleton=(0.1, 0.2), estimator_mode="mystery")


def test_log_posterior_empty_state_at_zero(cfg):
    state = TrialState.empty(6)
    assert log_unnormalized_posterior(0.0, state, cfg) == 0.0


def test_log_posterior_single_dlt_example(cfg):
    state = TrialState(n=(1, 0, 0, 0, 0, 0), y=(1, 0, 0, 0, 0, 0))
    assert log_unnormalized_posterior(0.0, state, cfg) == pytest.approx(
        math.log(0.1), abs=1e-12
    )


def test_log_posterior_infinite_alpha(cfg):
    state = TrialState(n=(2, 0, 0, 0, 0, 0), y=(1, 0, 0, 0, 0, 0))
    assert log_unnormalized_posterior(math.inf, state, cfg) == -math.inf
    assert log_unnormalized_posterior(-math.inf, state, cfg) == -math.inf


def test_log_posterior_dimension_mismatch(cfg):
    with pytest.raises(ValueError):
        log_unnormalized_posterior(0.0, TrialState.empty(3), cfg)


def test_posterior_empty_state_is_prior(cfg):
    post = posterior_summary(TrialState.empty(6), cfg)
    assert post.alpha_mean == pytest.approx(0.0, abs=1e-9)
    assert post.alpha_second_moment == pytest.approx(1.34, abs=1e-6)
    for est, p in zip(post.tox_estimates, STANDARD_SKELETON):
        assert est == pytest.approx(p, abs=1e-12)


def test_posterior_matches_oracle_single_dose():
    cfg1 = CrmConfig(skeleton=(0.1,), target=0.3, prior_variance=1.34)
    state = TrialState(n=(1,), y=(1,))
    post = posterior_summary(state, cfg1)
    # frozen from the step-1e-4 trapezoid oracle on [-10, 10]
    assert post.alpha_mean == pytest.approx(-1.2219854101982475, abs=1e-6)
    live = crm_trapezoid_mean((1,), (1,), (0.1,), 1.34)
    assert post.alpha_mean == pytest.approx(live, abs=1e-6)


def test_posterior_matches_oracle_spot_states(cfg):
    for n, y in [
        ((3, 3, 0, 0, 0, 0), (0, 3, 0, 0, 0, 0)),
        ((1, 2, 6, 3, 0, 0), (0, 0, 2, 2, 0, 0)),
        ((6, 0, 0, 0, 0, 0), (6, 0, 0, 0, 0, 0)),
    ]:
        post = posterior_summary(TrialState(n=n, y=y), cfg)
        oracle = crm_trapezoid_mean(n, y, STANDARD_SKELETON, 1.34)
        assert post.alpha_mean == pytest.approx(oracle, abs=1e-6)
        e = math.exp(oracle)
        for est, p in zip(post.tox_estimates, STANDARD_SKELETON):
            assert est == pytest.approx(p**e, abs=1e-6)


def test_posterior_mean_estimator_matches_oracle():
    cfg_pm = CrmConfig(skeleton=(0.1, 0.2, 0.3), target=0.3, estimator_mode=POSTERIOR_MEAN)
    state = TrialState(n=(3, 3, 2), y=(0, 1, 2))
    post = posterior_summary(state, cfg_pm)
    oracle = crm_trapezoid_tox_means((3, 3, 2), (0, 1, 2), (0.1, 0.2, 0.3), 1.34)
    for est, ref in zip(post.tox_estimates, oracle):
        assert est == pytest.approx(ref, abs=1e-6)


def test_tox_estimates_strictly_increasing(cfg):
    for n, y in [
        ((0, 0, 0, 0, 0, 0), (0, 0, 0, 0, 0, 0)),
        ((3, 3, 3, 0, 0, 0), (0, 1, 2, 0, 0, 0)),
        ((6, 6, 6, 6, 6, 6), (0, 0, 1, 2, 3, 6)),
    ]:
        post = posterior_summary(TrialState(n=n, y=y), cfg)
        assert all(b > a for a, b in zip(post.tox_estimates, post.tox_estimates[1:]))


def test_extra_dlt_never_raises_alpha_mean():
    cfg3 = CrmConfig(skeleton=(0.1, 0.2, 0.3), target=0.3)
    ns, ys = enumerate_states(n_doses=3, max_total=4)
    means = {}
    for n, y in zip(ns, ys):
        state = TrialState(n=tuple(int(v) for v in n), y=tuple(int(v) for v in y))
        means[(state.n, state.y)] = posterior_summary(state, cfg3).alpha_mean
    for (n, y), mean in means.items():
        for j in range(3):
            if y[j] < n[j]:
                bumped = tuple(v + 1 if k == j else v for k, v in enumerate(y))
                assert means[(n, bumped)] <= mean + 1e-12


def test_closest_to_target_breaks_ties_low():
    assert closest_to_target((0.25, 0.375), 0.3125) == 1  # exact fp tie
    assert closest_to_target((0.28, 0.32, 0.5), 0.3) == 1
    assert closest_to_target((0.1, 0.3, 0.5), 0.3) == 2


def test_recommend_empty_state_clamps_to_one_step(cfg):
    state = TrialState.empty(6)  # prior argmin is dose 3
    assert recommend_next_dose(state, cfg) == 2


def test_recommend_tie_goes_low():
    cfg_tie = CrmConfig(skeleton=(0.28, 0.32, 0.45, 0.55), target=0.3)
    state = TrialState.empty(4)
    state = TrialState(n=state.n, y=state.y, current_dose=2)
    assert recommend_next_dose(state, cfg_tie) == 1


def test_recommend_backs_off_heavy_toxicity(cfg):
    state = TrialState(n=(3, 3, 0, 0, 0, 0), y=(0, 3, 0, 0, 0, 0), current_dose=2)
    assert recommend_next_dose(state, cfg) <= 2


def test_recommend_never_skips(cfg):
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = tuple(int(v) for v in rng.integers(0, 5, size=6))
        y = tuple(int(rng.integers(0, nj + 1)) for nj in n)
        cur = int(rng.integers(1, 7))
        state = TrialState(n=n, y=y, current_dose=cur)
        assert abs(recommend_next_dose(state, cfg) - cur) <= 1


def test_select_mtd_empty_state_is_dose_three(cfg):
    assert select_mtd(TrialState.empty(6), cfg) == 3


def test_select_mtd_all_dlts_at_lowest(cfg):
    state = TrialState(n=(6, 0, 0, 0, 0, 0), y=(6, 0, 0, 0, 0, 0))
    assert select_mtd(state, cfg) == 1


def test_select_mtd_weakly_increases_as_dlts_drop(cfg):
    base = (3, 3, 3, 3, 0, 0)
    for y in [(1, 1, 2, 3, 0, 0), (0, 1, 1, 2, 0, 0), (0, 0, 1, 1, 0, 0)]:
        for j in range(4):
            if y[j] == 0:
                continue
            fewer = tuple(v - 1 if k == j else v for k, v in enumerate(y))
            high = select_mtd(TrialState(n=base, y=fewer), cfg)
            low = select_mtd(TrialState(n=base, y=y), cfg)
            assert high >= low


def test_select_mtd_deterministic(cfg):
    state = TrialState(n=(1, 1, 2, 2, 3, 3), y=(0, 0, 1, 1, 1, 2))
    assert select_mtd(state, cfg) == select_mtd(state, cfg)
    first = posterior_summary(state, cfg)
    second = posterior_summary(state, cfg)
    assert first == second
