"""Continual reassessment engine on the one-parameter power model.

Dose toxicity is modeled as ``skeleton[j] ** exp(alpha)`` with a normal prior
on ``alpha``.  Posterior summaries come from deterministic composite-Simpson
quadrature on a fixed symmetric range, refined by interval doubling until the
normalizer and posterior moments stabilize, so results are bit-reproducible
across runs and worker counts (no stochastic integration anywhere).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from dosewise.trial import TrialState

PLUGIN = "plugin"
POSTERIOR_MEAN = "posterior-mean"

ALPHA_BOUND = 10.0
_MIN_LEVEL = 7
_MAX_LEVEL = 15
_REFINE_TOL = 1e-8
_LOG_HALF = -math.log(2.0)


class QuadratureError(RuntimeError):
    """Quadrature failed to stabilize within the refinement limit; this
    indicates a configuration bug (e.g. a degenerate skeleton), not data."""


@dataclass(frozen=True)
class CrmConfig:
    """Skeleton, target toxicity, and prior for the power-model engine.

    ``prior_variance`` is the variance of the normal prior on alpha.
    ``estimator_mode`` selects between plugging the posterior mean of alpha
    into the model (default) and posterior means of the per-dose toxicities.
    """

    skeleton: tuple[float, ...]
    target: float = 0.3
    prior_variance: float = 1.34
    estimator_mode: str = PLUGIN

    def __post_init__(self) -> None:
        object.__setattr__(self, "skeleton", tuple(float(p) for p in self.skeleton))
        if not self.skeleton:
            raise ValueError("skeleton must not be empty")
        for p in self.skeleton:
            if not 0.0 < p < 1.0:
                raise ValueError(f"skeleton values must lie in (0, 1), got {p}")
        if any(b <= a for a, b in zip(self.skeleton, self.skeleton[1:])):
            raise ValueError(f"skeleton must be strictly increasing, got {self.skeleton}")
        if not 0.0 < self.target < 1.0:
            raise ValueError(f"target must lie in (0, 1), got {self.target}")
        if self.prior_variance <= 0:
            raise ValueError(f"prior_variance must be positive, got {self.prior_variance}")
        if self.estimator_mode not in (PLUGIN, POSTERIOR_MEAN):
            raise ValueError(f"unknown estimator_mode {self.estimator_mode!r}")

    @property
    def n_doses(self) -> int:
        return len(self.skeleton)


@dataclass(frozen=True)
class CrmPosterior:
    alpha_mean: float
    alpha_second_moment: float
    tox_estimates: tuple[float, ...]
    log_normalizer: float


def _log1mexp(t: np.ndarray) -> np.ndarray:
    """log(1 - exp(t)) elementwise for t < 0, stable at both ends."""
    out = np.empty_like(t)
    small = t < _LOG_HALF
    out[small] = np.log1p(-np.exp(t[small]))
    rest = ~small
    out[rest] = np.log(-np.expm1(t[rest]))
    return out


def log_unnormalized_posterior(alpha: float, state: TrialState, cfg: CrmConfig) -> float:
    """Log joint density (up to a constant) of data and prior at ``alpha``.

    Doses with no patients contribute nothing; the ``log(1 - p**e)`` term uses
    a log-of-one-minus-exponential form so tiny ``e * log(p)`` stays accurate.
    """
    _check_dims(state, cfg)
    if math.isinf(alpha):
        return -math.inf
    e = math.exp(alpha)
    total = -(alpha * alpha) / (2.0 * cfg.prior_variance)
    for nj, yj, p in zip(state.n, state.y, cfg.skeleton):
        if nj == 0:
            continue
        t = e * math.log(p)
        if yj:
            total += yj * t
        if nj - yj:
            if t < _LOG_HALF:
                log1mp = math.log1p(-math.exp(t))
            else:
                total_arg = -math.expm1(t)
                if total_arg <= 0.0:
                    return -math.inf
                log1mp = math.log(total_arg)
            total += (nj - yj) * log1mp
    return total


class _GridFeatures:
    """Per-level quadrature features for one (skeleton, prior variance) pair.

    ``exponents[j]`` holds exp(alpha) * log(skeleton[j]) on the grid and
    ``log_one_minus`` its log(1 - p**e) counterpart, so a state's log
    posterior is two small matrix-vector products.
    """

    __slots__ = ("alphas", "weights", "walpha", "walpha2", "prior", "exponents", "log_one_minus", "powers")

    def __init__(self, skeleton: tuple[float, ...], prior_variance: float, level: int):
        n_intervals = 2**level
        alphas, h = np.linspace(-ALPHA_BOUND, ALPHA_BOUND, n_intervals + 1, retstep=True)
        coeff = np.ones(n_intervals + 1)
        coeff[1:-1:2] = 4.0
        coeff[2:-1:2] = 2.0
        weights = coeff * (h / 3.0)
        log_p = np.log(np.asarray(skeleton))
        e = np.exp(alphas)
        exponents = np.outer(log_p, e)  # (J, G)
        self.alphas = alphas
        self.weights = weights
        self.walpha = weights * alphas
        self.walpha2 = self.walpha * alphas
        self.prior = -(alphas * alphas) / (2.0 * prior_variance)
        self.exponents = exponents
        self.log_one_minus = _log1mexp(exponents)
        self.powers: np.ndarray | None = None  # exp(exponents), built on demand

    def dose_powers(self) -> np.ndarray:
        if self.powers is None:
            self.powers = np.exp(self.exponents)
        return self.powers


_FEATURE_CACHE: dict[tuple, dict[int, _GridFeatures]] = {}


def _features(cfg: CrmConfig, level: int) -> _GridFeatures:
    key = (cfg.skeleton, cfg.prior_variance)
    levels = _FEATURE_CACHE.setdefault(key, {})
    feats = levels.get(level)
    if feats is None:
        feats = _GridFeatures(cfg.skeleton, cfg.prior_variance, level)
        levels[level] = feats
    return feats


def _check_dims(state: TrialState, cfg: CrmConfig) -> None:
    if state.n_doses != cfg.n_doses:
        raise ValueError(
            f"state has {state.n_doses} doses but config has {cfg.n_doses}"
        )


def _level_summary(
    state_y: np.ndarray, state_m: np.ndarray, feats: _GridFeatures, want_tox: bool
) -> tuple[float, float, float, np.ndarray | None]:
    log_post = state_y @ feats.exponents + state_m @ feats.log_one_minus + feats.prior
    peak = log_post.max()
    g = np.exp(log_post - peak)
    z = feats.weights @ g
    log_norm = peak + math.log(z)
    mean = (feats.walpha @ g) / z
    second = (feats.walpha2 @ g) / z
    tox = None
    if want_tox:
        tox = (feats.dose_powers() @ (feats.weights * g)) / z
    return log_norm, mean, second, tox


def posterior_summary(state: TrialState, cfg: CrmConfig) -> CrmPosterior:
    """Posterior moments of alpha and per-dose toxicity estimates.

    Composite Simpson on alpha in [-10, 10]; the interval count doubles until
    successive refinements agree to 1e-8 on the normalizer and moments.
    """
    _check_dims(state, cfg)
    want_tox = cfg.estimator_mode == POSTERIOR_MEAN
    state_y = np.asarray(state.y, dtype=float)
    state_m = np.asarray(state.n, dtype=float) - state_y
    prev = _level_summary(state_y, state_m, _features(cfg, _MIN_LEVEL), want_tox)
    for level in range(_MIN_LEVEL + 1, _MAX_LEVEL + 1):
        cur = _level_summary(state_y, state_m, _features(cfg, level), want_tox)
        close = (
            abs(cur[0] - prev[0]) < _REFINE_TOL
            and abs(cur[1] - prev[1]) < _REFINE_TOL
            and abs(cur[2] - prev[2]) < _REFINE_TOL
        )
        if close and want_tox:
            close = bool(np.max(np.abs(cur[3] - prev[3])) < _REFINE_TOL)
        if close:
            log_norm, mean, second, tox = cur
            if want_tox:
                estimates = tuple(float(t) for t in tox)
            else:
                e = math.exp(mean)
                estimates = tuple(p**e for p in cfg.skeleton)
            return CrmPosterior(
                alpha_mean=float(mean),
                alpha_second_moment=float(second),
                tox_estimates=estimates,
                log_normalizer=float(log_norm),
            )
        prev = cur
    raise QuadratureError(
        f"posterior quadrature did not stabilize to {_REFINE_TOL} within "
        f"2**{_MAX_LEVEL} intervals for state n={state.n}, y={state.y}"
    )


def closest_to_target(tox_estimates: tuple[float, ...], target: float) -> int:
    """1-based index of the estimate nearest ``target``; ties go to the lower
    dose on safety grounds."""
    best = 1
    best_dist = abs(tox_estimates[0] - target)
    for j, est in enumerate(tox_estimates[1:], start=2):
        dist = abs(est - target)
        if dist < best_dist:
            best = j
            best_dist = dist
    return best


def recommend_next_dose(state: TrialState, cfg: CrmConfig) -> int:
    """Model-recommended dose for the next cohort, limited to one level of
    movement from the current dose (no skipping in either direction)."""
    post = posterior_summary(state, cfg)
    j = closest_to_target(post.tox_estimates, cfg.target)
    low = max(1, state.current_dose - 1)
    high = min(cfg.n_doses, state.current_dose + 1)
    return min(max(j, low), high)


def select_mtd(state: TrialState, cfg: CrmConfig) -> int:
    """Final MTD choice: unconstrained nearest-to-target over all doses."""
    post = posterior_summary(state, cfg)
    return closest_to_target(post.tox_estimates, cfg.target)
