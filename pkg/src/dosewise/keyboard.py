"""Keyboard design engine: beta posteriors over equal-width dosing intervals.

Each dose keeps an independent beta posterior on its toxicity probability.
The unit interval is tiled with keys the width of the target dosing interval;
the key holding the most posterior mass, relative to the target key, decides
escalation.  Final MTD selection isotonizes per-dose posterior means.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field
from typing import Sequence, TextIO

from dosewise.special import betainc
from dosewise.trial import TrialState

_ALIGN_EPS = 1e-9


class Action(enum.Enum):
    ESCALATE = "E"
    STAY = "S"
    DEESCALATE = "D"
    DEESCALATE_ELIMINATE = "DU"


@dataclass(frozen=True)
class KeySet:
    """Equal-width probability intervals tiling [0, 1] around the target key.

    Strips at either boundary narrower than one key width are excluded, so
    key masses may sum to less than one.
    """

    target_key: tuple[float, float]
    keys: tuple[tuple[float, float], ...]
    target_index: int

    def __post_init__(self) -> None:
        width = self.target_key[1] - self.target_key[0]
        for lo, hi in self.keys:
            if abs((hi - lo) - width) > _ALIGN_EPS:
                raise ValueError(f"key ({lo}, {hi}) does not match target width {width}")
        for (_, hi), (lo, _) in zip(self.keys, self.keys[1:]):
            if abs(hi - lo) > _ALIGN_EPS:
                raise ValueError("keys must be contiguous and ordered")
        if self.keys[self.target_index] != self.target_key:
            raise ValueError("target_index does not point at the target key")

    @property
    def n_keys(self) -> int:
        return len(self.keys)


def build_keys(interval: tuple[float, float]) -> KeySet:
    """Tile [0, 1] with keys the width of ``interval``, dropping the residual
    strips at 0 and 1 that cannot hold a full key."""
    lower, upper = interval
    if not (0.0 < lower < upper < 1.0):
        raise ValueError(f"need 0 < lower < upper < 1, got ({lower}, {upper})")
    width = upper - lower
    n_left = int((lower + _ALIGN_EPS) / width)
    n_right = int((1.0 - upper + _ALIGN_EPS) / width)
    keys = tuple(
        (lower + k * width, upper + k * width) for k in range(-n_left, n_right + 1)
    )
    return KeySet(target_key=(lower, upper), keys=keys, target_index=n_left)


@dataclass(frozen=True)
class KeyboardConfig:
    """Target toxicity, key tiling, and the beta priors for decisions and
    final selection.  Overdose elimination is off by default."""

    target: float
    keyset: KeySet
    prior_alpha: float = 1.0
    prior_beta: float = 1.0
    elimination_enabled: bool = False
    elimination_threshold: float = 0.95
    selection_prior_alpha: float = 0.05
    selection_prior_beta: float = 0.05

    def __post_init__(self) -> None:
        lo, hi = self.keyset.target_key
        if not lo <= self.target <= hi:
            raise ValueError(f"target {self.target} outside the target key ({lo}, {hi})")
        for name in ("prior_alpha", "prior_beta", "selection_prior_alpha", "selection_prior_beta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_interval(
        cls, target: float = 0.3, interval: tuple[float, float] = (0.25, 0.35), **kwargs
    ) -> "KeyboardConfig":
        return cls(target=target, keyset=build_keys(interval), **kwargs)


def key_masses(n: int, y: int, cfg: KeyboardConfig) -> list[float]:
    """Posterior probability mass of each key under the per-dose beta
    posterior after ``y`` DLTs in ``n`` patients."""
    if not 0 <= y <= n:
        raise ValueError(f"need 0 <= y <= n, got y={y}, n={n}")
    a = cfg.prior_alpha + y
    b = cfg.prior_beta + (n - y)
    cdf_at = {}
    points = sorted({bound for key in cfg.keyset.keys for bound in key})
    for x in points:
        cdf_at[x] = betainc(a, b, x)
    return [cdf_at[hi] - cdf_at[lo] for lo, hi in cfg.keyset.keys]


def decide(n: int, y: int, cfg: KeyboardConfig) -> Action:
    """Escalate, stay, or de-escalate from the position of the strongest key.

    Equal-mass ties go to the key nearer the target key; a tie in both mass
    and distance means stay.
    """
    if n < 1:
        raise ValueError("a decision needs at least one treated patient")
    masses = key_masses(n, y, cfg)
    best_mass = max(masses)
    candidates = [i for i, m in enumerate(masses) if m == best_mass]
    target = cfg.keyset.target_index
    best_dist = min(abs(i - target) for i in candidates)
    nearest = [i for i in candidates if abs(i - target) == best_dist]
    if len(nearest) > 1:
        return Action.STAY
    strongest = nearest[0]
    if strongest < target:
        return Action.ESCALATE
    if strongest > target:
        return Action.DEESCALATE
    return Action.STAY


def eliminate_overdose(n: int, y: int, cfg: KeyboardConfig) -> bool:
    """Whether the dose is too toxic to revisit: posterior Pr(p > target)
    beyond the threshold, requiring at least three treated patients.
    Always false while elimination is disabled."""
    if not 0 <= y <= n:
        raise ValueError(f"need 0 <= y <= n, got y={y}, n={n}")
    if not cfg.elimination_enabled or n < 3:
        return False
    a = cfg.prior_alpha + y
    b = cfg.prior_beta + (n - y)
    return 1.0 - betainc(a, b, cfg.target) > cfg.elimination_threshold


def export_decision_table(cfg: KeyboardConfig, max_n: int, out: TextIO | None = None) -> str:
    """Clinician-facing CSV of actions for every (n, y) with n up to
    ``max_n``.  Actions are E/S/D, or DU when elimination applies."""
    buf = out if out is not None else io.StringIO()
    buf.write("n,y,action\n")
    for n in range(1, max_n + 1):
        for y in range(0, n + 1):
            action = decide(n, y, cfg)
            if action is Action.DEESCALATE and eliminate_overdose(n, y, cfg):
                action = Action.DEESCALATE_ELIMINATE
            buf.write(f"{n},{y},{action.value}\n")
    if out is not None:
        return ""
    return buf.getvalue()


def pava(values: Sequence[float], weights: Sequence[float]) -> list[float]:
    """Weighted least-squares non-decreasing fit (pool adjacent violators)."""
    if len(values) != len(weights):
        raise ValueError("values and weights must have equal length")
    if any(w <= 0 for w in weights):
        raise ValueError("weights must be positive")
    blocks: list[list[float]] = []  # [mean, weight, count]
    for v, w in zip(values, weights):
        blocks.append([float(v), float(w), 1])
        while len(blocks) > 1 and blocks[-2][0] > blocks[-1][0]:
            mean2, w2, c2 = blocks.pop()
            mean1, w1, c1 = blocks.pop()
            total = w1 + w2
            blocks.append([(mean1 * w1 + mean2 * w2) / total, total, c1 + c2])
    fitted: list[float] = []
    for mean, _, count in blocks:
        fitted.extend([mean] * count)
    return fitted


def select_mtd(state: TrialState, cfg: KeyboardConfig) -> int:
    """Final MTD: isotonized posterior toxicity means over the tried doses,
    picking the dose nearest the target.

    Ties go to the higher dose when the tied values sit below the target
    (room to push up), otherwise to the lower dose.
    """
    tried = [j for j, nj in enumerate(state.n) if nj > 0]
    if not tried:
        raise ValueError("cannot select an MTD before any dose has been tried")
    a0 = cfg.selection_prior_alpha
    b0 = cfg.selection_prior_beta
    means = [(a0 + state.y[j]) / (a0 + b0 + state.n[j]) for j in tried]
    fitted = pava(means, [state.n[j] for j in tried])
    dists = [abs(v - cfg.target) for v in fitted]
    best = min(dists)
    tied = [i for i, d in enumerate(dists) if d == best]
    if len(tied) > 1 and all(fitted[i] < cfg.target for i in tied):
        pick = tied[-1]
    else:
        pick = tied[0]
    return tried[pick] + 1
