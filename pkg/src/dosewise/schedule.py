"""Cohort-size schedules and binomial information for dose-finding trials.

The growing schedule assigns cohort ``i`` a size of ``i/2`` rounded half away
from zero, so sizes run 1,1,2,2,3,3,4,4,...  Early cohorts stay small while
uncertainty is high; later ones grow roughly with the square root of the
accumulated sample size, which is the pace at which binomial information
accrues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence


def round_half_away(x: float) -> int:
    """Round half away from zero: 0.5 -> 1, 1.5 -> 2, 2.5 -> 3."""
    if x >= 0:
        return int(math.floor(x + 0.5))
    return -int(math.floor(-x + 0.5))


def base_cohort_size(i: int) -> int:
    """Size of the i-th cohort (1-based) under the growing rule.

    Equals ``i/2`` rounded half away from zero: 1,1,2,2,3,3,4,4,5,5,6,6,...
    """
    if i < 1:
        raise ValueError(f"cohort index must be >= 1, got {i}")
    return (i + 1) // 2


@dataclass(frozen=True)
class CohortSchedule:
    """Ordered cohort sizes summing to the total sample size."""

    total: int
    sizes: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.total < 1:
            raise ValueError(f"total must be >= 1, got {self.total}")
        if any(s < 1 for s in self.sizes):
            raise ValueError(f"every cohort size must be >= 1, got {self.sizes}")
        if sum(self.sizes) != self.total:
            raise ValueError(
                f"cohort sizes {self.sizes} sum to {sum(self.sizes)}, expected {self.total}"
            )

    @property
    def n_cohorts(self) -> int:
        return len(self.sizes)


RemainderPolicy = Callable[[int, int, int, int], list[int]]
"""Endgame hook: (remainder, i, s_i, s_next) -> final cohort sizes.

Invoked once the remaining patient count no longer covers the next two base
cohorts; must return sizes summing to the remainder.
"""


def split_or_absorb_remainder(remainder: int, i: int, s_i: int, s_next: int) -> list[int]:
    """Default endgame: emit one more base cohort when the remainder fills it
    twice over, then fold whatever is left into a single final cohort."""
    if remainder >= 2 * s_i:
        return [s_i, remainder - s_i]
    return [remainder]


def build_unequal_schedule(
    total: int, remainder_policy: RemainderPolicy = split_or_absorb_remainder
) -> CohortSchedule:
    """Growing-cohort schedule for ``total`` patients.

    Emits base sizes 1,1,2,2,3,3,... while the remaining patient count covers
    the next two base cohorts; the remainder policy then closes out the tail.
    The default policy yields e.g. 24 -> 1,1,2,2,3,3,4,4,4 and
    26 -> 1,1,2,2,3,3,4,4,6.
    """
    if total < 1:
        raise ValueError(f"total must be >= 1, got {total}")
    sizes: list[int] = []
    remaining = total
    i = 1
    while True:
        s_i = base_cohort_size(i)
        s_next = base_cohort_size(i + 1)
        if remaining >= s_i + s_next:
            sizes.append(s_i)
            remaining -= s_i
            i += 1
            continue
        tail = remainder_policy(remaining, i, s_i, s_next)
        if sum(tail) != remaining or any(s < 1 for s in tail):
            raise ValueError(f"remainder policy returned invalid tail {tail} for remainder {remaining}")
        sizes.extend(tail)
        return CohortSchedule(total=total, sizes=tuple(sizes))


def build_fixed_schedule(total: int, cohort_size: int) -> CohortSchedule:
    """Fixed-size schedule: full cohorts of ``cohort_size``, plus a smaller
    final cohort when ``total`` is not a multiple."""
    if total < 1:
        raise ValueError(f"total must be >= 1, got {total}")
    if cohort_size < 1:
        raise ValueError(f"cohort size must be >= 1, got {cohort_size}")
    sizes = [cohort_size] * (total // cohort_size)
    if total % cohort_size:
        sizes.append(total % cohort_size)
    return CohortSchedule(total=total, sizes=tuple(sizes))


@dataclass(frozen=True)
class Allocation:
    """Patient counts per dose paired with the doses' toxicity probabilities."""

    counts: tuple[int, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.counts) != len(self.probs):
            raise ValueError(
                f"counts (len {len(self.counts)}) and probs (len {len(self.probs)}) must align"
            )
        if any(c < 0 for c in self.counts):
            raise ValueError(f"counts must be non-negative, got {self.counts}")


def fisher_information(allocation: Allocation) -> float:
    """Binomial information of an allocation: sum of n_j / (p_j (1 - p_j)).

    Probabilities at 0 or 1 would make the information infinite and are
    rejected, since callers compare and report finite values.
    """
    for p in allocation.probs:
        if not 0.0 < p < 1.0:
            raise ValueError(f"toxicity probabilities must lie strictly in (0, 1), got {p}")
    return sum(n / (p * (1.0 - p)) for n, p in zip(allocation.counts, allocation.probs))


class SqrtRow(NamedTuple):
    n: int
    root: float
    rounded_root: int
    reciprocal: float


def sqrt_table(n_max: int) -> list[SqrtRow]:
    """Rows (N, sqrt(N), [sqrt(N)], 1/[sqrt(N)]) for N = 1..n_max, where [.]
    rounds half away from zero."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    rows = []
    for n in range(1, n_max + 1):
        root = math.sqrt(n)
        denom = round_half_away(root)
        rows.append(SqrtRow(n=n, root=root, rounded_root=denom, reciprocal=1.0 / denom))
    return rows
