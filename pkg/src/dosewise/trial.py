"""Shared trial-progress state used by both decision engines."""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class TrialState:
    """Per-dose patient and DLT tallies plus the trial cursor.

    ``current_dose`` is the 1-based level the most recent cohort received;
    ``cohort_index`` counts completed cohorts.
    """

    n: tuple[int, ...]
    y: tuple[int, ...]
    current_dose: int = 1
    cohort_index: int = 0

    def __post_init__(self) -> None:
        if len(self.n) != len(self.y):
            raise ValueError(f"n (len {len(self.n)}) and y (len {len(self.y)}) must align")
        if not self.n:
            raise ValueError("at least one dose level is required")
        for j, (nj, yj) in enumerate(zip(self.n, self.y), start=1):
            if nj < 0 or yj < 0 or yj > nj:
                raise ValueError(f"dose {j}: need 0 <= y ({yj}) <= n ({nj})")
        if not 1 <= self.current_dose <= len(self.n):
            raise ValueError(
                f"current_dose {self.current_dose} outside 1..{len(self.n)}"
            )
        if self.cohort_index < 0:
            raise ValueError(f"cohort_index must be >= 0, got {self.cohort_index}")

    @property
    def n_doses(self) -> int:
        return len(self.n)

    @property
    def total_treated(self) -> int:
        return sum(self.n)

    @classmethod
    def empty(cls, n_doses: int) -> "TrialState":
        return cls(n=(0,) * n_doses, y=(0,) * n_doses, current_dose=1, cohort_index=0)

    def after_cohort(self, dose: int, size: int, dlts: int) -> "TrialState":
        """State once a cohort of ``size`` patients at ``dose`` reports ``dlts``."""
        if not 1 <= dose <= self.n_doses:
            raise ValueError(f"dose {dose} outside 1..{self.n_doses}")
        if size < 1:
            raise ValueError(f"cohort size must be >= 1, got {size}")
        if not 0 <= dlts <= size:
            raise ValueError(f"DLT count {dlts} outside 0..{size}")
        n = list(self.n)
        y = list(self.y)
        n[dose - 1] += size
        y[dose - 1] += dlts
        return replace(
            self,
            n=tuple(n),
            y=tuple(y),
            current_dose=dose,
            cohort_index=self.cohort_index + 1,
        )
