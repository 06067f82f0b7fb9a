"""Seeded injection of concurrent sensor failures and the rate x run sweep."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

DEFAULT_RATES = (0.05, 0.10, 0.20, 0.30, 0.40, 0.50, 0.60)


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class FailureSchedule:
    rates: tuple = DEFAULT_RATES
    runs_per_rate: int = 10
    master_seed: int = 0
    per_row: bool = False

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "rates", rates)
        if not rates:
            raise ScheduleError("at least one rate is required")
        if any(not 0.0 < r <= 1.0 for r in rates):
            raise ScheduleError("rates must lie in (0, 1]")
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ScheduleError("rates must be strictly increasing")
        if self.runs_per_rate < 1:
            raise ScheduleError("runs_per_rate must be at least 1")


def failure_count(rate: float, s: int) -> int:
    """max(1, round(rate * s)) with halves rounded up."""
    return min(s, max(1, int(math.floor(rate * s + 0.5))))


def child_seed(master_seed: int, rate_index: int, run_index: int, row: int = -1) -> int:
    # SeedSequence ignores trailing zero words, so row 0 must not be encoded as 0
    key = [master_seed, rate_index, run_index] + ([row + 1] if row >= 0 else [])
    return int(np.random.SeedSequence(key).generate_state(1, dtype=np.uint64)[0])


def inject(sensors, rate: float, seed: int) -> frozenset:
    if not 0.0 < rate <= 1.0:
        raise ScheduleError("rate must lie in (0, 1]")
    sensors = list(sensors)
    k = failure_count(rate, len(sensors))
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(sensors), size=k, replace=False)
    return frozenset(sensors[i] for i in picks)


def set_digest(failed) -> str:
    return hashlib.sha256("\x1f".join(sorted(failed)).encode()).hexdigest()[:16]


@dataclass
class RunResult:
    rate: float
    run: int
    failed: list  # one failure set per row in per-row mode, else a single set
    outcomes: list


def run_sweep(
    schedule: FailureSchedule,
    sensors,
    X_test: np.ndarray,
    engine: Callable[[np.ndarray, frozenset], list],
) -> Iterator[RunResult]:
    """Yield one tagged result per (rate, run).

    ``engine(rows, failed)`` must return one outcome per row. By default one
    failure set per run is shared by every test row; with ``per_row`` each
    row draws its own.
    """
    X_test = np.asarray(X_test, dtype=np.float64)
    if X_test.shape[0] == 0:
        raise ScheduleError("test partition is empty")
    for ri, rate in enumerate(schedule.rates):
        for run in range(schedule.runs_per_rate):
            if schedule.per_row:
                sets, outcomes = [], []
                for i in range(X_test.shape[0]):
                    f = inject(sensors, rate, child_seed(schedule.master_seed, ri, run, i))
                    sets.append(f)
                    outcomes.extend(engine(X_test[i : i + 1], f))
            else:
                f = inject(sensors, rate, child_seed(schedule.master_seed, ri, run))
                sets = [f]
                outcomes = engine(X_test, f)
            yield RunResult(rate, run, sets, outcomes)
