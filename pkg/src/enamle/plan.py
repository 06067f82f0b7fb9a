"""Sub-model feature selection by rotating a half-width window over each
correlated group, and the minimum ensemble size that covers every sensor."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from functools import cached_property

from .correlation import GroupSet

log = logging.getLogger(__name__)


class PlanError(ValueError):
    pass


def window_width(n: int) -> int:
    return (n + 1) // 2


def window(group, shift: int) -> list:
    """Leftmost ceil(n/2) members of ``group`` after ``shift`` left rotations."""
    n = len(group)
    if n == 1:
        return [group[0]]
    w = window_width(n)
    return [group[(shift + k) % n] for k in range(w)]


def is_covered(sizes, m: int) -> bool:
    """True if, over shifts 0..m-1, every position of every group of size >= 2
    is inside the window at least once and outside it at least once."""
    for n in sizes:
        if n < 2:
            continue
        w = window_width(n)
        for p in range(n):
            hits = sum(1 for j in range(m) if (p - j) % n < w)
            if hits == 0 or hits == m:
                return False
    return True


def compute_min_m(gs: GroupSet) -> int:
    sizes = gs.sizes
    if not sizes:
        raise PlanError("group set is empty")
    if all(n == 1 for n in sizes):
        log.warning("all groups are singletons; no sensor can be excluded from a sub-model")
        return 1
    # a full rotation of the largest group always covers, so this terminates
    m = 1
    while not is_covered(sizes, m):
        m += 1
    return m


@dataclass(frozen=True)
class EnsemblePlan:
    group_set: GroupSet
    min_m: int
    window_widths: tuple[int, ...]
    feature_sets: tuple[tuple[str, ...], ...]
    excluded_sets: tuple[tuple[str, ...], ...]

    @property
    def m(self) -> int:
        return len(self.feature_sets)

    @property
    def sensors(self) -> list[str]:
        return self.group_set.sensors

    @cached_property
    def always_included(self) -> frozenset[str]:
        """Singleton-group sensors; they sit in every feature set."""
        return frozenset(g[0] for g in self.group_set.groups if len(g) == 1)

    def prefix(self, m: int) -> "EnsemblePlan":
        if not self.min_m <= m <= self.m:
            raise PlanError(f"ensemble size {m} outside [{self.min_m}, {self.m}]")
        return EnsemblePlan(
            self.group_set,
            self.min_m,
            self.window_widths,
            self.feature_sets[:m],
            self.excluded_sets[:m],
        )

    def to_dict(self) -> dict:
        return {
            "group_set": self.group_set.to_dict(),
            "min_m": self.min_m,
            "window_widths": list(self.window_widths),
            "feature_sets": [list(f) for f in self.feature_sets],
            "excluded_sets": [list(f) for f in self.excluded_sets],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EnsemblePlan":
        gs = GroupSet.from_dict(doc["group_set"])
        plan = build_feature_sets(gs, len(doc["feature_sets"]))
        if [list(f) for f in plan.feature_sets] != doc["feature_sets"]:
            raise PlanError("stored feature sets disagree with the rotation rule")
        return plan

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "EnsemblePlan":
        return cls.from_dict(json.loads(text))


def build_feature_sets(gs: GroupSet, m: int) -> EnsemblePlan:
    min_m = compute_min_m(gs)
    if m < min_m:
        raise PlanError(f"ensemble size {m} is below MinM={min_m}")
    feats, excl = [], []
    for j in range(m):
        chosen = [s for g in gs.groups for s in window(g, j)]
        picked = set(chosen)
        feats.append(tuple(chosen))
        excl.append(tuple(s for s in gs.sensors if s not in picked))
    widths = tuple(window_width(len(g)) for g in gs.groups)
    return EnsemblePlan(gs, min_m, widths, tuple(feats), tuple(excl))
