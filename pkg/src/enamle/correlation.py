"""Pearson correlation and greedy grouping of positively correlated sensors."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset

DEFAULT_THRESHOLD = 0.7


@dataclass(frozen=True)
class GroupSet:
    groups: tuple[tuple[str, ...], ...]
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(tuple(g) for g in self.groups))
        flat = [s for g in self.groups for s in g]
        if len(flat) != len(set(flat)):
            raise ValueError("groups overlap")
        if any(len(g) == 0 for g in self.groups):
            raise ValueError("empty group")

    @property
    def sensors(self) -> list[str]:
        return [s for g in self.groups for s in g]

    @property
    def sizes(self) -> list[int]:
        return [len(g) for g in self.groups]

    def to_dict(self) -> dict:
        return {"threshold": self.threshold, "groups": [list(g) for g in self.groups]}

    @classmethod
    def from_dict(cls, doc: dict) -> "GroupSet":
        return cls(tuple(tuple(g) for g in doc["groups"]), float(doc["threshold"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "GroupSet":
        return cls.from_dict(json.loads(text))


def pearson(x, y) -> float:
    """Pearson r of two equal-length series; 0.0 if either is constant."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("series must be one-dimensional and of equal length")
    if len(x) < 2:
        raise ValueError("need at least two observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = dx @ dx
    syy = dy @ dy
    if sxx == 0.0 or syy == 0.0:
        return 0.0
    r = (dx @ dy) / np.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def correlation_matrix(X: np.ndarray) -> np.ndarray:
    """S x S Pearson matrix with the constant-column convention (r = 0)."""
    X = np.asarray(X, dtype=np.float64)
    D = X - X.mean(axis=0)
    ss = np.einsum("ij,ij->j", D, D)
    live = ss > 0.0
    norm = np.sqrt(np.where(live, ss, 1.0))
    R = (D.T @ D) / np.outer(norm, norm)
    R[~live, :] = 0.0
    R[:, ~live] = 0.0
    np.clip(R, -1.0, 1.0, out=R)
    np.fill_diagonal(R, np.where(live, 1.0, 0.0))
    return R


def group_from_matrix(names, R: np.ndarray, threshold: float) -> GroupSet:
    """Greedy agglomeration in column order.

    Each sensor looks at the sensors already placed (all earlier columns) and
    joins the group of its most correlated one if that r >= threshold;
    otherwise it opens a new group. Ties go to the earliest column.
    """
    groups: list[list[str]] = []
    owner: dict[int, int] = {}
    for j in range(len(names)):
        best_r, best_i = -np.inf, -1
        for i in range(j):
            if R[i, j] > best_r:
                best_r, best_i = R[i, j], i
        if best_i >= 0 and best_r > 0.0 and best_r >= threshold:
            g = owner[best_i]
            groups[g].append(names[j])
        else:
            g = len(groups)
            groups.append([names[j]])
        owner[j] = g
    return GroupSet(tuple(tuple(g) for g in groups), threshold)


def build_groups(d: Dataset, threshold: float = DEFAULT_THRESHOLD) -> GroupSet:
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    X, _ = d.train_xy()
    return group_from_matrix(d.sensor_names, correlation_matrix(X), threshold)
