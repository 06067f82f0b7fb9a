"""Inference over a trained ensemble: the five-stage SECOE pipeline
(find, detect, impute, infer, vote) and the ENAMLE policy that adds
threshold-based model selection (TBMS) and missing-rate routing (MDRMS).

The batched functions evaluate many rows that share one failed-sensor set;
find/detect then run once and every row gets the same stage counts as the
single-request path would give it.
"""

from __future__ import annotations

import math
import time
from collections import Counter
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .learners import TrainedEnsemble
from .metering import STAGES
from .plan import EnsemblePlan

BASE = "base"
SECOE = "secoe"
TBMS = "tbms"
MODERATE_LARGE = "moderate_large"
HIGH_SMALL = "high_small"
SINGLE_BEST = "single_best"

DEFAULT_LOW_UPPER = 0.15
DEFAULT_MODERATE_UPPER = 0.45
DEFAULT_MIN_VOTE = 3


class EngineError(ValueError):
    pass


@dataclass(frozen=True)
class InferenceRequest:
    values: Mapping[str, float]
    failed: frozenset

    def __post_init__(self):
        object.__setattr__(self, "failed", frozenset(self.failed))

    def vector(self, sensor_names) -> np.ndarray:
        unknown = self.failed.difference(sensor_names)
        if unknown:
            raise EngineError(f"failed sensors not in the ensemble: {sorted(unknown)}")
        x = np.empty(len(sensor_names))
        for i, s in enumerate(sensor_names):
            if s in self.failed:
                x[i] = np.nan
            elif s in self.values:
                x[i] = float(self.values[s])
            else:
                raise EngineError(f"no value for live sensor {s!r}")
        return x


def _parse_t(t):
    if isinstance(t, str):
        t = t.strip()
        if t.endswith("%"):
            return float(t[:-1]) / 100.0
        return float(t) if "." in t else int(t)
    return t


@dataclass(frozen=True)
class EnamleConfig:
    small_m: int
    large_m: int
    t: float | int = 0.5
    low_upper: float = DEFAULT_LOW_UPPER
    moderate_upper: float = DEFAULT_MODERATE_UPPER
    min_vote: int = DEFAULT_MIN_VOTE
    tbms: bool = True

    def __post_init__(self):
        t = _parse_t(self.t)
        object.__setattr__(self, "t", t)
        if isinstance(t, bool) or not isinstance(t, (int, float)):
            raise EngineError("t must be a fraction in (0, 1] or a positive integer")
        if isinstance(t, float) and not 0.0 < t <= 1.0:
            raise EngineError("fractional t must lie in (0, 1]")
        if isinstance(t, int) and t < 1:
            raise EngineError("integer t must be positive")
        if not 0.0 < self.low_upper < self.moderate_upper < 1.0:
            raise EngineError("need 0 < low_upper < moderate_upper < 1")
        if self.small_m > self.large_m:
            raise EngineError("small_m must not exceed large_m")
        if self.min_vote < 1:
            raise EngineError("min_vote must be positive")

    def check(self, plan: EnsemblePlan) -> None:
        if self.small_m < plan.min_m:
            raise EngineError(f"small_m={self.small_m} is below MinM={plan.min_m}")
        if self.large_m > plan.m:
            raise EngineError(f"large_m={self.large_m} exceeds the {plan.m} trained sub-models")


@dataclass(frozen=True)
class InferenceOutcome:
    label: object
    path: str
    participants: tuple
    imputed_count: int
    op_costs: dict
    op_seconds: dict | None = None

    def to_dict(self) -> dict:
        label = self.label.item() if hasattr(self.label, "item") else self.label
        return {
            "label": label,
            "path": self.path,
            "participants": list(self.participants),
            "imputed_count": self.imputed_count,
            "op_costs": dict(self.op_costs),
        }


# ---------------------------------------------------------------------------
# stage operations


def missing_rate(req: InferenceRequest, s: int) -> float:
    if s < 1:
        raise EngineError("sensor count must be positive")
    return len(req.failed) / s


def find_suitable(failed, plan: EnsemblePlan, m_active: int, training_accuracy=None):
    """Sub-models among the first ``m_active`` whose feature sets share the
    fewest sensors with ``failed``, as ``[(index, match), ...]`` ordered by
    match, then training accuracy (high first), then index."""
    if not 1 <= m_active <= plan.m:
        raise EngineError(f"m_active={m_active} outside [1, {plan.m}]")
    failed = frozenset(failed)
    matches = [len(failed.intersection(plan.feature_sets[j])) for j in range(m_active)]
    low = min(matches)
    acc = training_accuracy if training_accuracy is not None else [0.0] * m_active
    suitable = [j for j in range(m_active) if matches[j] == low]
    suitable.sort(key=lambda j: (matches[j], -acc[j], j))
    return [(j, matches[j]) for j in suitable]


def _select(suitable, t, min_vote, apply_tbms):
    n = len(suitable)
    if n == 0:
        raise EngineError("no suitable sub-models")
    if n < min_vote:
        return list(suitable[:1]), True
    if apply_tbms:
        t = _parse_t(t)
        if isinstance(t, int) and not isinstance(t, bool):
            k = min(t, n)
        else:
            k = math.ceil(t * n)
        if k < min_vote:
            return list(suitable[:1]), True
        return list(suitable[:k]), False
    return list(suitable), False


def select_models(suitable, t, min_vote: int = DEFAULT_MIN_VOTE, apply_tbms: bool = True):
    """Indices allowed to vote; falls back to the single most suitable model
    whenever fewer than ``min_vote`` would take part."""
    return _select(list(suitable), t, min_vote, apply_tbms)[0]


def impute(req: InferenceRequest, feature_set, means: Mapping[str, float]):
    """Values over ``feature_set`` with failed sensors replaced by their
    training means, and the number of replacements."""
    out, count = [], 0
    for s in feature_set:
        if s in req.failed:
            if s not in means:
                raise EngineError(f"no imputation mean for sensor {s!r}")
            out.append(float(means[s]))
            count += 1
        else:
            out.append(float(req.values[s]))
    return out, count


def vote(predictions, training_accuracy):
    """Majority class of ``[(model_index, class), ...]``.

    Ties go to the class backed by the most accurate (on training data) model
    among the tied voters, then to the lowest model index.
    """
    if not predictions:
        raise EngineError("nothing to vote on")
    counts = Counter(c for _, c in predictions)
    top = max(counts.values())
    tied = {c for c, k in counts.items() if k == top}
    if len(tied) == 1:
        return next(iter(tied))
    j, c = min(
        ((j, c) for j, c in predictions if c in tied),
        key=lambda jc: (-training_accuracy[jc[0]], jc[0]),
    )
    return c


# ---------------------------------------------------------------------------
# batched core


class _Clock:
    def __init__(self, enabled):
        self.enabled = enabled
        self.seconds = dict.fromkeys(STAGES, 0.0)
        self._t = time.perf_counter() if enabled else 0.0

    def lap(self, stage):
        if self.enabled:
            now = time.perf_counter()
            self.seconds[stage] += now - self._t
            self._t = now


def _failed_index(ens: TrainedEnsemble, failed) -> np.ndarray:
    failed = frozenset(failed)
    unknown = failed.difference(ens.sensor_index)
    if unknown:
        raise EngineError(f"failed sensors not in the ensemble: {sorted(unknown)}")
    return np.array(sorted(ens.sensor_index[s] for s in failed), dtype=np.intp)


def _outcomes(labels, path, participants, imputed, costs, clock, n):
    per_row = None
    if clock.enabled:
        per_row = {s: clock.seconds[s] / n for s in STAGES}
    return [
        InferenceOutcome(lab, path, participants, imputed, costs, per_row) for lab in labels
    ]


def base_infer_batch(X, failed, ens: TrainedEnsemble, timed=False):
    """Base model over all sensors, every failed sensor mean-imputed."""
    X = np.array(X, dtype=np.float64, ndmin=2)
    clock = _Clock(timed)
    fidx = _failed_index(ens, failed)
    if len(fidx):
        X[:, fidx] = ens.imputer_means[fidx]
    clock.lap("impute")
    pred = ens.base_model.predict(X)
    clock.lap("infer")
    costs = {"find": 0, "detect": 0, "impute": len(fidx), "infer": ens.n_sensors, "vote": 0}
    labels = ens.classes[pred]
    return _outcomes(labels, BASE, (), len(fidx), costs, clock, X.shape[0])


def ensemble_infer_batch(
    X, failed, ens: TrainedEnsemble, m_active, *, path, apply_tbms=False,
    t=0.5, min_vote=DEFAULT_MIN_VOTE, timed=False,
):
    """Five-stage pipeline over the first ``m_active`` sub-models."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    n = X.shape[0]
    clock = _Clock(timed)
    failed = frozenset(failed)
    _failed_index(ens, failed)
    suitable = find_suitable(failed, ens.plan, m_active, ens.training_accuracy)
    clock.lap("find")
    chosen, fell_back = _select([j for j, _ in suitable], t, min_vote, apply_tbms)
    clock.lap("detect")
    if fell_back:
        path = SINGLE_BEST
    inputs, imputed = [], 0
    for j in chosen:
        cols = ens.feature_idx[j]
        Xj = X[:, cols]
        dead = np.flatnonzero([ens.sensor_names[c] in failed for c in cols])
        if len(dead):
            Xj[:, dead] = ens.imputer_means[cols[dead]]
            imputed += len(dead)
        inputs.append(Xj)
    clock.lap("impute")
    preds = [ens.sub_models[j].predict(Xj) for j, Xj in zip(chosen, inputs)]
    clock.lap("infer")
    if len(chosen) == 1:
        winners = preds[0]
    else:
        P = np.column_stack(preds)
        acc = ens.training_accuracy
        winners = np.array([vote(list(zip(chosen, row.tolist())), acc) for row in P])
    clock.lap("vote")
    costs = {
        "find": m_active,
        "detect": len(suitable),
        "impute": imputed,
        "infer": int(sum(len(ens.feature_idx[j]) for j in chosen)),
        "vote": len(chosen),
    }
    return _outcomes(ens.classes[winners], path, tuple(chosen), imputed, costs, clock, n)


def secoe_infer_batch(X, failed, ens: TrainedEnsemble, m_active, timed=False, min_vote=DEFAULT_MIN_VOTE):
    if m_active < ens.plan.min_m:
        raise EngineError(f"m_active={m_active} is below MinM={ens.plan.min_m}")
    if not failed:
        out = base_infer_batch(X, failed, ens, timed)
        return out
    return ensemble_infer_batch(
        X, failed, ens, m_active, path=SECOE, apply_tbms=False, min_vote=min_vote, timed=timed
    )


def route(rate: float, cfg: EnamleConfig):
    """``(path, m_active, apply_tbms)`` for a missing-data rate."""
    if rate <= 0.0:
        return BASE, 0, False
    if rate <= cfg.low_upper:
        return TBMS, cfg.small_m, cfg.tbms
    if rate <= cfg.moderate_upper:
        return MODERATE_LARGE, cfg.large_m, False
    return HIGH_SMALL, cfg.small_m, False


def enamle_infer_batch(X, failed, ens: TrainedEnsemble, cfg: EnamleConfig, timed=False):
    cfg.check(ens.plan)
    path, m_active, tbms = route(len(frozenset(failed)) / ens.n_sensors, cfg)
    if path == BASE:
        return base_infer_batch(X, failed, ens, timed)
    return ensemble_infer_batch(
        X, failed, ens, m_active, path=path, apply_tbms=tbms,
        t=cfg.t, min_vote=cfg.min_vote, timed=timed,
    )


# ---------------------------------------------------------------------------
# single requests


def base_infer(req: InferenceRequest, ens: TrainedEnsemble) -> InferenceOutcome:
    return base_infer_batch(req.vector(ens.sensor_names), req.failed, ens)[0]


def secoe_infer(req: InferenceRequest, ens: TrainedEnsemble, m_active: int) -> InferenceOutcome:
    return secoe_infer_batch(req.vector(ens.sensor_names), req.failed, ens, m_active)[0]


def enamle_infer(req: InferenceRequest, ens: TrainedEnsemble, cfg: EnamleConfig) -> InferenceOutcome:
    return enamle_infer_batch(req.vector(ens.sensor_names), req.failed, ens, cfg)[0]
