"""Experiment runner: trains one ensemble, sweeps failure rates over several
inference arms with shared failure sets, and writes ``results.csv`` and
``summary.json``."""

from __future__ import annotations

import csv
import io
import json
import logging
import platform
import re
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import dataset as ds
from . import engine, kernels
from .correlation import DEFAULT_THRESHOLD, build_groups
from .failure import DEFAULT_RATES, FailureSchedule, run_sweep, set_digest
from .learners import ClassifierSpec, TrainedEnsemble, train
from .metering import STAGES, EnergyModel, summarize
from .plan import compute_min_m, build_feature_sets

log = logging.getLogger(__name__)

METRICS = ("accuracy", "energy", "throughput") + tuple(f"energy_{s}" for s in STAGES)
COLUMNS = ("arm", "rate", "runs", "accuracy", "energy", "unit", "throughput") + tuple(
    f"energy_{s}" for s in STAGES
)
AVERAGE = "avg"


class ConfigError(ValueError):
    pass


def config_schema() -> dict:
    return json.loads(resources.files("enamle").joinpath("config.schema.json").read_text())


_SIZE = re.compile(r"^\s*MinM\s*(?:\+\s*(\d+))?\s*$", re.IGNORECASE)


def resolve_size(value, min_m: int) -> int:
    """An ensemble size given as an integer or as ``"MinM"`` / ``"MinM+k"``."""
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    m = _SIZE.match(str(value))
    if not m:
        raise ConfigError(f"bad ensemble size {value!r}")
    return min_m + int(m.group(1) or 0)


@dataclass(frozen=True)
class Arm:
    kind: str  # base | secoe | enamle
    m: object = None
    small_m: object = None
    large_m: object = None
    t: object = 0.5
    low_upper: float = engine.DEFAULT_LOW_UPPER
    moderate_upper: float = engine.DEFAULT_MODERATE_UPPER
    min_vote: int = engine.DEFAULT_MIN_VOTE
    tbms: bool = True

    @classmethod
    def from_dict(cls, doc: dict) -> "Arm":
        doc = dict(doc)
        kind = doc.pop("type")
        return cls(kind=kind, **doc)

    def sizes(self, min_m: int) -> list[int]:
        if self.kind == "secoe":
            return [resolve_size(self.m, min_m)]
        if self.kind == "enamle":
            return [resolve_size(self.small_m, min_m), resolve_size(self.large_m, min_m)]
        return []

    def name(self, min_m: int) -> str:
        if self.kind == "base":
            return "base"
        return "-".join([self.kind, *map(str, self.sizes(min_m))])

    def enamle_config(self, min_m: int) -> engine.EnamleConfig:
        small, large = self.sizes(min_m)
        return engine.EnamleConfig(
            small, large, self.t, self.low_upper, self.moderate_upper, self.min_vote, self.tbms
        )

    def engine(self, ens: TrainedEnsemble, timed: bool):
        min_m = ens.plan.min_m
        if self.kind == "base":
            return lambda X, f: engine.base_infer_batch(X, f, ens, timed)
        if self.kind == "secoe":
            (m,) = self.sizes(min_m)
            return lambda X, f: engine.secoe_infer_batch(X, f, ens, m, timed, self.min_vote)
        cfg = self.enamle_config(min_m)
        return lambda X, f: engine.enamle_infer_batch(X, f, ens, cfg, timed)


@dataclass
class ExperimentConfig:
    dataset: dict
    arms: list[Arm]
    label_column: str = "label"
    normalize: bool = True
    train_fraction: float = 0.85
    split_seed: int = 0
    threshold: float = DEFAULT_THRESHOLD
    classifier: ClassifierSpec = field(default_factory=ClassifierSpec)
    schedule: FailureSchedule = field(default_factory=FailureSchedule)
    energy: EnergyModel = field(default_factory=EnergyModel)
    output: str = "results"
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(doc, config_schema())
        except jsonschema.ValidationError as e:
            raise ConfigError(f"invalid config: {e.message}") from None
        sched = doc.get("schedule", {})
        rates = sched.get("rates", DEFAULT_RATES)
        # accept percentages (5, 10, ...) as well as fractions
        rates = [r / 100.0 if r > 1 else r for r in rates]
        try:
            return cls(
                dataset=doc["dataset"],
                arms=[Arm.from_dict(a) for a in doc["arms"]],
                label_column=doc.get("label_column", "label"),
                normalize=doc.get("normalize", True),
                train_fraction=doc.get("train_fraction", 0.85),
                split_seed=doc.get("split_seed", 0),
                threshold=doc.get("threshold", DEFAULT_THRESHOLD),
                classifier=ClassifierSpec(**doc.get("classifier", {})),
                schedule=FailureSchedule(
                    tuple(rates), sched.get("runs", 10), sched.get("seed", 0),
                    sched.get("per_row", False),
                ),
                energy=EnergyModel.from_dict(doc.get("energy")),
                output=doc.get("output", "results"),
                raw=doc,
            )
        except (ValueError, TypeError) as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
        return cls.from_dict(doc)


def load_dataset(cfg: ExperimentConfig) -> ds.Dataset:
    src = cfg.dataset
    if "path" in src:
        d = ds.load_csv(src["path"], src.get("label_column", cfg.label_column))
    else:
        s = src["synth"]
        d = ds.synthesize(s["groups"], s["n_rows"], s["n_classes"], s["noise"], s.get("seed", 0))
    if cfg.normalize:
        d = ds.normalize(d)
    return ds.split(d, cfg.train_fraction, cfg.split_seed)


def prepare(cfg: ExperimentConfig):
    """Dataset, trained ensemble (sized for the largest arm) and MinM."""
    if not cfg.arms:
        raise ConfigError("at least one arm is required")
    d = load_dataset(cfg)
    gs = build_groups(d, cfg.threshold)
    min_m = compute_min_m(gs)
    sizes = [m for a in cfg.arms for m in a.sizes(min_m)]
    for a in cfg.arms:
        for m in a.sizes(min_m):
            if m < min_m:
                raise ConfigError(f"arm {a.name(min_m)}: size {m} is below MinM={min_m}")
        if a.kind == "enamle":
            a.enamle_config(min_m)
    plan = build_feature_sets(gs, max(sizes, default=min_m))
    log.info("groups=%s MinM=%d training %d sub-models", gs.sizes, min_m, plan.m)
    ens = train(d, plan, cfg.classifier)
    return d, ens, min_m


@dataclass
class CellStats:
    accuracy: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    throughput: list = field(default_factory=list)
    per_op: list = field(default_factory=list)


def _mean(xs):
    t = 0.0
    for x in xs:
        t += x
    return t / len(xs)


def _row(arm, rate, runs, acc, energy, unit, thr, per_op):
    row = {
        "arm": arm, "rate": rate, "runs": runs, "accuracy": acc, "energy": energy,
        "unit": unit, "throughput": thr,
    }
    for s in STAGES:
        row[f"energy_{s}"] = per_op[s]
    return row


def evaluate(cfg: ExperimentConfig, d: ds.Dataset, ens: TrainedEnsemble):
    """Sweep every arm; return report rows and per-arm failure-set digests."""
    X_test, y_test = d.test_xy()
    timed = cfg.energy.mode == "measured"
    min_m = ens.plan.min_m
    rows, digests = [], {}
    for arm in cfg.arms:
        name = arm.name(min_m)
        call = arm.engine(ens, timed)
        cells: dict[float, CellStats] = {}
        seen = []
        clock = _WallClock(call)
        for res in run_sweep(cfg.schedule, d.sensor_names, X_test, clock):
            seen.extend(set_digest(f) for f in res.failed)
            rep = summarize(res.outcomes, y_test, cfg.energy, clock.take() if timed else None)
            c = cells.setdefault(res.rate, CellStats())
            c.accuracy.append(rep.accuracy)
            c.energy.append(rep.total_energy)
            c.throughput.append(rep.throughput)
            c.per_op.append(rep.per_op_energy)
        digests[name] = seen
        arm_rows = []
        for rate in cfg.schedule.rates:
            c = cells[rate]
            per_op = {s: _mean([p[s] for p in c.per_op]) for s in STAGES}
            arm_rows.append(
                _row(
                    name, f"{rate:g}", len(c.accuracy), _mean(c.accuracy), _mean(c.energy),
                    cfg.energy.unit, _mean(c.throughput), per_op,
                )
            )
        avg = {m: _mean([r[m] for r in arm_rows]) for m in METRICS}
        arm_rows.append(
            _row(
                name, AVERAGE, cfg.schedule.runs_per_rate, avg["accuracy"], avg["energy"],
                cfg.energy.unit, avg["throughput"], {s: avg[f"energy_{s}"] for s in STAGES},
            )
        )
        rows.extend(arm_rows)
    first = next(iter(digests.values()))
    for name, seq in digests.items():
        if seq != first:
            raise RuntimeError(f"arm {name} saw different failure sets than the others")
    return rows, digests


class _WallClock:
    """Engine wrapper accumulating wall-clock milliseconds between ``take`` calls."""

    def __init__(self, call):
        self.call = call
        self.ms = 0.0

    def __call__(self, X, failed):
        start = time.perf_counter()
        out = self.call(X, failed)
        self.ms += (time.perf_counter() - start) * 1000.0
        return out

    def take(self) -> float:
        ms, self.ms = self.ms, 0.0
        return ms


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in COLUMNS])
    return buf.getvalue()


def read_report(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for m in METRICS:
            r[m] = float(r[m])
        r["runs"] = int(r["runs"])
    return rows


def environment_stamp() -> dict:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "platform": platform.platform(),
        "kernel_backend": kernels.BACKEND,
    }


def run(cfg: ExperimentConfig, output: str | Path | None = None) -> Path:
    """Execute the experiment and write ``results.csv`` and ``summary.json``
    into the output directory, which is returned."""
    out = Path(output or cfg.output)
    d, ens, min_m = prepare(cfg)
    rows, digests = evaluate(cfg, d, ens)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.csv").write_text(format_csv(rows))
        summary = {
            "config": cfg.raw,
            "environment": environment_stamp(),
            "min_m": min_m,
            "groups": ens.plan.group_set.to_dict(),
            "trained_sub_models": ens.m,
            "base_training_accuracy": ens.base_accuracy,
            "sub_model_training_accuracy": ens.training_accuracy,
            "arms": [a.name(min_m) for a in cfg.arms],
            "failure_set_digests": next(iter(digests.values())),
            "energy_unit": cfg.energy.unit,
            "averages": [r for r in rows if r["rate"] == AVERAGE],
        }
        (out / "summary.json").write_text(json.dumps(summary, indent=2, default=str) + "\n")
    except OSError as e:
        raise RuntimeError(f"cannot write results to {out}: {e}") from None
    return out


def report_diff(a, b) -> dict:
    """Relative change (b - a) / a of every metric, keyed by rate.

    ``a`` and ``b`` are the rows of one arm each (including the ``avg`` row);
    their rate grids must match.
    """
    ka = {r["rate"]: r for r in a}
    kb = {r["rate"]: r for r in b}
    if list(ka) != list(kb):
        raise ValueError(f"rate grids differ: {list(ka)} vs {list(kb)}")
    out = {}
    for rate in ka:
        out[rate] = {m: _rel(float(ka[rate][m]), float(kb[rate][m])) for m in METRICS}
    return out


def _rel(a: float, b: float) -> float:
    if a == 0.0:
        return 0.0 if b == 0.0 else float("inf") if b > 0 else float("-inf")
    return (b - a) / a
