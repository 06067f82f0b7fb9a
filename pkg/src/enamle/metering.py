"""Accuracy, throughput and energy metrics, and attribution of energy to the
five inference stages.

Two modes: ``simulated`` prices each stage's work counts with fixed
coefficients (deterministic, in cost units); ``measured`` converts each
stage's wall-clock time to millijoules with V * A * s.
"""

from __future__ import annotations

from dataclasses import dataclass, field

STAGES = ("find", "detect", "impute", "infer", "vote")

DEFAULT_VOLTAGE = 5.039

# find: per sub-model spec scanned; detect: per suitable candidate ranked;
# impute: per imputed value; infer: per (model, feature) pair; vote: per prediction
DEFAULT_COEFFICIENTS = {"find": 1.0, "detect": 2.0, "impute": 50.0, "infer": 10.0, "vote": 5.0}

SIMULATED = "simulated"
MEASURED = "measured"


class MeteringError(ValueError):
    pass


def accuracy(correct: int, total: int) -> float:
    if total < 1:
        raise MeteringError("accuracy of zero predictions is undefined")
    if not 0 <= correct <= total:
        raise MeteringError("correct count out of range")
    return correct / total


def throughput(n: int, elapsed_ms: float) -> float:
    """Inferences per millisecond."""
    if elapsed_ms <= 0:
        raise MeteringError("elapsed time must be positive")
    return n / elapsed_ms


def joules(elapsed_s: float, amperes: float, voltage: float) -> float:
    if elapsed_s < 0 or amperes < 0 or voltage < 0:
        raise MeteringError("negative physical quantity")
    return voltage * amperes * elapsed_s


@dataclass(frozen=True)
class EnergyModel:
    mode: str = SIMULATED
    voltage: float = DEFAULT_VOLTAGE
    current_profile: dict = field(default_factory=dict)
    cost_coefficients: dict = field(default_factory=lambda: dict(DEFAULT_COEFFICIENTS))

    def __post_init__(self):
        if self.mode not in (SIMULATED, MEASURED):
            raise MeteringError(f"unknown energy mode {self.mode!r}")
        if self.voltage <= 0:
            raise MeteringError("voltage must be positive")
        table = self.cost_coefficients if self.mode == SIMULATED else self.current_profile
        for stage in STAGES:
            if stage not in table:
                raise MeteringError(f"missing coefficient for stage {stage!r}")
            if table[stage] < 0:
                raise MeteringError(f"negative coefficient for stage {stage!r}")

    @property
    def unit(self) -> str:
        return "cost" if self.mode == SIMULATED else "mJ"

    @classmethod
    def from_dict(cls, doc: dict | None) -> "EnergyModel":
        doc = dict(doc or {})
        coeffs = dict(DEFAULT_COEFFICIENTS)
        coeffs.update(doc.get("coefficients", {}))
        return cls(
            mode=doc.get("mode", SIMULATED),
            voltage=float(doc.get("voltage", DEFAULT_VOLTAGE)),
            current_profile=dict(doc.get("amperes", {})),
            cost_coefficients=coeffs,
        )

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "voltage": self.voltage,
            "amperes": dict(self.current_profile),
            "coefficients": dict(self.cost_coefficients),
        }


def account(outcome, model: EnergyModel) -> dict[str, float]:
    """Per-stage energy of one inference, in ``model.unit``."""
    if model.mode == SIMULATED:
        return {s: model.cost_coefficients[s] * outcome.op_costs[s] for s in STAGES}
    if outcome.op_seconds is None:
        raise MeteringError("measured mode needs per-stage timings")
    return {
        s: 1000.0 * joules(outcome.op_seconds[s], model.current_profile[s], model.voltage)
        for s in STAGES
    }


def total_energy(entries: dict[str, float]) -> float:
    t = 0.0
    for s in STAGES:
        t += entries[s]
    return t


@dataclass
class MeterReport:
    accuracy: float
    total_energy: float
    per_op_energy: dict
    throughput: float
    n_inferences: int
    wall_ms: float
    unit: str


def summarize(outcomes, truth, model: EnergyModel, wall_ms: float | None = None) -> MeterReport:
    """Aggregate one batch of outcomes against the true labels.

    Energies are per-inference means. In simulated mode throughput is the
    cost-based proxy (inferences per cost unit); in measured mode it is
    inferences per wall-clock millisecond.
    """
    n = len(outcomes)
    if n != len(truth):
        raise MeteringError("outcome and label counts differ")
    per_op = dict.fromkeys(STAGES, 0.0)
    correct = 0
    for o, t in zip(outcomes, truth):
        e = account(o, model)
        for s in STAGES:
            per_op[s] += e[s]
        correct += o.label == t
    total = total_energy(per_op)
    if model.mode == SIMULATED:
        thr = n / total if total > 0 else 0.0
    else:
        thr = throughput(n, wall_ms) if wall_ms else 0.0
    mean_op = {s: per_op[s] / n for s in STAGES} if n else per_op
    return MeterReport(
        accuracy=accuracy(int(correct), n),
        total_energy=total_energy(mean_op),
        per_op_energy=mean_op,
        throughput=thr,
        n_inferences=n,
        wall_ms=float(wall_ms or 0.0),
        unit=model.unit,
    )
