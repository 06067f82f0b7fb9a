"""Training of the base model and the sub-model ensemble, the mean imputer,
and the JSON model artifact."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import classifiers
from .dataset import Dataset, DatasetError
from .plan import EnsemblePlan
from .metering import accuracy

ARTIFACT_FORMAT = "enamle-ensemble"
ARTIFACT_VERSION = 1


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str = "mlp"
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in classifiers.KINDS:
            raise ValueError(f"unknown classifier kind {self.kind!r}")

    def model_seed(self, index: int) -> int:
        """Seed of model ``index``; 0 is the base model, j+1 is sub-model j."""
        return int(np.random.SeedSequence([self.seed, index]).generate_state(1)[0])

    def build(self, index: int) -> classifiers.Classifier:
        return classifiers.make(self.kind, self.hyperparameters, self.model_seed(index))

    def to_dict(self):
        return {"kind": self.kind, "hyperparameters": dict(self.hyperparameters), "seed": self.seed}


def fit_imputer(d: Dataset) -> np.ndarray:
    X, _ = d.train_xy()
    if X.shape[0] == 0:
        raise DatasetError("training partition is empty")
    return X.mean(axis=0)


@dataclass(eq=False)
class TrainedEnsemble:
    plan: EnsemblePlan
    sensor_names: list[str]
    classes: np.ndarray
    base_model: classifiers.Classifier
    base_accuracy: float
    sub_models: list[classifiers.Classifier]
    training_accuracy: list[float]
    imputer_means: np.ndarray
    classifier_spec: ClassifierSpec

    @property
    def m(self) -> int:
        return len(self.sub_models)

    @property
    def n_sensors(self) -> int:
        return len(self.sensor_names)

    @cached_property
    def sensor_index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.sensor_names)}

    @cached_property
    def feature_idx(self) -> list[np.ndarray]:
        """Column indices (dataset order) of each sub-model's feature set."""
        ix = self.sensor_index
        return [np.array([ix[s] for s in fs], dtype=np.intp) for fs in self.plan.feature_sets]

    def decode(self, k):
        return self.classes[k]

    # -- persistence -------------------------------------------------------

    def to_dict(self) -> dict:
        def pack(model, acc):
            return {"training_accuracy": acc, "state": model.state()}

        return {
            "format": ARTIFACT_FORMAT,
            "version": ARTIFACT_VERSION,
            "sensor_names": list(self.sensor_names),
            "classes": self.classes.tolist(),
            "classifier": self.classifier_spec.to_dict(),
            "plan": self.plan.to_dict(),
            "imputer_means": self.imputer_means.tolist(),
            "base": pack(self.base_model, self.base_accuracy),
            "sub_models": [pack(s, a) for s, a in zip(self.sub_models, self.training_accuracy)],
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainedEnsemble":
        if doc.get("format") != ARTIFACT_FORMAT:
            raise ValueError("not an ensemble artifact")
        if doc.get("version") != ARTIFACT_VERSION:
            raise ValueError(f"unsupported artifact version {doc.get('version')!r}")
        spec = ClassifierSpec(**doc["classifier"])
        plan = EnsemblePlan.from_dict(doc["plan"])
        names = list(doc["sensor_names"])
        classes = np.array(doc["classes"])
        k = len(classes)

        def unpack(entry, index, width):
            model = spec.build(index)
            model.load_state(entry["state"], width, k)
            return model

        base = unpack(doc["base"], 0, len(names))
        subs = [
            unpack(e, j + 1, len(plan.feature_sets[j])) for j, e in enumerate(doc["sub_models"])
        ]
        return cls(
            plan=plan,
            sensor_names=names,
            classes=classes,
            base_model=base,
            base_accuracy=float(doc["base"]["training_accuracy"]),
            sub_models=subs,
            training_accuracy=[float(e["training_accuracy"]) for e in doc["sub_models"]],
            imputer_means=np.array(doc["imputer_means"], dtype=np.float64),
            classifier_spec=spec,
        )

    @classmethod
    def load(cls, path) -> "TrainedEnsemble":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _training_accuracy(model, X, y) -> float:
    pred = model.predict(X)
    return accuracy(int(np.count_nonzero(pred == y)), len(y))


def train(d: Dataset, plan: EnsemblePlan, spec: ClassifierSpec) -> TrainedEnsemble:
    X, labels = d.train_xy()
    if X.shape[0] == 0:
        raise DatasetError("training partition is empty")
    classes = np.unique(d.labels)
    missing = sorted(set(classes.tolist()) - set(np.unique(labels).tolist()), key=str)
    if missing:
        raise DatasetError(f"classes without training rows: {missing}")
    y = np.searchsorted(classes, labels).astype(np.intp)
    unknown = set(plan.sensors) - set(d.sensor_names)
    if unknown:
        raise DatasetError(f"plan references unknown sensors: {sorted(unknown)}")

    base = spec.build(0).fit(X, y, len(classes))
    subs, accs = [], []
    for j, fs in enumerate(plan.feature_sets):
        # only the sub-model's own columns are ever materialised
        Xj = np.ascontiguousarray(X[:, d.columns(fs)])
        model = spec.build(j + 1).fit(Xj, y, len(classes))
        subs.append(model)
        accs.append(_training_accuracy(model, Xj, y))
    return TrainedEnsemble(
        plan=plan,
        sensor_names=list(d.sensor_names),
        classes=classes,
        base_model=base,
        base_accuracy=_training_accuracy(base, X, y),
        sub_models=subs,
        training_accuracy=accs,
        imputer_means=fit_imputer(d),
        classifier_spec=spec,
    )


def predict_one(model: classifiers.Classifier, features) -> int:
    """Class index predicted for a single feature vector."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 1:
        raise classifiers.WidthError("expected a single feature vector")
    return int(model.predict(x)[0])


def predict_batch(model: classifiers.Classifier, rows) -> np.ndarray:
    return model.predict(np.asarray(rows, dtype=np.float64))
