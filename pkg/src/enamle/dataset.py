"""Labeled sensor datasets: CSV loading, min-max normalization, stratified
splitting and a synthetic generator with planted correlation groups."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

TRAIN = "train"
TEST = "test"
MIN_ROWS = 10


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    sensor_names: list[str]
    features: np.ndarray
    labels: np.ndarray
    normalized: bool = False
    split_tag: np.ndarray | None = None
    groups_truth: list[list[str]] | None = field(default=None, compare=False)

    def __post_init__(self):
        X = self.features
        if X.ndim != 2 or X.shape[1] != len(self.sensor_names):
            raise DatasetError("feature matrix does not match sensor names")
        if X.shape[1] < 2:
            raise DatasetError("a dataset needs at least 2 sensors")
        if len(self.labels) != X.shape[0]:
            raise DatasetError("label count does not match row count")
        if len(set(self.sensor_names)) != len(self.sensor_names):
            raise DatasetError("duplicate sensor names")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_sensors(self) -> int:
        return self.features.shape[1]

    @property
    def has_split(self) -> bool:
        return self.split_tag is not None

    @property
    def train_mask(self) -> np.ndarray:
        if self.split_tag is None:
            raise DatasetError("dataset has no train/test split")
        return self.split_tag == TRAIN

    @property
    def test_mask(self) -> np.ndarray:
        return ~self.train_mask

    def train_xy(self) -> tuple[np.ndarray, np.ndarray]:
        m = self.train_mask
        return self.features[m], self.labels[m]

    def test_xy(self) -> tuple[np.ndarray, np.ndarray]:
        m = self.test_mask
        return self.features[m], self.labels[m]

    def columns(self, names) -> np.ndarray:
        index = {s: i for i, s in enumerate(self.sensor_names)}
        try:
            return np.array([index[n] for n in names], dtype=np.intp)
        except KeyError as e:
            raise DatasetError(f"unknown sensor {e.args[0]!r}") from None


def load_csv(path, label_column: str) -> Dataset:
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        if label_column not in header:
            raise DatasetError(f"label column not found: {label_column!r}")
        li = header.index(label_column)
        names = [h for i, h in enumerate(header) if i != li]
        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetError(
                    f"{path}:{lineno}: ragged row ({len(row)} cells, expected {len(header)})"
                )
            values = []
            for i, cell in enumerate(row):
                if i == li:
                    continue
                try:
                    values.append(float(cell))
                except ValueError:
                    raise DatasetError(
                        f"{path}:{lineno}: non-numeric value {cell!r} in column {header[i]!r}"
                    ) from None
            rows.append(values)
            labels.append(_label_value(row[li].strip()))
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    return Dataset(names, X, np.array(labels))


def _label_value(cell: str):
    try:
        return int(cell)
    except ValueError:
        return cell


def write_csv(d: Dataset, path, label_column: str = "label") -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*d.sensor_names, label_column])
        for x, y in zip(d.features, d.labels):
            w.writerow([*(repr(float(v)) for v in x), y])


def normalize(d: Dataset) -> Dataset:
    """Min-max scale every column to [0, 1].

    Statistics come from the training rows when a split exists, otherwise
    from the whole column. Test rows outside the training range are clipped.
    Constant columns map to 0.0.
    """
    if d.normalized:
        raise DatasetError("dataset is already normalized")
    X = d.features
    ref = X[d.train_mask] if d.has_split else X
    lo = ref.min(axis=0)
    span = ref.max(axis=0) - lo
    const = span == 0
    scaled = (X - lo) / np.where(const, 1.0, span)
    scaled[:, const] = 0.0
    np.clip(scaled, 0.0, 1.0, out=scaled)
    return replace(d, features=scaled, normalized=True)


def _allocate_train(counts: np.ndarray, target: int) -> np.ndarray:
    """Per-class train counts summing to ``target`` as closely as allowed.

    Largest-remainder apportionment, then every class with >= 2 rows keeps at
    least one train and one test row.
    """
    total = counts.sum()
    ideal = counts * (target / total)
    k = np.floor(ideal).astype(int)
    order = sorted(range(len(counts)), key=lambda c: (-(ideal[c] - k[c]), c))
    for c in order[: target - k.sum()]:
        k[c] += 1
    lo = np.where(counts >= 2, 1, counts)
    hi = np.where(counts >= 2, counts - 1, counts)
    k = np.clip(k, lo, hi)
    # repair the total after clamping, preferring classes furthest from ideal
    while k.sum() != target:
        if k.sum() < target:
            room = [c for c in range(len(k)) if k[c] < hi[c]]
            if not room:
                break
            c = max(room, key=lambda c: (ideal[c] - k[c], -c))
            k[c] += 1
        else:
            room = [c for c in range(len(k)) if k[c] > lo[c]]
            if not room:
                break
            c = max(room, key=lambda c: (k[c] - ideal[c], -c))
            k[c] -= 1
    return k


def split(d: Dataset, train_fraction: float, seed: int) -> Dataset:
    if not 0.0 < train_fraction < 1.0:
        raise DatasetError("train_fraction must lie strictly between 0 and 1")
    if d.n_rows < MIN_ROWS:
        raise DatasetError(f"splitting needs at least {MIN_ROWS} rows, got {d.n_rows}")
    classes, inverse = np.unique(d.labels, return_inverse=True)
    counts = np.bincount(inverse, minlength=len(classes))
    for c, n in zip(classes, counts):
        if n < 2:
            log.warning("class %r has %d row(s); placing it in the training set", c, n)
    target = int(math.floor(train_fraction * d.n_rows + 0.5))
    k = _allocate_train(counts, target)
    rng = np.random.default_rng(seed)
    tags = np.full(d.n_rows, TEST, dtype="<U5")
    for c in range(len(classes)):
        rows = np.flatnonzero(inverse == c)
        rng.shuffle(rows)
        tags[rows[: k[c]]] = TRAIN
    return replace(d, split_tag=tags)


def synthesize(
    groups, n_rows: int, n_classes: int, noise: float, seed: int
) -> Dataset:
    """Sensors driven by one latent factor per group plus Gaussian noise.

    The label is the quantile bin of the equally weighted sum of latents, so
    every group carries the same share of the class signal.
    """
    groups = [int(g) for g in groups]
    if not groups or any(g < 1 for g in groups):
        raise DatasetError("group sizes must be positive")
    if n_classes < 2:
        raise DatasetError("n_classes must be at least 2")
    if noise < 0:
        raise DatasetError("noise must be non-negative")
    rng = np.random.default_rng(seed)
    latent = rng.standard_normal((n_rows, len(groups)))
    cols, names, truth = [], [], []
    for g, size in enumerate(groups):
        members = []
        for i in range(size):
            cols.append(latent[:, g] + noise * rng.standard_normal(n_rows))
            members.append(f"g{g}_s{i}")
        names.extend(members)
        truth.append(members)
    X = np.column_stack(cols)
    score = latent.sum(axis=1)
    edges = np.quantile(score, np.arange(1, n_classes) / n_classes)
    labels = np.searchsorted(edges, score, side="right")
    return Dataset(names, X, labels.astype(np.int64), groups_truth=truth)
