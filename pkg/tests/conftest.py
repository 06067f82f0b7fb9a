import numpy as np
import pytest

from enamle import dataset as ds
from enamle.correlation import build_groups
from enamle.learners import ClassifierSpec, train
from enamle.plan import build_feature_sets

_ACCEPTANCE = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    _ACCEPTANCE[criterion] = (bool(ok), detail)


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {n:>2}: {detail}")


def small_dataset(groups=(3, 3), n_rows=300, n_classes=3, noise=0.2, seed=0):
    d = ds.synthesize(list(groups), n_rows, n_classes, noise, seed)
    return ds.split(ds.normalize(d), 0.85, seed)


FAST_MLP = ClassifierSpec("mlp", {"epochs": 40, "hidden": 16}, seed=7)


@pytest.fixture(scope="session")
def six_sensor_data():
    return small_dataset()


@pytest.fixture(scope="session")
def six_sensor_ensemble(six_sensor_data):
    """S=6 in two planted groups of 3; MinM=3, four trained sub-models."""
    gs = build_groups(six_sensor_data, 0.7)
    assert gs.sizes == [3, 3]
    return train(six_sensor_data, build_feature_sets(gs, 4), FAST_MLP)


@pytest.fixture(scope="session")
def mixed_ensemble():
    """Groups [4, 2, 1] so singleton handling is exercised; eight sub-models."""
    d = small_dataset(groups=(4, 2, 1), n_rows=400, n_classes=3, noise=0.15, seed=3)
    gs = build_groups(d, 0.7)
    assert gs.sizes == [4, 2, 1]
    return d, train(d, build_feature_sets(gs, 8), FAST_MLP)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
