import os
import subprocess
import sys

import numpy as np
import pytest

from enamle import _kernels_py, kernels
from enamle.classifiers import RandomForest

try:
    from enamle import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = [pytest.param(_kernels_py, id="python")]
BACKENDS.append(
    pytest.param(_compiled, id="compiled", marks=pytest.mark.skipif(_compiled is None, reason="not built"))
)


def brute_split(X, y, rows, features, n_classes):
    """Every midpoint of every feature, scored as sum over sides of sum(count^2)/size."""
    best = (-1, 0.0, -1.0)
    for f in features:
        vals = sorted(set(X[rows, f].tolist()))
        for a, b in zip(vals, vals[1:]):
            thr = (a + b) / 2.0
            if thr >= b:
                thr = a
            go = X[rows, f] <= thr
            score = 0.0
            for side in (go, ~go):
                c = np.bincount(y[rows][side], minlength=n_classes)
                score += float((c * c).sum()) / side.sum()
            if score > best[2] + 1e-12:
                best = (int(f), thr, score)
    return best


def random_problem(seed, n=60, d=4, k=3, levels=None):
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    if levels:
        X = np.round(X * levels) / levels
    y = rng.integers(0, k, n).astype(np.intp)
    rows = np.sort(rng.integers(0, n, n)).astype(np.intp)
    return X, y, rows


class TestBestSplit:
    @pytest.mark.parametrize("backend", BACKENDS)
    @pytest.mark.parametrize("seed", range(8))
    def test_matches_brute_force(self, backend, seed):
        X, y, rows = random_problem(seed, levels=5 if seed % 2 else None)
        feats = np.arange(4, dtype=np.intp)
        f, thr, score = backend.best_split(X, y, rows, feats, 3)
        bf, bthr, bscore = brute_split(X, y, rows, feats, 3)
        assert score == pytest.approx(bscore, rel=1e-12)
        # the chosen split must itself score the optimum
        go = X[rows, f] <= thr
        again = sum(
            float((np.bincount(y[rows][s], minlength=3) ** 2).sum()) / s.sum() for s in (go, ~go)
        )
        assert again == pytest.approx(bscore, rel=1e-12)

    def test_constant_features_give_no_split(self):
        X = np.ones((10, 2))
        y = np.arange(10, dtype=np.intp) % 2
        f, _, _ = _kernels_py.best_split(X, y, np.arange(10, dtype=np.intp), np.arange(2, dtype=np.intp), 2)
        assert f == -1

    @pytest.mark.skipif(_compiled is None, reason="not built")
    @pytest.mark.parametrize("seed", range(20))
    def test_backends_identical(self, seed):
        X, y, rows = random_problem(seed, n=80, d=5, k=4, levels=7 if seed % 3 == 0 else None)
        feats = np.random.default_rng(seed).permutation(5)[:3].astype(np.intp)
        assert _compiled.best_split(X, y, rows, feats, 4) == _kernels_py.best_split(X, y, rows, feats, 4)


class TestTreeApply:
    # node 0 splits on x0 <= .5; node 2 splits on x1 <= .3
    feature = np.array([0, -1, 1, -1, -1], dtype=np.intp)
    threshold = np.array([0.5, 0, 0.3, 0, 0])
    left = np.array([1, -1, 3, -1, -1], dtype=np.intp)
    right = np.array([2, -1, 4, -1, -1], dtype=np.intp)

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_hand_tree(self, backend):
        X = np.array([[0.5, 0.9], [0.6, 0.3], [0.9, 0.31], [0.0, 0.0]])
        leaves = backend.tree_apply(X, self.feature, self.threshold, self.left, self.right)
        assert list(leaves) == [1, 3, 4, 1]


@pytest.mark.skipif(_compiled is None, reason="not built")
def test_forests_identical_across_backends(monkeypatch):
    rng = np.random.default_rng(0)
    X = rng.random((150, 6))
    y = (X[:, 0] + X[:, 3] > 1).astype(np.intp)
    a = RandomForest(n_trees=5, seed=3).fit(X, y, 2)
    monkeypatch.setattr(kernels, "best_split", _kernels_py.best_split)
    monkeypatch.setattr(kernels, "tree_apply", _kernels_py.tree_apply)
    b = RandomForest(n_trees=5, seed=3).fit(X, y, 2)
    assert a.state() == b.state()
    np.testing.assert_array_equal(a.predict_proba(X), b.predict_proba(X))


def test_env_override_forces_python():
    env = dict(os.environ, ENAMLE_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from enamle import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
