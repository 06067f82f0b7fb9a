import numpy as np
import pytest

from enamle import classifiers as clf


def separable(seed=0, n=300, k=3, noise=0.0):
    """Class k clusters around the k-th corner of a simplex."""
    rng = np.random.default_rng(seed)
    y = rng.integers(0, k, n).astype(np.intp)
    X = np.eye(k)[y] * 2.0 + noise * rng.normal(size=(n, k))
    return X, y


class TestMLP:
    def test_gradient_matches_central_differences(self):
        rng = np.random.default_rng(1)
        net = clf.MLP(hidden=5, seed=0)
        net.init_params(4, 3, rng)
        X = rng.normal(size=(3, 4))
        y = np.array([0, 2, 1])
        _, grads = net.loss_and_grad(X, y)
        eps = 1e-6
        for w, g in zip(net.weights, grads):
            num = np.zeros_like(w)
            for i in np.ndindex(w.shape):
                keep = w[i]
                w[i] = keep + eps
                up, _ = net.loss_and_grad(X, y)
                w[i] = keep - eps
                down, _ = net.loss_and_grad(X, y)
                w[i] = keep
                num[i] = (up - down) / (2 * eps)
            rel = np.abs(num - g) / np.maximum(1e-8, np.abs(num) + np.abs(g))
            assert rel.max() < 1e-4

    def test_state_round_trip(self):
        X, y = separable()
        a = clf.MLP(epochs=20, seed=2).fit(X, y, 3)
        b = clf.MLP(epochs=20, seed=2)
        b.load_state(a.state(), 3, 3)
        np.testing.assert_array_equal(a.predict_proba(X), b.predict_proba(X))


class TestRandomForest:
    def test_bootstrap_is_pure_function_of_seed(self):
        a = clf.RandomForest(seed=5)
        b = clf.RandomForest(seed=5)
        for t in range(4):
            np.testing.assert_array_equal(a.bootstrap_rows(t, 50), b.bootstrap_rows(t, 50))
        assert not np.array_equal(a.bootstrap_rows(0, 50), a.bootstrap_rows(1, 50))
        assert not np.array_equal(a.bootstrap_rows(0, 50), clf.RandomForest(seed=6).bootstrap_rows(0, 50))

    def test_bootstrap_samples_with_replacement(self):
        rows = clf.RandomForest(seed=0).bootstrap_rows(0, 1000)
        assert len(rows) == 1000
        # expected distinct fraction is about 1 - 1/e
        assert 0.58 < len(np.unique(rows)) / 1000 < 0.68

    def test_max_features(self):
        assert clf.RandomForest()._n_split_features(24) == 4
        assert clf.RandomForest(max_features="all")._n_split_features(7) == 7
        assert clf.RandomForest(max_features=3)._n_split_features(2) == 2

    def test_state_round_trip(self):
        X, y = separable(noise=0.5)
        a = clf.RandomForest(n_trees=4, seed=1).fit(X, y, 3)
        b = clf.RandomForest(n_trees=4, seed=1)
        b.load_state(a.state(), 3, 3)
        np.testing.assert_array_equal(a.predict_proba(X), b.predict_proba(X))


class TestLinearSVM:
    @pytest.mark.parametrize("seed", range(5))
    def test_block_means_of_objective_do_not_increase(self, seed):
        X, y = separable(seed, noise=0.6)
        trace = []
        clf.LinearSVM(epochs=100, seed=seed).fit(X, y, 3, trace=trace)
        blocks = np.array(trace).reshape(5, 20).mean(axis=1)
        assert np.all(np.diff(blocks) <= 1e-12)

    def test_objective_hand_value(self):
        svm = clf.LinearSVM(reg=0.5)
        W = np.array([[1.0, -1.0]])
        b = np.zeros(2)
        X = np.array([[0.5], [-2.0]])
        y = np.array([0, 1])
        # margins: class0 (1-0.5, 0) -> mean .25; class1 (1-0.5, 0) -> mean .25
        assert svm.objective(X, y, W, b) == pytest.approx(0.25 * 2 + 0.25 * 2)


@pytest.mark.parametrize("kind", sorted(clf.KINDS))
class TestEveryKind:
    def test_separable_data(self, kind):
        X, y = separable(0)
        model = clf.make(kind, {}, seed=0).fit(X, y, 3)
        Xt, yt = separable(1)
        assert (model.predict(Xt) == yt).mean() >= 0.95

    def test_deterministic(self, kind):
        X, y = separable(0, noise=0.8)
        hyper = {"epochs": 10} if kind != "random_forest" else {"n_trees": 5}
        a = clf.make(kind, hyper, seed=4).fit(X, y, 3)
        b = clf.make(kind, hyper, seed=4).fit(X, y, 3)
        np.testing.assert_array_equal(a.predict(X), b.predict(X))
        assert a.state() == b.state()

    def test_width_check(self, kind):
        X, y = separable(0)
        model = clf.make(kind, {"epochs": 2} if kind != "random_forest" else {"n_trees": 2}).fit(X, y, 3)
        with pytest.raises(clf.WidthError):
            model.predict(X[:, :2])


def test_unknown_kind():
    with pytest.raises(ValueError, match="unknown classifier"):
        clf.make("knn")
