"""Desk-scale classifiers: a one-hidden-layer MLP, a bootstrap random forest
and a one-vs-rest linear SVM.

All models take class *indices* 0..K-1 and are fully determined by their seed.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels


class WidthError(ValueError):
    pass


class Classifier:
    kind = ""

    n_features: int
    n_classes: int

    def _check(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise WidthError(f"expected {self.n_features} features, got {X.shape[1]}")
        return X

    def predict(self, X) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError


# --------------------------------------------------------------------------
# MLP


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class MLP(Classifier):
    """tanh hidden layer, softmax output, cross-entropy, minibatch SGD with momentum."""

    kind = "mlp"

    def __init__(self, hidden=32, epochs=200, lr=0.05, momentum=0.9, batch_size=64, seed=0):
        self.hidden = int(hidden)
        self.epochs = int(epochs)
        self.lr = float(lr)
        self.momentum = float(momentum)
        self.batch_size = int(batch_size)
        self.seed = int(seed)

    def init_params(self, n_features, n_classes, rng):
        self.n_features, self.n_classes = n_features, n_classes
        self.W1 = rng.normal(0.0, 1.0 / math.sqrt(n_features), (n_features, self.hidden))
        self.b1 = np.zeros(self.hidden)
        self.W2 = rng.normal(0.0, 1.0 / math.sqrt(self.hidden), (self.hidden, n_classes))
        self.b2 = np.zeros(n_classes)

    @property
    def weights(self):
        return [self.W1, self.b1, self.W2, self.b2]

    def loss_and_grad(self, X, y):
        """Mean cross-entropy over the batch and its gradient wrt every weight."""
        n = X.shape[0]
        H = np.tanh(X @ self.W1 + self.b1)
        P = _softmax(H @ self.W2 + self.b2)
        loss = -np.log(P[np.arange(n), y]).mean()
        G = P.copy()
        G[np.arange(n), y] -= 1.0
        G /= n
        dW2 = H.T @ G
        db2 = G.sum(axis=0)
        dH = (G @ self.W2.T) * (1.0 - H * H)
        dW1 = X.T @ dH
        db1 = dH.sum(axis=0)
        return loss, [dW1, db1, dW2, db2]

    def fit(self, X, y, n_classes):
        X = np.ascontiguousarray(X, dtype=np.float64)
        rng = np.random.default_rng(self.seed)
        self.init_params(X.shape[1], n_classes, rng)
        vel = [np.zeros_like(w) for w in self.weights]
        n = X.shape[0]
        for _ in range(self.epochs):
            perm = rng.permutation(n)
            for s in range(0, n, self.batch_size):
                idx = perm[s : s + self.batch_size]
                _, grads = self.loss_and_grad(X[idx], y[idx])
                for w, v, g in zip(self.weights, vel, grads):
                    v *= self.momentum
                    v -= self.lr * g
                    w += v
        return self

    def predict_proba(self, X):
        X = self._check(X)
        return _softmax(np.tanh(X @ self.W1 + self.b1) @ self.W2 + self.b2)

    def predict(self, X):
        return self.predict_proba(X).argmax(axis=1)

    def params(self):
        return {
            "hidden": self.hidden, "epochs": self.epochs, "lr": self.lr,
            "momentum": self.momentum, "batch_size": self.batch_size, "seed": self.seed,
        }

    def state(self):
        return {k: getattr(self, k).tolist() for k in ("W1", "b1", "W2", "b2")}

    def load_state(self, st, n_features, n_classes):
        self.n_features, self.n_classes = n_features, n_classes
        for k in ("W1", "b1", "W2", "b2"):
            setattr(self, k, np.array(st[k], dtype=np.float64))


# --------------------------------------------------------------------------
# random forest


class DecisionTree:
    """CART tree on flat arrays; ``feature[i] == -1`` marks a leaf."""

    def __init__(self, max_depth, max_features, n_classes, rng):
        self.max_depth = max_depth
        self.max_features = max_features
        self.n_classes = n_classes
        self.rng = rng

    def fit(self, X, y, rows):
        self._feature, self._threshold, self._left, self._right, self._value = [], [], [], [], []
        self._grow(X, y, rows, 0)
        self.feature = np.array(self._feature, dtype=np.intp)
        self.threshold = np.array(self._threshold, dtype=np.float64)
        self.left = np.array(self._left, dtype=np.intp)
        self.right = np.array(self._right, dtype=np.intp)
        self.value = np.array(self._value, dtype=np.float64).reshape(-1, self.n_classes)
        del self._feature, self._threshold, self._left, self._right, self._value
        return self

    def _leaf(self, counts):
        node = len(self._feature)
        self._feature.append(-1)
        self._threshold.append(0.0)
        self._left.append(-1)
        self._right.append(-1)
        self._value.append(counts / counts.sum())
        return node

    def _grow(self, X, y, rows, depth):
        counts = np.bincount(y[rows], minlength=self.n_classes)
        if depth >= self.max_depth or np.count_nonzero(counts) <= 1:
            return self._leaf(counts)
        feats = np.sort(
            self.rng.choice(X.shape[1], size=self.max_features, replace=False)
        ).astype(np.intp)
        f, thr, score = kernels.best_split(X, y, rows, feats, self.n_classes)
        parent = float((counts.astype(np.int64) ** 2).sum()) / len(rows)
        if f < 0 or not score > parent:
            return self._leaf(counts)
        go_left = X[rows, f] <= thr
        node = self._leaf(counts)
        self._feature[node] = f
        self._threshold[node] = thr
        self._left[node] = self._grow(X, y, rows[go_left], depth + 1)
        self._right[node] = self._grow(X, y, rows[~go_left], depth + 1)
        return node

    def apply(self, X):
        return kernels.tree_apply(X, self.feature, self.threshold, self.left, self.right)

    def predict_proba(self, X):
        return self.value[self.apply(X)]


class RandomForest(Classifier):
    kind = "random_forest"

    def __init__(self, n_trees=50, max_depth=8, max_features="sqrt", seed=0):
        self.n_trees = int(n_trees)
        self.max_depth = int(max_depth)
        self.max_features = max_features
        self.seed = int(seed)

    def _n_split_features(self, d):
        if self.max_features == "sqrt":
            return max(1, int(math.isqrt(d)))
        if self.max_features in (None, "all"):
            return d
        return max(1, min(d, int(self.max_features)))

    def tree_rng(self, t):
        return np.random.default_rng(np.random.SeedSequence([self.seed, t]))

    def bootstrap_rows(self, t, n):
        """Row indices of tree ``t``'s bootstrap sample; a pure function of the seed."""
        return np.sort(self.tree_rng(t).integers(0, n, size=n)).astype(np.intp)

    def fit(self, X, y, n_classes):
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.intp)
        self.n_features, self.n_classes = X.shape[1], n_classes
        k = self._n_split_features(X.shape[1])
        self.trees = []
        for t in range(self.n_trees):
            rows = self.bootstrap_rows(t, X.shape[0])
            # split choices draw from a stream independent of the bootstrap
            rng = np.random.default_rng(np.random.SeedSequence([self.seed, t, 1]))
            self.trees.append(DecisionTree(self.max_depth, k, n_classes, rng).fit(X, y, rows))
        return self

    def predict_proba(self, X):
        X = self._check(X)
        P = np.zeros((X.shape[0], self.n_classes))
        for tree in self.trees:
            P += tree.predict_proba(X)
        return P / len(self.trees)

    def predict(self, X):
        return self.predict_proba(X).argmax(axis=1)

    def params(self):
        return {
            "n_trees": self.n_trees, "max_depth": self.max_depth,
            "max_features": self.max_features, "seed": self.seed,
        }

    def state(self):
        return {
            "trees": [
                {
                    "feature": t.feature.tolist(), "threshold": t.threshold.tolist(),
                    "left": t.left.tolist(), "right": t.right.tolist(),
                    "value": t.value.tolist(),
                }
                for t in self.trees
            ]
        }

    def load_state(self, st, n_features, n_classes):
        self.n_features, self.n_classes = n_features, n_classes
        self.trees = []
        for d in st["trees"]:
            t = DecisionTree(self.max_depth, 0, n_classes, None)
            t.feature = np.array(d["feature"], dtype=np.intp)
            t.threshold = np.array(d["threshold"], dtype=np.float64)
            t.left = np.array(d["left"], dtype=np.intp)
            t.right = np.array(d["right"], dtype=np.intp)
            t.value = np.array(d["value"], dtype=np.float64).reshape(-1, n_classes)
            self.trees.append(t)


# --------------------------------------------------------------------------
# linear SVM


class LinearSVM(Classifier):
    """One-vs-rest hinge loss with L2 penalty, minibatch subgradient descent.

    Steps follow 1 / (reg * (t + offset)); the bias is not penalised. The
    returned weights are the running average of the end-of-epoch iterates.
    """

    kind = "linear_svm"

    def __init__(self, epochs=100, reg=1e-3, step_offset=100, batch_size=64, seed=0):
        self.epochs = int(epochs)
        self.reg = float(reg)
        self.step_offset = int(step_offset)
        self.batch_size = int(batch_size)
        self.seed = int(seed)

    @staticmethod
    def _targets(y, n_classes):
        T = -np.ones((len(y), n_classes))
        T[np.arange(len(y)), y] = 1.0
        return T

    def objective(self, X, y, W=None, b=None):
        """Summed per-class regularized mean hinge loss."""
        W = self.W if W is None else W
        b = self.b if b is None else b
        T = self._targets(y, W.shape[1])
        margins = np.maximum(0.0, 1.0 - T * (X @ W + b))
        return float(0.5 * self.reg * (W * W).sum() + margins.mean(axis=0).sum())

    def fit(self, X, y, n_classes, trace=None):
        X = np.ascontiguousarray(X, dtype=np.float64)
        n, d = X.shape
        self.n_features, self.n_classes = d, n_classes
        T = self._targets(y, n_classes)
        rng = np.random.default_rng(self.seed)
        W = np.zeros((d, n_classes))
        b = np.zeros(n_classes)
        W_avg, b_avg = np.zeros_like(W), np.zeros_like(b)
        step = 0
        for epoch in range(1, self.epochs + 1):
            perm = rng.permutation(n)
            for s in range(0, n, self.batch_size):
                step += 1
                idx = perm[s : s + self.batch_size]
                Xb, Tb = X[idx], T[idx]
                active = (Tb * (Xb @ W + b) < 1.0) * Tb
                gW = self.reg * W - Xb.T @ active / len(idx)
                gb = -active.sum(axis=0) / len(idx)
                eta = 1.0 / (self.reg * (step + self.step_offset))
                W -= eta * gW
                b -= eta * gb
            W_avg += (W - W_avg) / epoch
            b_avg += (b - b_avg) / epoch
            if trace is not None:
                trace.append(self.objective(X, y, W_avg, b_avg))
        self.W, self.b = W_avg, b_avg
        return self

    def decision_function(self, X):
        X = self._check(X)
        return X @ self.W + self.b

    def predict(self, X):
        return self.decision_function(X).argmax(axis=1)

    def params(self):
        return {
            "epochs": self.epochs, "reg": self.reg, "step_offset": self.step_offset,
            "batch_size": self.batch_size, "seed": self.seed,
        }

    def state(self):
        return {"W": self.W.tolist(), "b": self.b.tolist()}

    def load_state(self, st, n_features, n_classes):
        self.n_features, self.n_classes = n_features, n_classes
        self.W = np.array(st["W"], dtype=np.float64).reshape(n_features, n_classes)
        self.b = np.array(st["b"], dtype=np.float64)


KINDS = {cls.kind: cls for cls in (MLP, RandomForest, LinearSVM)}


def make(kind: str, hyperparameters: dict | None = None, seed: int = 0) -> Classifier:
    try:
        cls = KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown classifier kind {kind!r}; choose from {sorted(KINDS)}") from None
    return cls(**dict(hyperparameters or {}), seed=seed)
