"""Time the compiled tree kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--rows 2000] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from enamle import _kernels_py, kernels
from enamle.classifiers import RandomForest

try:
    from enamle import _kernels as compiled
except ImportError:
    compiled = None


def use(backend):
    kernels.best_split = backend.best_split
    kernels.tree_apply = backend.tree_apply


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rows", type=int, default=2000)
    p.add_argument("--features", type=int, default=24)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    if compiled is None:
        raise SystemExit("compiled extension not built; run: pip install -e . --no-build-isolation")

    rng = np.random.default_rng(0)
    X = rng.random((args.rows, args.features))
    y = (X[:, :4].sum(axis=1) * 2).astype(np.intp) % 4
    rows = np.arange(args.rows, dtype=np.intp)
    feats = np.arange(args.features, dtype=np.intp)
    forest = RandomForest(n_trees=10, seed=0).fit(X, y, 4)
    tree = forest.trees[0]

    cases = {
        "best_split": lambda b: b.best_split(X, y, rows, feats, 4),
        "tree_apply": lambda b: b.tree_apply(X, tree.feature, tree.threshold, tree.left, tree.right),
        "forest_fit": lambda b: (use(b), RandomForest(n_trees=10, seed=0).fit(X, y, 4)),
    }
    print(f"{'kernel':<12} {'python ms':>10} {'compiled ms':>12} {'speedup':>8}")
    for name, fn in cases.items():
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat)) * 1e3
        t_c = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<12} {t_py:>10.2f} {t_c:>12.2f} {t_py / t_c:>7.1f}x")
    use(compiled)


if __name__ == "__main__":
    main()
