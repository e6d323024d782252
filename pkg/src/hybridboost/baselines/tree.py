"""Binary CART trees shared by the forest and the tree booster.

Split search is vectorized per node: candidate features are sorted
together and every admissible threshold is scored at once. Ties go to the
lowest feature index, then the lowest threshold.
"""

from __future__ import annotations

import numpy as np

_EPS = 1e-12


class Tree:
    """Array-backed binary tree; ``x[feature] <= threshold`` goes left."""

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self.rows: list[np.ndarray] = []

    def _add(self, value, rows) -> int:
        self.feature.append(-1)
        self.threshold.append(np.nan)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(value))
        self.rows.append(rows)
        return len(self.value) - 1

    def finalize(self):
        self.feature = np.array(self.feature, dtype=int)
        self.threshold = np.array(self.threshold, dtype=float)
        self.left = np.array(self.left, dtype=int)
        self.right = np.array(self.right, dtype=int)
        self.value = np.array(self.value, dtype=float)
        return self

    @property
    def n_nodes(self) -> int:
        return len(self.value)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index of every row."""
        node = np.zeros(X.shape[0], dtype=int)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(np.asarray(X, dtype=float))]


def best_split(X, y, rows, features, criterion: str, min_leaf: int = 1):
    """Best (feature, threshold, gain) over ``features`` for the node ``rows``.

    ``criterion`` is ``"gini"`` (binary labels) or ``"mse"``. Returns
    ``None`` when no admissible split lowers the impurity.
    """
    m = len(rows)
    if m < 2 * min_leaf or len(features) == 0:
        return None
    features = np.sort(np.asarray(features, dtype=int))
    Xn = X[np.ix_(rows, features)]
    order = np.argsort(Xn, axis=0, kind="stable")
    xs = np.take_along_axis(Xn, order, axis=0)
    ys = y[rows][order]
    csum = np.cumsum(ys, axis=0)[:-1]
    total = ys.sum(axis=0)
    nl = np.arange(1, m, dtype=float)[:, None]
    nr = m - nl
    if criterion == "gini":
        # n * Gini impurity of each side for binary labels: 2 c (n - c) / n
        cr = total - csum
        cost = 2.0 * csum * (nl - csum) / nl + 2.0 * cr * (nr - cr) / nr
        pos = total[0]
        parent = 2.0 * pos * (m - pos) / m
    elif criterion == "mse":
        cr = total - csum
        cost = -(csum**2 / nl + cr**2 / nr)
        parent = -(total[0] ** 2) / m
    else:
        raise ValueError(f"unknown criterion {criterion!r}")
    valid = xs[:-1] < xs[1:]
    if min_leaf > 1:
        size_ok = ((nl >= min_leaf) & (nr >= min_leaf)).ravel()
        valid &= size_ok[:, None]
    if not valid.any():
        return None
    cost = np.where(valid, cost, np.inf).T  # features x positions
    flat = int(np.argmin(cost))
    fi, i = divmod(flat, cost.shape[1])
    gain = parent - cost[fi, i]
    if not gain > _EPS * max(1.0, abs(parent)):
        return None
    threshold = 0.5 * (xs[i, fi] + xs[i + 1, fi])
    return int(features[fi]), float(threshold), float(gain)


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    criterion: str,
    rows: np.ndarray | None = None,
    max_depth: int | None = None,
    min_leaf: int = 1,
    mtry: int | None = None,
    rng: np.random.Generator | None = None,
    leaf_value=None,
) -> Tree:
    """Grow a tree depth-first on ``rows`` (default: all rows).

    ``mtry`` random features are drawn at each node when given. Leaf values
    default to the node mean of ``y``; ``leaf_value(rows)`` overrides them.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    p = X.shape[1]
    rows = np.arange(X.shape[0]) if rows is None else np.asarray(rows, dtype=int)
    leaf_value = leaf_value or (lambda r: y[r].mean())
    tree = Tree()
    root = tree._add(leaf_value(rows), rows)
    stack = [(root, rows, 0)]
    while stack:
        node, r, depth = stack.pop()
        if max_depth is not None and depth >= max_depth:
            continue
        yr = y[r]
        if criterion == "gini" and (yr.min() == yr.max()):
            continue
        if mtry is not None and mtry < p:
            features = rng.choice(p, size=mtry, replace=False)
        else:
            features = np.arange(p)
        split = best_split(X, y, r, features, criterion, min_leaf)
        if split is None:
            continue
        f, t, _ = split
        go_left = X[r, f] <= t
        lr, rr = r[go_left], r[~go_left]
        tree.feature[node] = f
        tree.threshold[node] = t
        left = tree._add(leaf_value(lr), lr)
        right = tree._add(leaf_value(rr), rr)
        tree.left[node] = left
        tree.right[node] = right
        stack.append((right, rr, depth + 1))
        stack.append((left, lr, depth + 1))
    return tree.finalize()
