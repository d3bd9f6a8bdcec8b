"""Squared-loss gradient boosting over depth-limited regression trees.

Each stage fits a tree to the current residuals by exact greedy search: every
boundary between distinct sorted feature values is scored by the reduction in
sum of squared errors. Ties resolve to the lower feature index, then the
lower threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import GbtParams
from ..errors import DataError
from ..features import FeatureMatrix
from .base import ModelId, RackModel


@dataclass
class RegressionTree:
    # parallel node arrays; feature == -1 marks a leaf
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=int)
        active = self.feature[node] >= 0
        while active.any():
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return self.value[node]

    @property
    def n_nodes(self) -> int:
        return len(self.feature)


def _midpoint(lo: float, hi: float) -> float:
    mid = lo + (hi - lo) / 2.0
    return lo if mid >= hi else mid


def best_sse_split(X, r, member, orders, min_leaf):
    """Best (gain, feature, threshold) for the rows flagged in ``member``.

    ``orders[f]`` is the global argsort of column f, so node subsets come out
    pre-sorted without re-sorting.
    """
    n = int(member.sum())
    best = (0.0, -1, 0.0)
    if n < 2 * min_leaf:
        return best
    total = r[member].sum()
    base = total * total / n
    pos = np.arange(min_leaf, n - min_leaf + 1)
    for f in range(X.shape[1]):
        order = orders[f][member[orders[f]]]
        xs = X[order, f]
        cs = np.cumsum(r[order])
        valid = xs[pos - 1] < xs[pos]
        if not valid.any():
            continue
        left = cs[pos - 1]
        gain = left * left / pos + (total - left) ** 2 / (n - pos) - base
        gain = np.where(valid, gain, -np.inf)
        j = int(np.argmax(gain))
        if gain[j] > best[0]:
            best = (float(gain[j]), f, _midpoint(xs[pos[j] - 1], xs[pos[j]]))
    return best


def fit_tree(X: np.ndarray, r: np.ndarray, max_depth: int, min_samples_leaf: int,
             orders: np.ndarray | None = None) -> RegressionTree:
    if orders is None:
        orders = np.argsort(X, axis=0, kind="stable").T
    feature, threshold, left, right, value = [], [], [], [], []
    # tolerance below which a gain is treated as rounding noise
    tol = 1e-12 * max(float(np.dot(r, r)), 1e-300)

    def grow(member, depth):
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(r[member].mean()))
        if depth >= max_depth:
            return node
        gain, f, thr = best_sse_split(X, r, member, orders, min_samples_leaf)
        if f < 0 or gain <= tol:
            return node
        goes_left = member & (X[:, f] <= thr)
        feature[node], threshold[node] = f, thr
        left[node] = grow(goes_left, depth + 1)
        right[node] = grow(member & ~goes_left, depth + 1)
        return node

    grow(np.ones(len(X), dtype=bool), 0)
    return RegressionTree(np.array(feature, dtype=int), np.array(threshold, dtype=float),
                          np.array(left, dtype=int), np.array(right, dtype=int),
                          np.array(value, dtype=float))


class GbtModel(RackModel):
    model_id = ModelId.GBT

    def __init__(self, columns, params, init, trees, scaler=None):
        super().__init__(columns, params, scaler)
        self.init = float(init)
        self.trees = list(trees)

    def _predict(self, X, rows, history):
        out = np.full(len(X), self.init)
        for tree in self.trees:
            out += self.params.learning_rate * tree.predict(X)
        return out

    def staged_predict(self, X: np.ndarray):
        """Yield predictions after 0, 1, ..., n_trees stages."""
        X = self._scale(np.asarray(X, dtype=float))
        out = np.full(len(X), self.init)
        yield out.copy()
        for tree in self.trees:
            out += self.params.learning_rate * tree.predict(X)
            yield out.copy()

    def state(self):
        arrays = {"init": np.array([self.init])}
        offsets = np.cumsum([0] + [t.n_nodes for t in self.trees])
        arrays["offsets"] = offsets
        for name in ("feature", "threshold", "left", "right", "value"):
            parts = [getattr(t, name) for t in self.trees]
            arrays[name] = np.concatenate(parts) if parts else np.zeros(0)
        return {"n_trees": len(self.trees)}, arrays

    @classmethod
    def from_state(cls, columns, params, scaler, meta, arrays):
        offsets = arrays["offsets"].astype(int)
        trees = []
        for a, b in zip(offsets[:-1], offsets[1:]):
            trees.append(RegressionTree(
                arrays["feature"][a:b].astype(int), arrays["threshold"][a:b].astype(float),
                arrays["left"][a:b].astype(int), arrays["right"][a:b].astype(int),
                arrays["value"][a:b].astype(float)))
        return cls(columns, params, float(arrays["init"][0]), trees, scaler)


def fit_gbt(train: FeatureMatrix, params: GbtParams = GbtParams()) -> GbtModel:
    X, y = train.rows, train.target
    if len(y) < 2 * params.min_samples_leaf:
        raise DataError(f"gbt needs at least {2 * params.min_samples_leaf} rows, got {len(y)}")
    init = float(np.mean(y))
    pred = np.full(len(y), init)
    orders = np.argsort(X, axis=0, kind="stable").T
    trees = []
    for _ in range(params.n_trees):
        tree = fit_tree(X, y - pred, params.max_depth, params.min_samples_leaf, orders)
        trees.append(tree)
        pred = pred + params.learning_rate * tree.predict(X)
    return GbtModel(train.column_names, params, init, trees)
