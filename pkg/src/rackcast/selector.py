"""Dynamic model selection.

Each evaluation row is labelled with the rack member that had the lowest
error on it (percentage error, or absolute error when the actual is zero).
A Gini decision tree learns to predict that label from the row's features,
and the rack forecast dispatches every row to the member the tree picks.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import persist
from .config import SelectorParams
from .errors import DataError, ModelFormatError, ShapeError
from .features import FeatureMatrix
from .metrics import N_MODELS, ErrorMatrix, error_matrix
from .models import RACK, ModelId, RackModel, check_columns, check_rack

log = logging.getLogger(__name__)


def build_error_matrix(rows: FeatureMatrix, models: Mapping[ModelId, RackModel],
                       history: FeatureMatrix | None = None) -> ErrorMatrix:
    check_rack(models)
    preds = [models[m].predict(rows, history) for m in RACK]
    return error_matrix(rows.target, preds, rows.row_keys)


def label_best_model(errors: ErrorMatrix | np.ndarray) -> np.ndarray:
    """Row-wise argmin; ties go to the lowest ModelId code."""
    values = errors.values if isinstance(errors, ErrorMatrix) else np.asarray(errors, dtype=float)
    if values.ndim != 2 or len(values) == 0:
        raise DataError("error matrix must be a non-empty 2-D array")
    return np.argmin(values, axis=1)


@dataclass
class SelectorTrainingSet:
    X: FeatureMatrix
    y: np.ndarray

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=int)
        if len(self.y) != len(self.X):
            raise ShapeError(f"{len(self.y)} labels for {len(self.X)} feature rows")
        if len(self.y) and (self.y.min() < 0 or self.y.max() >= N_MODELS):
            raise DataError("labels must be ModelId codes 0..4")


def gini(counts: np.ndarray) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    n = counts.sum(axis=-1, keepdims=True)
    p = counts / np.where(n > 0, n, 1.0)
    return 1.0 - (p * p).sum(axis=-1)


def best_gini_split(X, onehot, member, orders, min_leaf):
    """Best (gain, feature, threshold) for the rows flagged in ``member``."""
    n = int(member.sum())
    best = (0.0, -1, 0.0)
    if n < 2 * min_leaf:
        return best
    total = onehot[member].sum(axis=0)
    parent = float(gini(total))
    pos = np.arange(min_leaf, n - min_leaf + 1)
    for f in range(X.shape[1]):
        order = orders[f][member[orders[f]]]
        xs = X[order, f]
        valid = xs[pos - 1] < xs[pos]
        if not valid.any():
            continue
        cum = np.cumsum(onehot[order], axis=0)
        left = cum[pos - 1]
        right = total - left
        child = (pos * gini(left) + (n - pos) * gini(right)) / n
        gain = np.where(valid, parent - child, -np.inf)
        j = int(np.argmax(gain))
        if gain[j] > best[0]:
            lo, hi = xs[pos[j] - 1], xs[pos[j]]
            mid = lo + (hi - lo) / 2.0
            best = (float(gain[j]), f, lo if mid >= hi else mid)
    return best


class SelectorModel:
    def __init__(self, columns, params: SelectorParams, feature, threshold, left, right, counts):
        self.columns = list(columns)
        self.params = params
        self.feature = np.asarray(feature, dtype=int)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=int)
        self.right = np.asarray(right, dtype=int)
        self.counts = np.asarray(counts, dtype=int).reshape(-1, N_MODELS)
        self.label = np.argmax(self.counts, axis=1)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depth[self.left[node]] = depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def _leaves(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.columns):
            raise ShapeError(f"selector expects {len(self.columns)} features, got shape {X.shape}")
        node = np.zeros(len(X), dtype=int)
        active = self.feature[node] >= 0
        while active.any():
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return node

    def predict_array(self, X: np.ndarray) -> np.ndarray:
        return self.label[self._leaves(X)]

    def predict(self, rows: FeatureMatrix) -> np.ndarray:
        check_columns(self.columns, rows.column_names)
        if len(rows) == 0:
            return np.zeros(0, dtype=int)
        return self.predict_array(rows.rows)

    def render(self) -> str:
        """Indented text form: split conditions and per-node class counts."""
        lines = []
        names = [m.label for m in RACK]

        def counts_text(node):
            return ", ".join(f"{n}={c}" for n, c in zip(names, self.counts[node]))

        stack = [(0, 0, "")]
        while stack:
            node, depth, prefix = stack.pop()
            pad = "  " * depth
            if self.feature[node] < 0:
                lines.append(f"{pad}{prefix}leaf -> {names[self.label[node]]} [{counts_text(node)}]")
            else:
                cond = f"{self.columns[self.feature[node]]} <= {float(self.threshold[node])!r}"
                lines.append(f"{pad}{prefix}split {cond} [{counts_text(node)}]")
                stack.append((self.right[node], depth + 1, "else: "))
                stack.append((self.left[node], depth + 1, "then: "))
        return "\n".join(lines) + "\n"

    def payload(self):
        return ({"columns": self.columns, "hyperparams": dataclasses.asdict(self.params)},
                {"feature": self.feature, "threshold": self.threshold, "left": self.left,
                 "right": self.right, "counts": self.counts})

    @classmethod
    def from_payload(cls, doc, arrays, source="<string>"):
        try:
            return cls(doc["columns"], SelectorParams(**doc["hyperparams"]), arrays["feature"],
                       arrays["threshold"], arrays["left"], arrays["right"], arrays["counts"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"{source}: malformed selector file ({exc})") from exc


def fit_selector(train_set: SelectorTrainingSet, params: SelectorParams = SelectorParams()
                 ) -> SelectorModel:
    """Greedy CART on Gini impurity.

    Splits go ``x <= threshold`` left, thresholds are midpoints between
    distinct sorted values, and ties in gain resolve to the lower feature
    index, then the lower threshold. Growth stops at ``max_depth`` (None for
    unbounded), when a child would fall below ``min_samples_leaf``, or at a
    pure node.
    """
    X = train_set.X.rows
    y = train_set.y
    if len(y) == 0:
        raise DataError("cannot fit a selector on an empty training set")
    if len(np.unique(y)) < 2:
        log.warning("selector labels contain a single class; the tree is a constant")
    onehot = np.eye(N_MODELS)[y]
    orders = np.argsort(X, axis=0, kind="stable").T
    max_depth = params.max_depth if params.max_depth is not None else np.inf

    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(member):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(onehot[member].sum(axis=0).astype(int))
        return len(feature) - 1

    stack = [(new_node(np.ones(len(y), bool)), np.ones(len(y), bool), 0)]
    while stack:
        node, member, depth = stack.pop()
        if depth >= max_depth or np.count_nonzero(counts[node]) <= 1:
            continue
        gain, f, thr = best_gini_split(X, onehot, member, orders, params.min_samples_leaf)
        if f < 0 or gain <= 1e-12:
            continue
        goes_left = member & (X[:, f] <= thr)
        goes_right = member & ~goes_left
        feature[node], threshold[node] = f, thr
        left[node] = new_node(goes_left)
        right[node] = new_node(goes_right)
        stack.append((right[node], goes_right, depth + 1))
        stack.append((left[node], goes_left, depth + 1))

    return SelectorModel(train_set.X.column_names, params, feature, threshold, left, right,
                         np.array(counts).reshape(-1, N_MODELS))


def select_model(selector: SelectorModel, row) -> ModelId:
    row = np.asarray(row, dtype=float)
    if row.ndim != 1:
        raise ShapeError("select_model takes a single feature vector")
    return ModelId(int(selector.predict_array(row[None, :])[0]))


def dispatch(chosen: np.ndarray, predictions: np.ndarray) -> np.ndarray:
    """Pick ``predictions[row, chosen[row]]``; ``predictions`` is (n, 5)."""
    return predictions[np.arange(len(chosen)), chosen]


def rack_forecast(selector: SelectorModel, models: Mapping[ModelId, RackModel], rows: FeatureMatrix,
                  history: FeatureMatrix | None = None, clamp: bool = True):
    """Per-row forecast from the member the selector picks.

    Returns ``(predictions, chosen)``; predictions are clipped at zero unless
    ``clamp`` is False.
    """
    check_rack(models)
    chosen = selector.predict(rows)
    if len(rows) == 0:
        return np.zeros(0), chosen
    per_model = np.column_stack([models[m].predict(rows, history) for m in RACK])
    pred = dispatch(chosen, per_model)
    return (np.clip(pred, 0.0, None) if clamp else pred), chosen


def save_selector(selector: SelectorModel, path) -> None:
    doc, arrays = selector.payload()
    persist.write(path, "selector", doc, arrays)


def load_selector(path) -> SelectorModel:
    doc, arrays = persist.read(path, "selector")
    return SelectorModel.from_payload(doc, arrays, str(path))


def selector_dumps(selector: SelectorModel) -> str:
    doc, arrays = selector.payload()
    return persist.dumps("selector", doc, arrays)
