from __future__ import annotations

import numpy as np

from ..config import KnnParams
from ..errors import ConfigError
from ..features import FeatureMatrix
from .base import ModelId, RackModel

_CHUNK = 32


def nearest_indices(train_X: np.ndarray, query_X: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest training rows per query (Euclidean).

    Exhaustive search; equal distances are resolved in favour of the lower
    training index via a stable sort.
    """
    out = np.empty((len(query_X), k), dtype=int)
    for start in range(0, len(query_X), _CHUNK):
        q = query_X[start:start + _CHUNK]
        diff = q[:, None, :] - train_X[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        out[start:start + _CHUNK] = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return out


class KnnModel(RackModel):
    model_id = ModelId.KNN

    def __init__(self, columns, params, train_X, train_y, scaler=None):
        super().__init__(columns, params, scaler)
        self.train_X = np.asarray(train_X, dtype=float)
        self.train_y = np.asarray(train_y, dtype=float)

    def _predict(self, X, rows, history):
        idx = nearest_indices(self.train_X, X, self.params.k)
        return self.train_y[idx].mean(axis=1)

    def state(self):
        return {}, {"train_X": self.train_X, "train_y": self.train_y}

    @classmethod
    def from_state(cls, columns, params, scaler, meta, arrays):
        return cls(columns, params, arrays["train_X"], arrays["train_y"], scaler)


def fit_knn(train: FeatureMatrix, k: int = KnnParams.k, params: KnnParams | None = None) -> KnnModel:
    params = params or KnnParams(k=k)
    if params.k > len(train):
        raise ConfigError(f"k={params.k} exceeds the {len(train)} training rows")
    return KnnModel(train.column_names, params, train.rows.copy(), train.target.copy())


def predict_knn(model: KnnModel, rows: FeatureMatrix) -> np.ndarray:
    return model.predict(rows)
