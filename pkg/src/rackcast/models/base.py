from __future__ import annotations

from enum import IntEnum

import numpy as np

from ..errors import ShapeError
from ..features import FeatureMatrix, ScalerParams, scale_array


class ModelId(IntEnum):
    """Rack members. The integer codes are selector labels; never reorder."""

    LINEAR = 0
    KNN = 1
    GBT = 2
    POLY2 = 3
    LSTM = 4

    @property
    def label(self) -> str:
        return self.name.lower()


RACK = tuple(ModelId)


def check_columns(expected, actual) -> None:
    expected, actual = list(expected), list(actual)
    if expected == actual:
        return
    missing = [c for c in expected if c not in actual]
    extra = [c for c in actual if c not in expected]
    detail = []
    if missing:
        detail.append(f"missing {missing}")
    if extra:
        detail.append(f"extra {extra}")
    if not detail:
        detail.append("columns out of order")
    raise ShapeError("feature columns do not match training schema: " + "; ".join(detail))


class RackModel:
    """Common surface of the five regressors.

    Subclasses implement ``_predict(X, rows, history)`` on already-scaled
    arrays and ``state()`` / ``from_state()`` for persistence.
    """

    model_id: ModelId

    def __init__(self, columns, params, scaler: ScalerParams | None = None):
        self.columns = list(columns)
        self.params = params
        self.scaler = scaler

    def _scale(self, X: np.ndarray) -> np.ndarray:
        if self.scaler is None:
            return X
        return scale_array(X, self.scaler.mins, self.scaler.maxs)

    def predict(self, rows: FeatureMatrix, history: FeatureMatrix | None = None) -> np.ndarray:
        """Raw (unclamped) predictions, one per row of ``rows``."""
        check_columns(self.columns, rows.column_names)
        if len(rows) == 0:
            return np.zeros(0)
        out = self._predict(self._scale(rows.rows), rows, history)
        return np.asarray(out, dtype=float)

    def _predict(self, X, rows, history):
        raise NotImplementedError

    def state(self) -> tuple[dict, dict[str, np.ndarray]]:
        raise NotImplementedError

    @classmethod
    def from_state(cls, columns, params, scaler, meta, arrays):
        raise NotImplementedError
