"""Error and accuracy measures.

Accuracy throughout is ``max(0, 1 - WMAPE)`` with
``WMAPE = sum|y - yhat| / sum y``, i.e. volume-weighted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .data_ingest import FIELD_NAMES, SalesRecord
from .errors import ConfigError, ShapeError, UndefinedAccuracyError, ZeroActualError

N_MODELS = 5
ACCURACY_DEFINITION = "accuracy = max(0, 1 - WMAPE), WMAPE = sum|actual - forecast| / sum actual"


def ape(y_true: float, y_pred: float) -> float:
    if y_true == 0:
        raise ZeroActualError("APE is undefined for a zero actual; use the absolute error")
    return abs(y_true - y_pred) / y_true


def _pair(y_true, y_pred) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(y_true, dtype=float).ravel()
    b = np.asarray(y_pred, dtype=float).ravel()
    if len(a) != len(b):
        raise ShapeError(f"length mismatch: {len(a)} actuals vs {len(b)} predictions")
    return a, b


def row_errors(y_true, y_pred) -> tuple[np.ndarray, np.ndarray]:
    """Per-row APE, with |y_pred| substituted where the actual is zero.

    Returns ``(errors, zero_actual_flags)``.
    """
    a, b = _pair(y_true, y_pred)
    zero = a == 0
    err = np.abs(a - b) / np.where(zero, 1.0, a)
    return err, zero


def rmse(y_true, y_pred) -> float:
    a, b = _pair(y_true, y_pred)
    if len(a) == 0:
        raise ShapeError("rmse of empty vectors")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def r2(y_true, y_pred) -> float:
    """Coefficient of determination; NaN when the actuals are constant."""
    a, b = _pair(y_true, y_pred)
    if len(a) == 0:
        raise ShapeError("r2 of empty vectors")
    sst = float(np.sum((a - a.mean()) ** 2))
    if sst == 0:
        return math.nan
    return 1.0 - float(np.sum((a - b) ** 2)) / sst


def wmape(y_true, y_pred) -> float:
    a, b = _pair(y_true, y_pred)
    total = float(a.sum())
    if total <= 0:
        raise UndefinedAccuracyError("WMAPE is undefined when all actuals are zero")
    return float(np.abs(a - b).sum()) / total


def accuracy(y_true, y_pred) -> float:
    return max(0.0, 1.0 - wmape(y_true, y_pred))


def mean_ape(y_true, y_pred) -> float:
    """Mean APE over rows with a non-zero actual (NaN if there are none)."""
    err, zero = row_errors(y_true, y_pred)
    keep = ~zero
    return float(err[keep].mean()) if keep.any() else math.nan


def confusion_matrix(true_best, selected, n_classes: int = N_MODELS) -> np.ndarray:
    t = np.asarray(true_best, dtype=int).ravel()
    s = np.asarray(selected, dtype=int).ravel()
    if len(t) != len(s):
        raise ShapeError(f"length mismatch: {len(t)} labels vs {len(s)} selections")
    out = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(out, (t, s), 1)
    return out


def hit_rate(matrix: np.ndarray) -> float:
    total = matrix.sum()
    return float(np.trace(matrix) / total) if total else math.nan


def score(y_true, y_pred) -> dict[str, float | None]:
    """rmse, r2, mean_ape, wmape and accuracy; undefined values become None."""
    a, b = _pair(y_true, y_pred)
    out: dict[str, float | None] = {"n": int(len(a))}
    if len(a) == 0:
        return {**out, "rmse": None, "r2": None, "mean_ape": None, "wmape": None, "accuracy": None}
    out["rmse"] = rmse(a, b)
    out["r2"] = _finite_or_none(r2(a, b))
    out["mean_ape"] = _finite_or_none(mean_ape(a, b))
    try:
        out["wmape"] = wmape(a, b)
        out["accuracy"] = accuracy(a, b)
    except UndefinedAccuracyError:
        out["wmape"] = out["accuracy"] = None
    return out


def _finite_or_none(x: float) -> float | None:
    return None if x is None or not math.isfinite(x) else float(x)


@dataclass(frozen=True)
class ErrorMatrix:
    values: np.ndarray        # (n_rows, 5) in ModelId order
    zero_actual: np.ndarray   # (n_rows,) bool
    row_keys: tuple = ()

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != N_MODELS:
            raise ShapeError(f"error matrix must have {N_MODELS} columns, got {self.values.shape}")
        if len(self.zero_actual) != len(self.values):
            raise ShapeError("zero_actual flags do not match the row count")

    def __len__(self) -> int:
        return len(self.values)


def error_matrix(y_true, predictions: Sequence[np.ndarray], row_keys=()) -> ErrorMatrix:
    """Stack per-model row errors (``predictions`` in ModelId order)."""
    if len(predictions) != N_MODELS:
        raise ShapeError(f"need {N_MODELS} prediction vectors, got {len(predictions)}")
    cols, zero = [], None
    for pred in predictions:
        err, zero = row_errors(y_true, pred)
        cols.append(err)
    values = np.column_stack(cols) if cols[0].size else np.zeros((0, N_MODELS))
    return ErrorMatrix(values, zero, tuple(row_keys))


def evaluate_by_pivot(records: Sequence[SalesRecord], y_true, predictions: Mapping[str, np.ndarray],
                      pivot: Sequence[str]) -> list[dict]:
    """Recompute ``score`` within each cell of a pivot.

    ``records`` is aligned with ``y_true``; ``pivot`` names SalesRecord fields
    (empty means a single all-rows cell). Cells sort by their key values.
    """
    for dim in pivot:
        if dim not in FIELD_NAMES:
            raise ConfigError(f"unknown pivot dimension {dim!r}")
    y = np.asarray(y_true, dtype=float)
    if len(records) != len(y):
        raise ShapeError("records and actuals differ in length")
    cells: dict[tuple, list[int]] = {}
    for i, rec in enumerate(records):
        cells.setdefault(tuple(getattr(rec, d) for d in pivot), []).append(i)
    out = []
    for key in sorted(cells):
        idx = np.array(cells[key])
        yt = y[idx]
        defined = bool(yt.sum() > 0)
        out.append({
            "pivot": list(pivot),
            "cell": list(key),
            "n": int(len(idx)),
            "volume": float(yt.sum()),
            "defined": defined,
            "models": {name: score(yt, np.asarray(p, dtype=float)[idx]) for name, p in predictions.items()},
        })
    return out
