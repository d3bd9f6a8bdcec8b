"""Ridge least squares and its degree-2 polynomial expansion."""

from __future__ import annotations

import numpy as np

from ..config import LinearParams, Poly2Params
from ..errors import DataError, DimensionalityError, SingularMatrixError
from ..features import FeatureMatrix
from .base import ModelId, RackModel


def solve_ridge(X: np.ndarray, y: np.ndarray, ridge: float) -> tuple[float, np.ndarray]:
    """Minimise ||y - b0 - X b||^2 + ridge * ||b||^2 (intercept unpenalised).

    Solved as an augmented least-squares problem through SVD rather than the
    normal equations, so one-hot collinearity only needs a tiny ridge.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n < 1:
        raise DataError("least squares needs at least one row")
    design = np.hstack([np.ones((n, 1)), X])
    if ridge > 0:
        penalty = np.hstack([np.zeros((p, 1)), np.sqrt(ridge) * np.eye(p)])
        design = np.vstack([design, penalty])
        y = np.concatenate([y, np.zeros(p)])
    beta, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < p + 1:
        raise SingularMatrixError(
            f"design matrix has rank {rank} < {p + 1}; use a ridge penalty > 0")
    return float(beta[0]), beta[1:]


class LinearModel(RackModel):
    model_id = ModelId.LINEAR

    def __init__(self, columns, params, intercept, coef, scaler=None):
        super().__init__(columns, params, scaler)
        self.intercept = float(intercept)
        self.coef = np.asarray(coef, dtype=float)

    def _predict(self, X, rows, history):
        return self.intercept + X @ self.coef

    def state(self):
        return {"intercept": self.intercept}, {"coef": self.coef}

    @classmethod
    def from_state(cls, columns, params, scaler, meta, arrays):
        return cls(columns, params, meta["intercept"], arrays["coef"], scaler)


def fit_linear(train: FeatureMatrix, ridge: float = LinearParams.ridge,
               params: LinearParams | None = None) -> LinearModel:
    params = params or LinearParams(ridge=ridge)
    intercept, coef = solve_ridge(train.rows, train.target, params.ridge)
    return LinearModel(train.column_names, params, intercept, coef)


def poly2_names(columns) -> list[str]:
    columns = list(columns)
    names = columns + [f"{c}^2" for c in columns]
    names += [f"{a}*{b}" for i, a in enumerate(columns) for b in columns[i + 1:]]
    return names


def poly2_expand(X: np.ndarray) -> np.ndarray:
    """Columns: x_i, then x_i^2, then x_i*x_j for i < j in lexicographic order.

    The intercept is added by the solver, giving 1 + 2p + p(p-1)/2 terms.
    """
    X = np.asarray(X, dtype=float)
    p = X.shape[1]
    iu, ju = np.triu_indices(p, k=1)
    return np.hstack([X, X * X, X[:, iu] * X[:, ju]])


class Poly2Model(RackModel):
    model_id = ModelId.POLY2

    def __init__(self, columns, params, intercept, coef, scaler=None):
        super().__init__(columns, params, scaler)
        self.intercept = float(intercept)
        self.coef = np.asarray(coef, dtype=float)

    def _predict(self, X, rows, history):
        return self.intercept + poly2_expand(X) @ self.coef

    def state(self):
        return {"intercept": self.intercept}, {"coef": self.coef}

    @classmethod
    def from_state(cls, columns, params, scaler, meta, arrays):
        return cls(columns, params, meta["intercept"], arrays["coef"], scaler)


def fit_poly2(train: FeatureMatrix, ridge: float = Poly2Params.ridge,
              params: Poly2Params | None = None) -> Poly2Model:
    params = params or Poly2Params(ridge=ridge)
    p = train.rows.shape[1]
    if p > params.max_features:
        raise DimensionalityError(
            f"{p} features exceed the degree-2 limit of {params.max_features}; "
            "reduce the feature set before fitting poly2")
    intercept, coef = solve_ridge(poly2_expand(train.rows), train.target, params.ridge)
    return Poly2Model(train.column_names, params, intercept, coef)
