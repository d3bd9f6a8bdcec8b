"""The five-model algorithmic rack behind one fit/predict surface."""

from __future__ import annotations

import dataclasses

import numpy as np

from .. import persist
from ..config import GbtParams, Hyperparams, KnnParams, LinearParams, LstmParams, Poly2Params
from ..errors import IncompleteRackError, ModelFormatError
from ..features import FeatureMatrix, ScalerParams, apply_scaler, fit_scaler
from .base import RACK, ModelId, RackModel, check_columns
from .gbt import GbtModel, RegressionTree, fit_gbt, fit_tree
from .knn import KnnModel, fit_knn, nearest_indices, predict_knn
from .linear import LinearModel, Poly2Model, fit_linear, fit_poly2, poly2_expand, solve_ridge
from .lstm import LstmModel, fit_lstm

__all__ = [
    "RACK", "ModelId", "RackModel", "LinearModel", "KnnModel", "GbtModel", "Poly2Model",
    "LstmModel", "RegressionTree", "fit_linear", "fit_knn", "predict_knn", "fit_gbt",
    "fit_poly2", "fit_lstm", "fit_tree", "fit_model", "fit_rack", "predict", "save_model",
    "load_model", "model_dumps", "model_loads", "nearest_indices", "poly2_expand", "solve_ridge",
    "check_rack",
]

_CLASSES = {ModelId.LINEAR: LinearModel, ModelId.KNN: KnnModel, ModelId.GBT: GbtModel,
            ModelId.POLY2: Poly2Model, ModelId.LSTM: LstmModel}
_PARAMS = {ModelId.LINEAR: LinearParams, ModelId.KNN: KnnParams, ModelId.GBT: GbtParams,
           ModelId.POLY2: Poly2Params, ModelId.LSTM: LstmParams}


def params_for(model_id: ModelId, hp: Hyperparams):
    return getattr(hp, ModelId(model_id).label)


def fit_model(model_id: ModelId, train: FeatureMatrix, hp: Hyperparams = Hyperparams(),
              seed: int | None = None) -> RackModel:
    """Fit one rack member, wrapping it in min-max scaling when its params ask."""
    model_id = ModelId(model_id)
    params = params_for(model_id, hp)
    if model_id is ModelId.LSTM and seed is not None:
        params = dataclasses.replace(params, seed=seed)
    scaler = fit_scaler(train) if params.scale else None
    data = apply_scaler(train, scaler) if scaler is not None else train
    if model_id is ModelId.LINEAR:
        model = fit_linear(data, params=params)
    elif model_id is ModelId.KNN:
        model = fit_knn(data, params=params)
    elif model_id is ModelId.GBT:
        model = fit_gbt(data, params)
    elif model_id is ModelId.POLY2:
        model = fit_poly2(data, params=params)
    else:
        model = fit_lstm(data, params)
    model.scaler = scaler
    return model


def fit_rack(train: FeatureMatrix, hp: Hyperparams = Hyperparams(), seed: int | None = None
             ) -> dict[ModelId, RackModel]:
    return {mid: fit_model(mid, train, hp, seed) for mid in RACK}


def check_rack(models) -> None:
    missing = [m.label for m in RACK if m not in models]
    if missing:
        raise IncompleteRackError(f"rack is missing models: {missing}")


def predict(model: RackModel, rows: FeatureMatrix, history: FeatureMatrix | None = None) -> np.ndarray:
    return model.predict(rows, history)


def _model_payload(model: RackModel):
    meta, arrays = model.state()
    payload = {"model_id": model.model_id.label, "code": int(model.model_id),
               "columns": model.columns, "hyperparams": dataclasses.asdict(model.params),
               "meta": meta, "scaled": model.scaler is not None}
    if model.scaler is not None:
        arrays = {**arrays, "scaler_min": model.scaler.mins, "scaler_max": model.scaler.maxs}
    return payload, arrays


def model_dumps(model: RackModel) -> str:
    payload, arrays = _model_payload(model)
    return persist.dumps("model", payload, arrays)


def _from_doc(doc, arrays, source) -> RackModel:
    try:
        model_id = ModelId(doc["code"])
        if model_id.label != doc["model_id"]:
            raise ModelFormatError(f"{source}: model id and code disagree")
        params = _PARAMS[model_id](**doc["hyperparams"])
        scaler = None
        if doc["scaled"]:
            scaler = ScalerParams(tuple(doc["columns"]), arrays.pop("scaler_min"), arrays.pop("scaler_max"))
        return _CLASSES[model_id].from_state(doc["columns"], params, scaler, doc["meta"], arrays)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{source}: malformed model file ({exc})") from exc


def model_loads(text: str) -> RackModel:
    doc, arrays = persist.loads("model", text)
    return _from_doc(doc, arrays, "<string>")


def save_model(model: RackModel, path) -> None:
    payload, arrays = _model_payload(model)
    persist.write(path, "model", payload, arrays)


def load_model(path) -> RackModel:
    doc, arrays = persist.read(path, "model")
    return _from_doc(doc, arrays, str(path))
