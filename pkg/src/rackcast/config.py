"""Every tunable in one place.

The dataclass defaults below *are* the defaults table; nothing downstream
hard-codes a hyperparameter. ``RunConfig`` round-trips through JSON so a run's
configuration can be archived next to its outputs.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .data_ingest import SyntheticConfig
from .errors import ConfigError
from .features import FeatureSpec


@dataclass(frozen=True)
class LinearParams:
    ridge: float = 1e-8
    scale: bool = False


@dataclass(frozen=True)
class KnnParams:
    k: int = 5
    scale: bool = True


@dataclass(frozen=True)
class GbtParams:
    n_trees: int = 100
    learning_rate: float = 0.1
    max_depth: int = 3
    min_samples_leaf: int = 5
    scale: bool = False


@dataclass(frozen=True)
class Poly2Params:
    ridge: float = 1e-8
    max_features: int = 64
    scale: bool = False


@dataclass(frozen=True)
class LstmParams:
    hidden_size: int = 32
    window: int = 8
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0
    scale: bool = True
    scale_target: bool = True


@dataclass(frozen=True)
class Hyperparams:
    linear: LinearParams = LinearParams()
    knn: KnnParams = KnnParams()
    gbt: GbtParams = GbtParams()
    poly2: Poly2Params = Poly2Params()
    lstm: LstmParams = LstmParams()

    def validate(self) -> None:
        checks = [
            (self.linear.ridge >= 0, "linear.ridge must be >= 0"),
            (self.poly2.ridge >= 0, "poly2.ridge must be >= 0"),
            (self.poly2.max_features >= 1, "poly2.max_features must be >= 1"),
            (self.knn.k >= 1, "knn.k must be >= 1"),
            (self.gbt.n_trees >= 0, "gbt.n_trees must be >= 0"),
            (self.gbt.learning_rate > 0, "gbt.learning_rate must be > 0"),
            (self.gbt.max_depth >= 1, "gbt.max_depth must be >= 1"),
            (self.gbt.min_samples_leaf >= 1, "gbt.min_samples_leaf must be >= 1"),
            (self.lstm.hidden_size >= 1, "lstm.hidden_size must be >= 1"),
            (self.lstm.window >= 1, "lstm.window must be >= 1"),
            (self.lstm.epochs >= 0, "lstm.epochs must be >= 0"),
            (self.lstm.batch_size >= 1, "lstm.batch_size must be >= 1"),
            (self.lstm.learning_rate > 0, "lstm.learning_rate must be > 0"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)


@dataclass(frozen=True)
class SelectorParams:
    max_depth: int | None = 8
    min_samples_leaf: int = 5

    def validate(self) -> None:
        if self.max_depth is not None and self.max_depth < 0:
            raise ConfigError("selector.max_depth must be >= 0 or null")
        if self.min_samples_leaf < 1:
            raise ConfigError("selector.min_samples_leaf must be >= 1")


@dataclass(frozen=True)
class IntermittentParams:
    alpha0: float = 0.2
    alpha_min: float = 0.05
    alpha_max: float = 0.5
    error_smoothing: float = 0.2
    adaptive: bool = True


@dataclass(frozen=True)
class BaselineParams:
    intermittent: IntermittentParams = IntermittentParams()
    season_length: int = 52


@dataclass(frozen=True)
class DataSource:
    csv: str | None = None
    synthetic: SyntheticConfig | None = None

    def validate(self) -> None:
        if (self.csv is None) == (self.synthetic is None):
            raise ConfigError("data source needs exactly one of 'csv' or 'synthetic'")


@dataclass(frozen=True)
class RunConfig:
    data: DataSource = DataSource(synthetic=SyntheticConfig())
    features: FeatureSpec = FeatureSpec()
    test_fraction: float = 0.2
    validation_fraction: float = 0.25
    hyperparams: Hyperparams = Hyperparams()
    selector: SelectorParams = SelectorParams()
    baselines: BaselineParams = BaselineParams()
    pivots: tuple[tuple[str, ...], ...] = ((), ("division",), ("gan", "division"))
    output_dir: str = "run"
    seed: int = 0

    def validate(self) -> None:
        self.data.validate()
        self.features.validate()
        self.hyperparams.validate()
        self.selector.validate()
        for name in ("test_fraction", "validation_fraction"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ConfigError(f"{name} must lie in (0, 1), got {value}")

    def to_dict(self) -> dict:
        return _to_plain(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        cfg = _from_plain(cls, data, "config")
        cfg.validate()
        return cfg

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)


def _to_plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    return obj


_NESTED = {
    "data": DataSource, "synthetic": SyntheticConfig, "features": FeatureSpec,
    "hyperparams": Hyperparams, "linear": LinearParams, "knn": KnnParams,
    "gbt": GbtParams, "poly2": Poly2Params, "lstm": LstmParams,
    "selector": SelectorParams, "baselines": BaselineParams,
    "intermittent": IntermittentParams,
}


def _from_plain(cls, data: Any, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{where}: unknown key {unknown[0]!r}")
    kwargs = {}
    for name, value in data.items():
        sub = _NESTED.get(name)
        if sub is not None and value is not None:
            kwargs[name] = _from_plain(sub, value, f"{where}.{name}")
        elif name == "pivots":
            kwargs[name] = tuple(tuple(p) for p in value)
        elif isinstance(value, list):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def default_config(**overrides) -> RunConfig:
    return dataclasses.replace(RunConfig(), **overrides)
