"""Design-matrix construction: calendar and price/weather columns, lagged
sales within each series, one-hot categoricals, and min-max scaling."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .data_ingest import FIELD_NAMES, Dataset, SalesRecord
from .errors import ConfigError, DataError, ShapeError

log = logging.getLogger(__name__)

NUMERIC_SOURCES = (
    "gan", "year", "month", "week_no", "avg_sell_price", "original_price",
    "min_temp", "max_temp", "hrs_sunshine", "hrs_rainfall", "hrs_snowfall",
    "hrs_precipitation",
)
DERIVED_NUMERIC = ("week_of_year", "woy_cos", "woy_sin", "discount")
CATEGORICAL_SOURCES = (
    "promo_available", "range_id", "item_id", "fit_id", "listing_ind", "division",
)
TARGET = "sales_qty"


@dataclass(frozen=True)
class FeatureSpec:
    numeric_columns: tuple[str, ...] = ("month", "week_of_year", "avg_sell_price",
                                        "min_temp", "max_temp")
    categorical_columns: tuple[str, ...] = ("division", "promo_available")
    lag_orders: tuple[int, ...] = (1, 2)
    group_key: tuple[str, ...] = ("item_id", "division")

    def __post_init__(self):
        for name in ("numeric_columns", "categorical_columns", "lag_orders", "group_key"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        lags = self.lag_orders
        if any(k <= 0 for k in lags) or any(b <= a for a, b in zip(lags, lags[1:])):
            raise ConfigError(f"lag_orders must be positive and strictly increasing: {lags}")

    def validate(self) -> None:
        for col in self.numeric_columns:
            if col not in NUMERIC_SOURCES and col not in DERIVED_NUMERIC:
                raise ConfigError(f"unknown numeric column {col!r}")
        for col in self.categorical_columns:
            if col not in CATEGORICAL_SOURCES:
                raise ConfigError(f"unknown categorical column {col!r}")
        for col in self.group_key:
            if col not in FIELD_NAMES:
                raise ConfigError(f"unknown group_key column {col!r}")

    @property
    def max_lag(self) -> int:
        return max(self.lag_orders, default=0)


class RowKey(NamedTuple):
    group: tuple
    period: int   # position of the row within its chronologically sorted group
    record: int   # index into the source Dataset


@dataclass
class FeatureMatrix:
    column_names: list[str]
    rows: np.ndarray
    target: np.ndarray
    row_keys: list[RowKey]
    categories: dict[str, list[str]] = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float).reshape(len(self.row_keys), len(self.column_names))
        self.target = np.asarray(self.target, dtype=float)
        if not len(self.rows) == len(self.target) == len(self.row_keys):
            raise ShapeError("rows, target and row_keys differ in length")

    def __len__(self) -> int:
        return len(self.row_keys)

    def take(self, indices) -> "FeatureMatrix":
        idx = np.asarray(indices, dtype=int)
        return replace(self, rows=self.rows[idx], target=self.target[idx],
                       row_keys=[self.row_keys[i] for i in idx], info=dict(self.info))

    def with_rows(self, rows: np.ndarray) -> "FeatureMatrix":
        return replace(self, rows=rows)

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.column_names.index(name)]

    def groups(self) -> dict[tuple, list[int]]:
        """Row indices per group, each list ordered by period."""
        out: dict[tuple, list[int]] = {}
        for i, key in enumerate(self.row_keys):
            out.setdefault(key.group, []).append(i)
        for idx in out.values():
            idx.sort(key=lambda i: self.row_keys[i].period)
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["group", "period", "record", *self.column_names, TARGET])
            for key, row, y in zip(self.row_keys, self.rows, self.target):
                writer.writerow(["|".join(map(str, key.group)), key.period, key.record,
                                 *map(repr, row.tolist()), repr(float(y))])


def detect_week_convention(week_nos: Sequence[int]) -> str:
    """'month' when week numbers look month-relative (0..4), else 'year'."""
    return "month" if max(week_nos, default=0) <= 4 else "year"


def week_of_year(record: SalesRecord, convention: str) -> int:
    if convention == "month":
        return (record.month - 1) * 4 + record.week_no + 1
    return record.week_no


def _category_label(value) -> str:
    if isinstance(value, bool):
        return "YES" if value else "NO"
    return str(value)


def _numeric_value(record: SalesRecord, name: str, convention: str) -> float:
    if name == "week_of_year":
        return float(week_of_year(record, convention))
    if name in ("woy_cos", "woy_sin"):
        angle = 2.0 * math.pi * (week_of_year(record, convention) - 1) / 52.0
        return math.cos(angle) if name == "woy_cos" else math.sin(angle)
    if name == "discount":
        if record.original_price <= 0:
            return 0.0
        return 1.0 - record.avg_sell_price / record.original_price
    return float(getattr(record, name))


def sort_groups(dataset: Dataset, group_key: Sequence[str]) -> dict[tuple, list[int]]:
    """Record indices per group, sorted by (year, month, week_no); ties keep file order."""
    groups: dict[tuple, list[int]] = {}
    for i, rec in enumerate(dataset.records):
        groups.setdefault(tuple(getattr(rec, k) for k in group_key), []).append(i)
    for idx in groups.values():
        idx.sort(key=lambda i: (dataset.records[i].year, dataset.records[i].month,
                                dataset.records[i].week_no))
    return dict(sorted(groups.items()))


def build_features(dataset: Dataset, spec: FeatureSpec = FeatureSpec(),
                   categories: dict[str, list[str]] | None = None,
                   week_convention: str | None = None) -> FeatureMatrix:
    """Assemble the feature matrix.

    ``categories`` fixes the one-hot vocabulary (pass the training matrix's
    ``categories`` when featurizing new data); values outside it encode as an
    all-zero block. Rows whose lags reach before the start of their group are
    dropped and counted in ``info['dropped_for_lags']``.
    """
    spec.validate()
    if len(dataset) == 0:
        raise DataError("cannot build features from an empty dataset")
    records = dataset.records
    convention = week_convention or detect_week_convention([r.week_no for r in records])

    if categories is None:
        categories = {col: sorted({_category_label(getattr(r, col)) for r in records})
                      for col in spec.categorical_columns}
    else:
        categories = {col: list(categories[col]) for col in spec.categorical_columns}

    names = list(spec.numeric_columns)
    for col in spec.categorical_columns:
        names += [f"{col}={c}" for c in categories[col]]
    names += [f"lag_{k}" for k in spec.lag_orders]

    slots = {col: {c: i for i, c in enumerate(categories[col])} for col in spec.categorical_columns}
    groups = sort_groups(dataset, spec.group_key)
    rows, target, keys = [], [], []
    short = 0
    for gkey, idx in groups.items():
        if len(idx) <= spec.max_lag:
            short += 1
            log.warning("group %s has %d records, fewer than lag %d; contributes no rows",
                        gkey, len(idx), spec.max_lag)
        sales = [records[i].sales_qty for i in idx]
        for pos in range(spec.max_lag, len(idx)):
            rec = records[idx[pos]]
            row = [_numeric_value(rec, name, convention) for name in spec.numeric_columns]
            for col in spec.categorical_columns:
                block = [0.0] * len(categories[col])
                slot = slots[col].get(_category_label(getattr(rec, col)))
                if slot is not None:
                    block[slot] = 1.0
                row += block
            row += [float(sales[pos - k]) for k in spec.lag_orders]
            rows.append(row)
            target.append(float(rec.sales_qty))
            keys.append(RowKey(gkey, pos, idx[pos]))

    dropped = len(records) - len(rows)
    info = {"week_convention": convention, "dropped_for_lags": dropped,
            "short_groups": short, "n_groups": len(groups)}
    return FeatureMatrix(names, np.array(rows, dtype=float).reshape(len(rows), len(names)),
                         np.array(target, dtype=float), keys, categories, info)


def train_test_split(matrix: FeatureMatrix, holdout_fraction: float
                     ) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Chronological split: the last ceil(fraction * n) periods of each group
    are held out. Groups with fewer than two rows stay in train."""
    if not 0.0 < holdout_fraction < 1.0:
        raise ConfigError(f"holdout_fraction must lie in (0, 1), got {holdout_fraction}")
    train_idx, test_idx = [], []
    for gkey, idx in matrix.groups().items():
        n = len(idx)
        if n < 2:
            log.warning("group %s too small to split; kept in train", gkey)
            train_idx += idx
            continue
        n_test = min(math.ceil(holdout_fraction * n), n - 1)
        train_idx += idx[: n - n_test]
        test_idx += idx[n - n_test:]
    return matrix.take(train_idx), matrix.take(test_idx)


@dataclass(frozen=True)
class ScalerParams:
    columns: tuple[str, ...]
    mins: np.ndarray
    maxs: np.ndarray

    def index(self, column: str) -> int:
        try:
            return self.columns.index(column)
        except ValueError:
            raise ShapeError(f"unknown column {column!r}") from None


def fit_scaler(matrix: FeatureMatrix) -> ScalerParams:
    if len(matrix) == 0:
        raise DataError("cannot fit a scaler on an empty matrix")
    return ScalerParams(tuple(matrix.column_names), matrix.rows.min(axis=0), matrix.rows.max(axis=0))


def scale_array(x: np.ndarray, mins: np.ndarray, maxs: np.ndarray) -> np.ndarray:
    span = maxs - mins
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (x - mins) / safe, 0.0)


def apply_scaler(matrix: FeatureMatrix, params: ScalerParams) -> FeatureMatrix:
    """Min-max transform; constant columns map to 0 and values outside the
    fitted range are left unclipped."""
    if tuple(matrix.column_names) != params.columns:
        raise ShapeError(f"scaler columns {list(params.columns)} do not match "
                         f"matrix columns {matrix.column_names}")
    return matrix.with_rows(scale_array(matrix.rows, params.mins, params.maxs))


def inverse_scale(value, column: str, params: ScalerParams):
    j = params.index(column)
    lo, hi = params.mins[j], params.maxs[j]
    out = np.asarray(value, dtype=float) * (hi - lo) + lo
    return float(out) if out.ndim == 0 else out
