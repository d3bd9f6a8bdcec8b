import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rackcast.data_ingest import Dataset, SyntheticConfig, generate_synthetic
from rackcast.errors import ConfigError, DataError, ShapeError
from rackcast.features import (FeatureSpec, ScalerParams, apply_scaler, build_features,
                               detect_week_convention, fit_scaler, inverse_scale,
                               train_test_split)

from helpers import matrix, sample_rows


def _series(sales, item="A", division="C"):
    base = sample_rows().records[0]
    recs = [dataclasses.replace(base, item_id=item, division=division, week_no=w % 4,
                                month=1 + w // 4, sales_qty=q) for w, q in enumerate(sales)]
    return recs


def test_three_period_group_gives_one_row():
    fm = build_features(Dataset(tuple(_series([10, 20, 30]))), FeatureSpec(categorical_columns=()))
    assert len(fm) == 1
    assert fm.column("lag_1")[0] == 20 and fm.column("lag_2")[0] == 10
    assert fm.target[0] == 30
    assert fm.info["dropped_for_lags"] == 2


def test_sample_rows_lagged_by_item():
    spec = FeatureSpec(group_key=("item_id",))
    fm = build_features(sample_rows(), spec)
    assert len(fm) == 3
    assert fm.target[0] == 22
    assert fm.column("lag_1")[0] == 21 and fm.column("lag_2")[0] == 37


def test_no_lags_no_categoricals():
    spec = FeatureSpec(categorical_columns=(), lag_orders=())
    fm = build_features(sample_rows(), spec)
    assert fm.column_names == list(spec.numeric_columns)
    assert len(fm) == 5


def test_one_hot_is_lexicographic_and_partitions():
    fm = build_features(sample_rows(), FeatureSpec(lag_orders=()))
    assert fm.categories["division"] == ["Central", "North", "South"]
    assert fm.categories["promo_available"] == ["NO", "YES"]
    for col in ("division", "promo_available"):
        block = [j for j, n in enumerate(fm.column_names) if n.startswith(col + "=")]
        assert np.all(fm.rows[:, block].sum(axis=1) == 1.0)


def test_unseen_category_encodes_as_zeros():
    cats = {"division": ["North"], "promo_available": ["NO", "YES"]}
    fm = build_features(sample_rows(), FeatureSpec(lag_orders=()), categories=cats)
    north = [k.record for k, v in zip(fm.row_keys, fm.column("division=North")) if v == 1.0]
    assert north == [1]
    assert fm.rows[:, fm.column_names.index("division=North")].sum() == 1.0


def test_short_group_contributes_nothing():
    recs = _series([5, 6, 7, 8]) + _series([1, 2], item="B")
    fm = build_features(Dataset(tuple(recs)), FeatureSpec(categorical_columns=()))
    assert {k.group for k in fm.row_keys} == {("A", "C")}
    assert fm.info["short_groups"] == 1


@pytest.mark.parametrize("lags", [(0, 1), (2, 1), (1, 1), (-1,)])
def test_bad_lag_orders(lags):
    with pytest.raises(ConfigError):
        FeatureSpec(lag_orders=lags)


def test_unknown_column():
    with pytest.raises(ConfigError):
        build_features(sample_rows(), FeatureSpec(numeric_columns=("colour",)))


def test_empty_dataset():
    with pytest.raises(DataError):
        build_features(Dataset(()))


def test_week_convention():
    assert detect_week_convention([0, 1, 4]) == "month"
    assert detect_week_convention([0, 12, 51]) == "year"


def test_lags_match_brute_force_scan():
    ds = generate_synthetic(SyntheticConfig(seed=9, n_items=3, n_weeks=20, divisions=("C", "N")))
    spec = FeatureSpec(lag_orders=(1, 3))
    fm = build_features(ds, spec)
    series = {}
    for r in ds.records:   # generator emits chronological order
        series.setdefault((r.item_id, r.division), []).append(r.sales_qty)
    for key, row_lag1, row_lag3, y in zip(fm.row_keys, fm.column("lag_1"), fm.column("lag_3"),
                                          fm.target):
        s = series[key.group]
        assert y == s[key.period]
        assert row_lag1 == s[key.period - 1] and row_lag3 == s[key.period - 3]
    assert len(fm) == len(ds) - 6 * 3


def test_scaler_price_column():
    fm = build_features(sample_rows(), FeatureSpec(numeric_columns=("avg_sell_price",),
                                              categorical_columns=(), lag_orders=()))
    params = fit_scaler(fm)
    assert params.mins[0] == 31.42125 and params.maxs[0] == 58.25
    scaled = apply_scaler(fm, params)
    row = [k.record for k in fm.row_keys].index(3)   # the promo row
    assert scaled.rows[row, 0] == 1.0
    assert inverse_scale(1.0, "avg_sell_price", params) == 58.25
    assert inverse_scale(0.0, "avg_sell_price", params) == 31.42125


def test_scaler_trivial_cases():
    fm = matrix([[0, 4], [5, 4], [10, 4]], [0, 0, 0])
    params = fit_scaler(fm)
    assert params.mins.tolist() == [0, 4] and params.maxs.tolist() == [10, 4]
    out = apply_scaler(fm, params).rows
    assert out[:, 0].tolist() == [0.0, 0.5, 1.0]
    assert np.all(out[:, 1] == 0.0)


def test_scaler_does_not_clip_test_values():
    params = fit_scaler(matrix([[0.0], [10.0]], [0, 0]))
    assert apply_scaler(matrix([[20.0], [-5.0]], [0, 0]), params).rows[:, 0].tolist() == [2.0, -0.5]


def test_scaler_column_mismatch():
    params = fit_scaler(matrix([[0.0], [1.0]], [0, 0]))
    with pytest.raises(ShapeError):
        apply_scaler(matrix([[0.0], [1.0]], [0, 0], names=["other"]), params)
    with pytest.raises(ShapeError):
        inverse_scale(0.5, "other", params)


def test_inverse_round_trip_random():
    rng = np.random.default_rng(0)
    values = rng.normal(50, 20, size=(100, 1))
    params = fit_scaler(matrix(values, np.zeros(100)))
    back = inverse_scale(apply_scaler(matrix(values, np.zeros(100)), params).rows[:, 0], "x0", params)
    assert np.max(np.abs(back - values[:, 0])) < 1e-9


@given(st.lists(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=3, max_size=3),
                min_size=1, max_size=30))
def test_scaling_bounds_property(rows):
    fm = matrix(rows, np.zeros(len(rows)))
    params = fit_scaler(fm)
    out = apply_scaler(fm, params).rows
    for j in range(3):
        col = fm.rows[:, j]
        if col.max() > col.min():
            assert out[:, j].min() >= 0.0 and out[:, j].max() <= 1.0
            assert out[np.argmin(col), j] == 0.0 and out[np.argmax(col), j] == 1.0
        else:
            assert np.all(out[:, j] == 0.0)


def test_scaler_fit_on_train_only():
    train = matrix([[0.0], [4.0]], [0, 0])
    test = matrix([[2.0], [100.0]], [0, 0])
    p1 = fit_scaler(train)
    before = apply_scaler(test, p1).rows.copy()
    p2 = fit_scaler(train)
    assert np.array_equal(apply_scaler(test, p2).rows, before)


def test_split_ten_periods():
    fm = matrix(np.arange(10.0), np.arange(10.0))
    train, test = train_test_split(fm, 0.2)
    assert len(train) == 8 and [k.period for k in test.row_keys] == [8, 9]


def test_split_two_periods_half():
    train, test = train_test_split(matrix([0.0, 1.0], [0, 1]), 0.5)
    assert len(train) == 1 and len(test) == 1


def test_split_single_row_group_stays_in_train():
    fm = matrix([0.0, 1.0, 2.0], [0, 1, 2], groups=[("a",), ("a",), ("b",)])
    train, test = train_test_split(fm, 0.5)
    assert [k.group for k in test.row_keys] == [("a",)]
    assert ("b",) in {k.group for k in train.row_keys}


@pytest.mark.parametrize("f", [0.0, 1.0, -0.5])
def test_split_bad_fraction(f):
    with pytest.raises(ConfigError):
        train_test_split(matrix([0.0, 1.0], [0, 1]), f)


@given(st.integers(2, 40), st.floats(0.01, 0.99))
def test_split_is_chronological_and_deterministic(n, frac):
    fm = matrix(np.arange(float(n)), np.arange(float(n)))
    a_train, a_test = train_test_split(fm, frac)
    b_train, b_test = train_test_split(fm, frac)
    assert a_test.row_keys == b_test.row_keys and a_train.row_keys == b_train.row_keys
    assert max(k.period for k in a_train.row_keys) < min(k.period for k in a_test.row_keys)
    assert len(a_train) + len(a_test) == n


def test_scaler_params_index():
    p = ScalerParams(("a", "b"), np.zeros(2), np.ones(2))
    assert p.index("b") == 1
