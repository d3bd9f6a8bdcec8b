import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rackcast.config import GbtParams, Hyperparams, LinearParams, LstmParams, SelectorParams
from rackcast.data_ingest import SyntheticConfig, generate_synthetic
from rackcast.errors import DataError, IncompleteRackError, ShapeError
from rackcast.features import FeatureSpec, build_features, train_test_split
from rackcast.metrics import error_matrix, row_errors
from rackcast.models import RACK, LinearModel, ModelId, fit_rack
from rackcast.selector import (SelectorModel, SelectorTrainingSet, build_error_matrix, dispatch,
                               fit_selector, label_best_model, load_selector, rack_forecast,
                               save_selector, select_model, selector_dumps)

import oracles
from helpers import matrix


def _constant_rack(values):
    """Five hand-built linear models that each predict a constant."""
    return {mid: LinearModel(["x0"], LinearParams(), v, [0.0]) for mid, v in zip(RACK, values)}


def _leaf(label, columns=("x0",)):
    counts = np.zeros(5, dtype=int)
    counts[label] = 1
    return SelectorModel(list(columns), SelectorParams(), [-1], [0.0], [-1], [-1], [counts])


def test_error_matrix_row():
    em = build_error_matrix(matrix([0.0], [10.0]), _constant_rack([8, 10, 12, 5, 20]))
    assert np.allclose(em.values[0], [0.2, 0.0, 0.2, 0.5, 1.0])


def test_error_matrix_zero_actual():
    em = build_error_matrix(matrix([0.0], [0.0]), _constant_rack([0, 1, 2, 3, 4]))
    assert em.values[0].tolist() == [0, 1, 2, 3, 4] and em.zero_actual[0]


def test_error_matrix_needs_full_rack():
    rack = _constant_rack([1] * 5)
    del rack[ModelId.GBT]
    with pytest.raises(IncompleteRackError):
        build_error_matrix(matrix([0.0], [1.0]), rack)


def test_label_examples():
    assert label_best_model(np.array([[0.3, 0.1, 0.2, 0.5, 0.4]])).tolist() == [1]
    assert label_best_model(np.full((1, 5), 0.7)).tolist() == [0]
    labels = label_best_model(np.array([[0.5, 0.1, 0.9, 0.9, 0.9], [0.5, 0.5, 0.1, 0.5, 0.5],
                                        [0.5, 0.5, 0.5, 0.5, 0.1], [0.2, 0.1, 0.3, 0.3, 0.3]]))
    assert labels.tolist() == [1, 2, 4, 1]


def test_label_empty():
    with pytest.raises(DataError):
        label_best_model(np.zeros((0, 5)))


_err_rows = st.lists(st.lists(st.sampled_from([0.0, 0.1, 0.5, 1.0, 2.0]), min_size=5, max_size=5),
                     min_size=1, max_size=30)


@given(_err_rows)
def test_label_indexes_a_minimum(rows):
    values = np.array(rows)
    labels = label_best_model(values)
    for row, lab in zip(values, labels):
        assert row[lab] == row.min()
        assert lab == min(j for j in range(5) if row[j] == row.min())


@given(_err_rows, st.permutations(range(5)))
def test_label_permutation_consistency(rows, perm):
    values = np.array(rows)
    perm = np.array(perm)
    # new column j holds old model perm[j] and keeps that model's tie priority
    permuted = values[:, perm]
    expected = label_best_model(values)
    got = []
    for row in permuted:
        ties = np.flatnonzero(row == row.min())
        got.append(perm[ties[np.argmin(perm[ties])]])
    assert np.array_equal(np.array(got), expected)


def test_training_set_checks():
    with pytest.raises(ShapeError):
        SelectorTrainingSet(matrix([0.0, 1.0], [0, 0]), [0])
    with pytest.raises(DataError):
        SelectorTrainingSet(matrix([0.0], [0]), [5])
    with pytest.raises(DataError):
        fit_selector(SelectorTrainingSet(matrix(np.zeros((0, 1)), []), []))


def test_single_label_gives_single_leaf():
    sel = fit_selector(SelectorTrainingSet(matrix(np.arange(10.0), np.zeros(10)), [3] * 10))
    assert sel.n_nodes == 1
    assert set(sel.predict_array(np.linspace(-50, 50, 9)[:, None]).tolist()) == {3}


def test_separable_root_split():
    sel = fit_selector(SelectorTrainingSet(matrix([0.0, 1, 2, 3], np.zeros(4)), [0, 0, 2, 2]),
                       SelectorParams(min_samples_leaf=1))
    assert sel.feature[0] == 0 and 1.0 < sel.threshold[0] < 2.0
    assert sel.predict_array(np.array([[0.0], [1], [2], [3]])).tolist() == [0, 0, 2, 2]


@settings(max_examples=40)
@given(st.integers(0, 2**31 - 1), st.integers(1, 4))
def test_stump_matches_brute_force(seed, min_leaf):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 6, size=(25, 2)).astype(float)
    y = rng.integers(0, 3, 25)
    sel = fit_selector(SelectorTrainingSet(matrix(X, np.zeros(25)), y),
                       SelectorParams(max_depth=1, min_samples_leaf=min_leaf))
    gain, f, thr = oracles.brute_best_gini_split(X.tolist(), y.tolist(), 5, min_leaf)
    if f < 0 or gain <= 1e-12:
        assert sel.n_nodes == 1
    else:
        assert (sel.feature[0], sel.threshold[0]) == (f, pytest.approx(thr))


def test_unbounded_tree_memorises_training_labels():
    rng = np.random.default_rng(1)
    X = rng.permutation(200).reshape(100, 2).astype(float)
    y = rng.integers(0, 5, 100)
    sel = fit_selector(SelectorTrainingSet(matrix(X, np.zeros(100)), y),
                       SelectorParams(max_depth=None, min_samples_leaf=1))
    assert np.array_equal(sel.predict_array(X), y)


def test_leaf_counts_and_depth_limits():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(300, 3))
    y = rng.integers(0, 5, 300)
    params = SelectorParams(max_depth=3, min_samples_leaf=10)
    sel = fit_selector(SelectorTrainingSet(matrix(X, np.zeros(300)), y), params)
    leaves = sel.feature < 0
    assert sel.depth <= 3
    assert np.all(sel.counts[leaves].sum(axis=1) >= 10)
    internal = ~leaves
    assert np.all(sel.counts[internal].sum(axis=1)
                  == sel.counts[sel.left[internal]].sum(axis=1)
                  + sel.counts[sel.right[internal]].sum(axis=1))
    assert sel.counts[0].sum() == 300


def test_fit_is_deterministic(tmp_path):
    rng = np.random.default_rng(3)
    X, y = rng.normal(size=(120, 2)), rng.integers(0, 5, 120)
    ts = SelectorTrainingSet(matrix(X, np.zeros(120)), y)
    a, b = fit_selector(ts), fit_selector(ts)
    assert selector_dumps(a) == selector_dumps(b)
    path = tmp_path / "sel.json"
    save_selector(a, path)
    again = load_selector(path)
    assert np.array_equal(again.predict_array(X), a.predict_array(X))
    assert again.render() == a.render()


def test_render_mentions_splits_and_counts():
    sel = fit_selector(SelectorTrainingSet(matrix([0.0, 1, 2, 3], np.zeros(4)), [0, 0, 2, 2]),
                       SelectorParams(min_samples_leaf=1))
    text = sel.render()
    assert "split x0 <= 1.5" in text and "leaf -> gbt" in text and "linear=2" in text


def test_select_model_and_schema():
    sel = _leaf(ModelId.POLY2)
    assert select_model(sel, [123.0]) is ModelId.POLY2
    assert select_model(sel, [-9.0]) is ModelId.POLY2
    with pytest.raises(ShapeError):
        sel.predict(matrix([[0.0, 1.0]], [0]))


def test_selection_histogram_conservation():
    rng = np.random.default_rng(4)
    X, y = rng.normal(size=(1000, 2)), rng.integers(0, 5, 1000)
    sel = fit_selector(SelectorTrainingSet(matrix(X, np.zeros(1000)), y))
    assert np.bincount(sel.predict_array(X), minlength=5).sum() == 1000


def test_constant_linear_selector_reproduces_linear():
    rack = _constant_rack([-3.0, 1, 2, 3, 4])
    rack[ModelId.LINEAR] = LinearModel(["x0"], LinearParams(), 1.0, [2.0])
    rows = matrix([-2.0, 0.0, 3.0], [0, 0, 0])
    raw, chosen = rack_forecast(_leaf(ModelId.LINEAR), rack, rows, clamp=False)
    assert np.array_equal(raw, rack[ModelId.LINEAR].predict(rows))
    assert chosen.tolist() == [0, 0, 0]
    clamped, _ = rack_forecast(_leaf(ModelId.LINEAR), rack, rows)
    assert clamped.tolist() == [0.0, 1.0, 7.0]


def test_dispatch():
    preds = np.arange(15.0).reshape(3, 5)
    assert dispatch(np.array([4, 0, 2]), preds).tolist() == [4.0, 5.0, 12.0]


@pytest.fixture(scope="module")
def fitted():
    ds = generate_synthetic(SyntheticConfig(seed=11, n_items=8, n_weeks=40, divisions=("C",)))
    fm = build_features(ds, FeatureSpec())
    train, test = train_test_split(fm, 0.25)
    hp = Hyperparams(gbt=GbtParams(n_trees=15), lstm=LstmParams(hidden_size=4, window=3, epochs=2))
    models = fit_rack(train, hp)
    return fm, train, test, models


def test_error_matrix_end_to_end(fitted):
    fm, train, test, models = fitted
    em = build_error_matrix(test, models, history=fm)
    assert em.values.shape == (len(test), 5)
    assert np.all(np.isfinite(em.values)) and np.all(em.values >= 0)
    assert np.array_equal(em.zero_actual, test.target == 0)


def test_perfect_selector_reaches_row_minimum(fitted):
    fm, train, test, models = fitted
    per_model = np.column_stack([models[m].predict(test, fm) for m in RACK])
    em = error_matrix(test.target, list(per_model.T))
    labels = label_best_model(em)
    rack = dispatch(labels, per_model)
    err, _ = row_errors(test.target, rack)
    assert np.allclose(err, em.values.min(axis=1))


def test_rack_error_within_row_bounds(fitted):
    fm, train, test, models = fitted
    sel = fit_selector(SelectorTrainingSet(train, np.arange(len(train)) % 5))
    pred, chosen = rack_forecast(sel, models, test, history=fm, clamp=False)
    per_model = np.column_stack([models[m].predict(test, fm) for m in RACK])
    em = error_matrix(test.target, list(per_model.T))
    err, _ = row_errors(test.target, pred)
    assert np.all(err >= em.values.min(axis=1) - 1e-12)
    assert np.all(err <= em.values.max(axis=1) + 1e-12)
    assert np.bincount(chosen, minlength=5).sum() == len(test)
