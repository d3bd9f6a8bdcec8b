"""Label validation rows with their best member, grow the selector tree, and
dispatch test rows through it."""

import numpy as np

from rackcast.config import GbtParams, Hyperparams, LstmParams, SelectorParams
from rackcast.data_ingest import SyntheticConfig, generate_synthetic
from rackcast.features import FeatureSpec, build_features, train_test_split
from rackcast.metrics import accuracy, confusion_matrix, error_matrix, hit_rate
from rackcast.models import RACK, fit_rack
from rackcast.selector import SelectorTrainingSet, fit_selector, label_best_model, rack_forecast

data = generate_synthetic(SyntheticConfig(seed=8, n_items=12, n_weeks=80))
fm = build_features(data, FeatureSpec(categorical_columns=("division", "promo_available", "range_id")))
train, test = train_test_split(fm, 0.2)
fit, validation = train_test_split(train, 0.25)

hp = Hyperparams(gbt=GbtParams(n_trees=50), lstm=LstmParams(hidden_size=16, epochs=10))
models = fit_rack(fit, hp)

def member_predictions(rows):
    return np.column_stack([models[m].predict(rows, fm) for m in RACK]).clip(0)

val_pred = member_predictions(validation)
labels = label_best_model(error_matrix(validation.target, list(val_pred.T)))
print("validation labels:", {m.label: int(c) for m, c in zip(RACK, np.bincount(labels, minlength=5))})

selector = fit_selector(SelectorTrainingSet(validation, labels), SelectorParams(max_depth=3, min_samples_leaf=30))
print(selector.render())

rack, chosen = rack_forecast(selector, models, test, history=fm)
test_pred = member_predictions(test)
truth = label_best_model(error_matrix(test.target, list(test_pred.T)))
print(f"rack accuracy {accuracy(test.target, rack):.3f}")
for j, m in enumerate(RACK):
    print(f"  {m.label:7s} {accuracy(test.target, test_pred[:, j]):.3f}")
print(f"selector hit rate on test rows: {hit_rate(confusion_matrix(truth, chosen)):.2f}")
