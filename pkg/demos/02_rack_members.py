"""Fit the five rack members on one dataset and compare them on held-out weeks."""

from rackcast.config import GbtParams, Hyperparams, LstmParams
from rackcast.data_ingest import SyntheticConfig, generate_synthetic
from rackcast.features import FeatureSpec, build_features, train_test_split
from rackcast.metrics import score
from rackcast.models import RACK, fit_rack

data = generate_synthetic(SyntheticConfig(seed=5, n_items=8, n_weeks=80, divisions=("Central",)))
fm = build_features(data, FeatureSpec())
train, test = train_test_split(fm, 0.2)

hp = Hyperparams(gbt=GbtParams(n_trees=50), lstm=LstmParams(hidden_size=16, epochs=10))
models = fit_rack(train, hp, seed=0)

print(f"{'model':8s} {'rmse':>8s} {'r2':>7s} {'accuracy':>9s}")
for mid in RACK:
    # history lets the lstm see the weeks leading into the test window
    s = score(test.target, models[mid].predict(test, history=fm).clip(0))
    r2 = "n/a" if s["r2"] is None else f"{s['r2']:.3f}"
    print(f"{mid.label:8s} {s['rmse']:8.2f} {r2:>7s} {s['accuracy']:9.3f}")
