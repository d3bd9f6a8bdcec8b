"""Generate a small synthetic history, round-trip it through CSV, and look at
the design matrix the rack trains on."""

import tempfile
from pathlib import Path

import numpy as np

from rackcast.data_ingest import SyntheticConfig, generate_synthetic, parse_csv, write_csv
from rackcast.features import FeatureSpec, apply_scaler, build_features, fit_scaler, train_test_split

cfg = SyntheticConfig(seed=3, n_items=4, n_weeks=52, divisions=("Central", "North"))
data = generate_synthetic(cfg)
print(f"{len(data)} weekly rows for {cfg.n_items} items x {len(cfg.divisions)} divisions")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "sales.csv"
    write_csv(data, path)
    back = parse_csv(path)
    print("CSV round trip identical:", back.records == data.records)

spec = FeatureSpec(numeric_columns=("month", "week_of_year", "avg_sell_price", "min_temp"),
                   categorical_columns=("division", "promo_available"))
fm = build_features(data, spec)
print("columns:", fm.column_names)
print(f"{len(fm)} rows after dropping {fm.info['dropped_for_lags']} without two weeks of history")

train, test = train_test_split(fm, 0.2)
params = fit_scaler(train)
scaled = apply_scaler(test, params)
print(f"train {len(train)} / test {len(test)} rows; test columns scaled into "
      f"[{scaled.rows.min():.2f}, {scaled.rows.max():.2f}] (not clipped)")
print("first test row, raw:   ", np.round(test.rows[0], 2))
