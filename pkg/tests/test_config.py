import dataclasses
import json

import pytest

from rackcast.config import GbtParams, Hyperparams, RunConfig, default_config
from rackcast.data_ingest import SyntheticConfig
from rackcast.errors import ConfigError
from rackcast.pipeline import shipped_config


def test_defaults_round_trip():
    cfg = RunConfig()
    assert RunConfig.from_dict(json.loads(cfg.dumps())) == cfg


def test_shipped_config_round_trips_and_is_stable():
    cfg = shipped_config()
    again = RunConfig.from_dict(json.loads(cfg.dumps()))
    assert again == cfg and again.digest() == cfg.digest()
    assert cfg.data.synthetic is not None and cfg.data.csv is None


def test_defaults_table():
    hp = Hyperparams()
    assert hp.linear.ridge == 1e-8 and hp.knn.k == 5
    assert (hp.gbt.n_trees, hp.gbt.learning_rate, hp.gbt.max_depth, hp.gbt.min_samples_leaf) == (
        100, 0.1, 3, 5)
    assert (hp.lstm.hidden_size, hp.lstm.window, hp.lstm.epochs) == (32, 8, 30)
    assert RunConfig().selector.max_depth == 8 and RunConfig().selector.min_samples_leaf == 5


def test_unknown_key_is_named():
    doc = RunConfig().to_dict()
    doc["hyperparams"]["gbt"]["depth"] = 3
    with pytest.raises(ConfigError, match="hyperparams.gbt.*'depth'"):
        RunConfig.from_dict(doc)


@pytest.mark.parametrize("path,value", [
    (("test_fraction",), 1.0),
    (("validation_fraction",), 0.0),
    (("hyperparams", "knn", "k"), 0),
    (("hyperparams", "gbt", "learning_rate"), 0.0),
    (("selector", "min_samples_leaf"), 0),
    (("features", "lag_orders"), [2, 1]),
    (("data", "synthetic", "n_weeks"), 2),
])
def test_invalid_values(path, value):
    doc = RunConfig().to_dict()
    node = doc
    for key in path[:-1]:
        node = node[key]
    node[path[-1]] = value
    with pytest.raises(ConfigError):
        RunConfig.from_dict(doc)


def test_data_source_needs_exactly_one():
    doc = RunConfig().to_dict()
    doc["data"]["csv"] = "x.csv"
    with pytest.raises(ConfigError):
        RunConfig.from_dict(doc)


def test_load_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        RunConfig.load(bad)
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "missing.json")


def test_digest_tracks_content():
    a = default_config()
    b = default_config(hyperparams=Hyperparams(gbt=GbtParams(n_trees=7)))
    assert a.digest() != b.digest()
    assert a.digest() == default_config().digest()


def test_synthetic_ranges_multiple_of_four():
    with pytest.raises(ConfigError):
        SyntheticConfig(n_ranges=6)
    assert dataclasses.replace(SyntheticConfig(), n_ranges=8).n_ranges == 8
