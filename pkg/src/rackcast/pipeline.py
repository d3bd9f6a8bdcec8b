"""End-to-end orchestration shared by the CLI and the acceptance tests.

A run directory holds everything one configuration produces::

    config.json                 archived RunConfig
    rejects.csv                 quarantined input rows
    models/<name>.json          the five fitted regressors
    selector.json               fitted selector
    selector_tree.txt           indented text rendering of the selector
    validation_labels.csv       per-row errors and best-model labels
    eval/...                    written by ``evaluate``
    manifest_<command>.json     counts, timings and artifact list

Each command stages its files in a scratch directory and only moves them into
place once everything succeeded, so a failure leaves no partial outputs.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import shutil
import tempfile
import time
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from .baselines import intermittent_forecast, naive_forecast, seasonal_naive_forecast
from .config import RunConfig
from .data_ingest import Dataset, generate_synthetic, parse_csv, parse_text, write_csv, write_rejects
from .errors import ConfigError, EmptyInputError, InvariantError
from .features import FeatureMatrix, build_features, sort_groups, train_test_split
from .metrics import (ACCURACY_DEFINITION, confusion_matrix, error_matrix, evaluate_by_pivot,
                      hit_rate, score)
from .models import RACK, ModelId, fit_rack, load_model, save_model
from .selector import (SelectorModel, SelectorTrainingSet, dispatch, fit_selector, label_best_model,
                       load_selector, save_selector)

log = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "RACKCAST_OUTPUT_DIR"
VOLATILE_MANIFEST_KEYS = ("started_at", "finished_at", "durations")
MODEL_NAMES = tuple(m.label for m in RACK)


def shipped_config() -> RunConfig:
    """The seeded mixed-regime configuration used by the acceptance suite."""
    text = resources.files("rackcast").joinpath("data/acceptance.json").read_text(encoding="utf-8")
    return RunConfig.from_dict(json.loads(text))


def resolve_output_dir(cfg: RunConfig, override: str | None = None) -> Path:
    return Path(override or os.environ.get(OUTPUT_DIR_ENV) or cfg.output_dir)


# ---------------------------------------------------------------------------
# bookkeeping

class Stopwatch:
    def __init__(self):
        self.durations: dict[str, float] = {}
        self.started_at = _now()

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.durations[name] = round(time.perf_counter() - t0, 6)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@contextmanager
def staged_output(final_dir: Path):
    """Yield a scratch directory; on success its files move into ``final_dir``."""
    final_dir = Path(final_dir)
    parent = final_dir.parent if str(final_dir.parent) else Path(".")
    parent.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=f".{final_dir.name}.", dir=parent))
    try:
        yield stage
        for src in sorted(p for p in stage.rglob("*") if p.is_file()):
            dest = final_dir / src.relative_to(stage)
            dest.parent.mkdir(parents=True, exist_ok=True)
            os.replace(src, dest)
    finally:
        shutil.rmtree(stage, ignore_errors=True)


def write_manifest(stage: Path, command: str, cfg: RunConfig, watch: Stopwatch,
                   counts: dict, extra: dict | None = None) -> None:
    artifacts = {str(p.relative_to(stage)): _sha256(p)
                 for p in sorted(stage.rglob("*")) if p.is_file()}
    doc = {
        "command": command,
        "config_sha256": cfg.digest(),
        "started_at": watch.started_at,
        "finished_at": _now(),
        "durations": watch.durations,
        "counts": counts,
        "artifacts": artifacts,
        **(extra or {}),
    }
    (stage / f"manifest_{command}.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                                                   encoding="utf-8")


def stable_manifest(path) -> dict:
    """Manifest contents without the wall-clock fields."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return {k: v for k, v in doc.items() if k not in VOLATILE_MANIFEST_KEYS}


# ---------------------------------------------------------------------------
# data preparation

def load_dataset(cfg: RunConfig) -> Dataset:
    if cfg.data.csv is not None:
        return parse_csv(cfg.data.csv)
    return generate_synthetic(cfg.data.synthetic)


@dataclass
class Prepared:
    dataset: Dataset
    matrix: FeatureMatrix
    train: FeatureMatrix
    test: FeatureMatrix
    fit: FeatureMatrix
    validation: FeatureMatrix

    def counts(self) -> dict:
        ds = self.dataset
        out = {
            "ingested": ds.rows_in,
            "valid": len(ds.records),
            "quarantined": len(ds.rejects),
            "featured": len(self.matrix),
            "dropped_for_lags": self.matrix.info["dropped_for_lags"],
            "fit_rows": len(self.fit),
            "validation_rows": len(self.validation),
            "test_rows": len(self.test),
        }
        check_conservation(out)
        return out


def check_conservation(counts: dict) -> None:
    if counts["ingested"] != counts["valid"] + counts["quarantined"]:
        raise InvariantError(f"ingested {counts['ingested']} != valid {counts['valid']} "
                             f"+ quarantined {counts['quarantined']}")
    if counts["featured"] != counts["valid"] - counts["dropped_for_lags"]:
        raise InvariantError(f"featured {counts['featured']} != valid {counts['valid']} "
                             f"- dropped {counts['dropped_for_lags']}")
    if counts["fit_rows"] + counts["validation_rows"] + counts["test_rows"] != counts["featured"]:
        raise InvariantError("fit + validation + test rows do not add up to the featured rows")


def prepare(cfg: RunConfig, dataset: Dataset | None = None) -> Prepared:
    cfg.validate()
    dataset = load_dataset(cfg) if dataset is None else dataset
    matrix = build_features(dataset, cfg.features)
    train, test = train_test_split(matrix, cfg.test_fraction)
    fit, validation = train_test_split(train, cfg.validation_fraction)
    return Prepared(dataset, matrix, train, test, fit, validation)


# ---------------------------------------------------------------------------
# train

def clamped_predictions(models, rows: FeatureMatrix, history: FeatureMatrix | None) -> np.ndarray:
    """(n, 5) member forecasts clipped at zero, the form the rack reports."""
    if len(rows) == 0:
        return np.zeros((0, len(RACK)))
    return np.clip(np.column_stack([models[m].predict(rows, history) for m in RACK]), 0.0, None)


@dataclass
class TrainedRack:
    models: dict[ModelId, object]
    selector: SelectorModel
    validation_errors: np.ndarray
    validation_labels: np.ndarray


def train_rack(cfg: RunConfig, prep: Prepared, watch: Stopwatch | None = None) -> TrainedRack:
    watch = watch or Stopwatch()
    with watch.stage("fit_models"):
        models = fit_rack(prep.fit, cfg.hyperparams, seed=cfg.seed)
    with watch.stage("error_matrix"):
        preds = clamped_predictions(models, prep.validation, prep.matrix)
        errors = error_matrix(prep.validation.target, list(preds.T), prep.validation.row_keys)
        labels = label_best_model(errors)
    with watch.stage("fit_selector"):
        selector = fit_selector(SelectorTrainingSet(prep.validation, labels), cfg.selector)
    return TrainedRack(models, selector, errors.values, labels)


def _write_labels(path: Path, rows: FeatureMatrix, errors: np.ndarray, labels: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["group", "period", *[f"error_{n}" for n in MODEL_NAMES], "label", "label_code"])
        for key, err, lab in zip(rows.row_keys, errors, labels):
            writer.writerow(["|".join(map(str, key.group)), key.period, *map(repr, err.tolist()),
                             ModelId(int(lab)).label, int(lab)])


def cmd_train(cfg: RunConfig, output_dir: Path) -> Path:
    watch = Stopwatch()
    with staged_output(output_dir) as stage:
        with watch.stage("ingest_features_split"):
            prep = prepare(cfg)
        counts = prep.counts()
        rack = train_rack(cfg, prep, watch)
        with watch.stage("persist"):
            (stage / "config.json").write_text(cfg.dumps(), encoding="utf-8")
            write_rejects(prep.dataset, stage / "rejects.csv")
            (stage / "models").mkdir()
            for mid, model in rack.models.items():
                save_model(model, stage / "models" / f"{mid.label}.json")
            save_selector(rack.selector, stage / "selector.json")
            (stage / "selector_tree.txt").write_text(rack.selector.render(), encoding="utf-8")
            _write_labels(stage / "validation_labels.csv", prep.validation,
                          rack.validation_errors, rack.validation_labels)
        write_manifest(stage, "train", cfg, watch, counts,
                       {"label_histogram": _histogram(rack.validation_labels)})
    log.info("trained rack into %s", output_dir)
    return Path(output_dir)


def _histogram(codes) -> dict[str, int]:
    counts = np.bincount(np.asarray(codes, dtype=int), minlength=len(RACK))
    return {m.label: int(c) for m, c in zip(RACK, counts)}


# ---------------------------------------------------------------------------
# artifacts

def load_artifacts(cfg: RunConfig, run_dir: Path):
    run_dir = Path(run_dir)
    archived = run_dir / "config.json"
    if not archived.exists():
        raise ConfigError(f"{run_dir} holds no trained rack (missing config.json); run 'train' first")
    if RunConfig.load(archived).digest() != cfg.digest():
        raise ConfigError(f"the rack in {run_dir} was trained with a different configuration")
    models = {m: load_model(run_dir / "models" / f"{m.label}.json") for m in RACK}
    selector = load_selector(run_dir / "selector.json")
    return models, selector


# ---------------------------------------------------------------------------
# evaluate

def baseline_forecasts(dataset: Dataset, cfg: RunConfig, rows: FeatureMatrix) -> dict[str, np.ndarray]:
    """One-step-ahead baselines per series, read off at ``rows``.

    Seasonal naive is included only when every row has a value one season back.
    """
    ip = cfg.baselines.intermittent
    season = cfg.baselines.season_length
    per_record: dict[str, dict[int, float]] = {"intermittent": {}, "naive": {}, "seasonal_naive": {}}
    seasonal_ok = True
    for idx in sort_groups(dataset, cfg.features.group_key).values():
        y = [dataset.records[i].sales_qty for i in idx]
        outs = {
            "intermittent": intermittent_forecast(y, ip.alpha0, alpha_min=ip.alpha_min,
                                                  alpha_max=ip.alpha_max,
                                                  error_smoothing=ip.error_smoothing,
                                                  adaptive=ip.adaptive),
            "naive": naive_forecast(y),
        }
        if seasonal_ok and season < len(y):
            outs["seasonal_naive"] = seasonal_naive_forecast(y, season)
        else:
            seasonal_ok = False
        for name, f in outs.items():
            per_record[name].update(zip(idx, f.tolist()))
    result = {}
    for name, table in per_record.items():
        if name == "seasonal_naive" and not seasonal_ok:
            continue
        values = np.array([table[k.record] for k in rows.row_keys], dtype=float)
        if np.isnan(values).any():
            if name == "seasonal_naive":
                continue
            raise InvariantError(f"{name} baseline undefined on an evaluation row")
        result[name] = values
    return result


@dataclass
class Evaluation:
    report: dict
    per_model: np.ndarray       # (n_test, 5) clamped predictions
    rack: np.ndarray
    chosen: np.ndarray
    true_best: np.ndarray
    baselines: dict[str, np.ndarray]
    validation_chosen: np.ndarray
    validation_labels: np.ndarray


def evaluate_rack(cfg: RunConfig, prep: Prepared, models, selector: SelectorModel) -> Evaluation:
    test = prep.test
    if len(test) == 0:
        raise InvariantError("the test split is empty")
    per_model = clamped_predictions(models, test, prep.matrix)
    chosen = selector.predict(test)
    rack = dispatch(chosen, per_model)
    errors = error_matrix(test.target, list(per_model.T), test.row_keys)
    true_best = label_best_model(errors)
    oracle = dispatch(true_best, per_model)
    baselines = baseline_forecasts(prep.dataset, cfg, test)

    val_preds = clamped_predictions(models, prep.validation, prep.matrix)
    val_labels = label_best_model(error_matrix(prep.validation.target, list(val_preds.T)))
    val_chosen = selector.predict(prep.validation)

    y = test.target
    model_scores = {m.label: score(y, per_model[:, j]) for j, m in enumerate(RACK)}
    rack_score = score(y, rack)
    baseline_scores = {name: score(y, f) for name, f in baselines.items()}
    best_name = max(model_scores, key=lambda n: model_scores[n]["accuracy"] or -np.inf)
    cm_test = confusion_matrix(true_best, chosen)
    cm_val = confusion_matrix(val_labels, val_chosen)

    def gap(a, b):
        return None if a is None or b is None else a - b

    report = {
        "accuracy_definition": ACCURACY_DEFINITION,
        "rows": {"test": len(test), "validation": len(prep.validation),
                 "zero_actual_test": int(np.sum(y == 0))},
        "models": model_scores,
        "rack": rack_score,
        "oracle": score(y, oracle),
        "baselines": baseline_scores,
        "best_single_model": best_name,
        "uplift": {
            "rack_minus_best_single": gap(rack_score["accuracy"], model_scores[best_name]["accuracy"]),
            "rack_minus_intermittent": gap(rack_score["accuracy"],
                                           baseline_scores["intermittent"]["accuracy"]),
        },
        "selection": {
            "test_histogram": _histogram(chosen),
            "test_true_best_histogram": _histogram(true_best),
            "test_hit_rate": hit_rate(cm_test),
            "validation_hit_rate": hit_rate(cm_val),
        },
    }
    return Evaluation(report, per_model, rack, chosen, true_best, baselines, val_chosen, val_labels)


def _write_metrics_csv(path: Path, report: dict) -> None:
    fields = ["n", "rmse", "r2", "mean_ape", "wmape", "accuracy"]
    rows = [(name, s) for name, s in report["models"].items()]
    rows += [("rack", report["rack"]), ("oracle", report["oracle"])]
    rows += [(f"baseline_{name}", s) for name, s in report["baselines"].items()]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["forecaster", *fields])
        for name, s in rows:
            writer.writerow([name, *("" if s[f] is None else repr(s[f]) for f in fields)])


def _write_confusion(path: Path, matrix: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["true_best\\selected", *MODEL_NAMES])
        for name, row in zip(MODEL_NAMES, matrix):
            writer.writerow([name, *row.tolist()])


def _write_pivots(path: Path, cells: list[dict]) -> None:
    fields = ["n", "rmse", "r2", "mean_ape", "wmape", "accuracy"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["pivot", "cell", "rows", "volume", "forecaster", *fields])
        for cell in cells:
            for name, s in cell["models"].items():
                writer.writerow(["|".join(cell["pivot"]) or "all", "|".join(map(str, cell["cell"])) or "all",
                                 cell["n"], repr(cell["volume"]), name,
                                 *("" if s[f] is None else repr(s[f]) for f in fields)])


def _write_series(path: Path, dataset: Dataset, test: FeatureMatrix, columns: dict[str, np.ndarray]) -> None:
    """Per-period totals across all series: the actual-vs-predicted plot data."""
    periods: dict[tuple, dict[str, float]] = {}
    for n, key in enumerate(test.row_keys):
        rec = dataset.records[key.record]
        slot = periods.setdefault((rec.year, rec.month, rec.week_no), {c: 0.0 for c in columns})
        for name, values in columns.items():
            slot[name] += float(values[n])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["year", "month", "week_no", *columns])
        for period in sorted(periods):
            writer.writerow([*period, *(repr(periods[period][c]) for c in columns)])


def _write_predictions(path: Path, dataset: Dataset, rows: FeatureMatrix, rack: np.ndarray,
                       chosen: np.ndarray, per_model: np.ndarray, actual: np.ndarray | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        head = ["gan", "item_id", "division", "year", "month", "week_no"]
        if actual is not None:
            head.append("sales_qty")
        writer.writerow([*head, "rack_prediction", "chosen_model", "chosen_code",
                         *[f"pred_{n}" for n in MODEL_NAMES]])
        for n, key in enumerate(rows.row_keys):
            rec = dataset.records[key.record]
            line = [rec.gan, rec.item_id, rec.division, rec.year, rec.month, rec.week_no]
            if actual is not None:
                line.append(repr(float(actual[n])))
            writer.writerow([*line, repr(float(rack[n])), ModelId(int(chosen[n])).label, int(chosen[n]),
                             *map(repr, per_model[n].tolist())])


def cmd_evaluate(cfg: RunConfig, output_dir: Path) -> dict:
    watch = Stopwatch()
    output_dir = Path(output_dir)
    with watch.stage("load_artifacts"):
        models, selector = load_artifacts(cfg, output_dir)
    with watch.stage("ingest_features_split"):
        prep = prepare(cfg)
    counts = prep.counts()
    with staged_output(output_dir) as stage:
        with watch.stage("score"):
            ev = evaluate_rack(cfg, prep, models, selector)
        with watch.stage("pivots"):
            test_records = [prep.dataset.records[k.record] for k in prep.test.row_keys]
            forecasters = {m.label: ev.per_model[:, j] for j, m in enumerate(RACK)}
            forecasters["rack"] = ev.rack
            forecasters.update({f"baseline_{n}": f for n, f in ev.baselines.items()})
            cells = []
            for pivot in cfg.pivots:
                cells += evaluate_by_pivot(test_records, prep.test.target, forecasters, pivot)
        with watch.stage("persist"):
            out = stage / "eval"
            out.mkdir()
            (out / "report.json").write_text(json.dumps(ev.report, indent=2, sort_keys=True) + "\n",
                                             encoding="utf-8")
            _write_metrics_csv(out / "metrics.csv", ev.report)
            _write_confusion(out / "confusion_validation.csv", confusion_matrix(ev.validation_labels,
                                                                               ev.validation_chosen))
            _write_confusion(out / "confusion_test.csv", confusion_matrix(ev.true_best, ev.chosen))
            _write_pivots(out / "pivots.csv", cells)
            _write_series(out / "actual_vs_predicted.csv", prep.dataset, prep.test,
                          {"actual": prep.test.target, **forecasters})
            _write_predictions(out / "test_predictions.csv", prep.dataset, prep.test, ev.rack,
                               ev.chosen, ev.per_model, prep.test.target)
        write_manifest(stage, "evaluate", cfg, watch, counts)
    return ev.report


# ---------------------------------------------------------------------------
# generate / forecast

def cmd_generate(cfg: RunConfig, out_path: Path) -> Path:
    if cfg.data.synthetic is None:
        raise ConfigError("generate needs a synthetic data source in the config")
    out_path = Path(out_path)
    watch = Stopwatch()
    with staged_output(out_path.parent) as stage:
        with watch.stage("generate"):
            dataset = generate_synthetic(cfg.data.synthetic)
            write_csv(dataset, stage / out_path.name)
        write_manifest(stage, "generate", cfg, watch, {"rows": len(dataset)})
    return out_path


FORECAST_HEADER = ["gan", "item_id", "division", "year", "month", "week_no", "rack_prediction",
                   "chosen_model", "chosen_code", *[f"pred_{n}" for n in MODEL_NAMES]]


def forecast_rows(cfg: RunConfig, models, selector: SelectorModel, history: Dataset,
                  new: Dataset) -> tuple[Dataset, FeatureMatrix, np.ndarray, np.ndarray, np.ndarray]:
    """Featurize ``new`` behind ``history`` (for lags) and run the rack on it."""
    combined = Dataset(history.records + new.records, provenance="history+input")
    reference = build_features(history, cfg.features)
    matrix = build_features(combined, cfg.features, categories=reference.categories,
                            week_convention=reference.info["week_convention"])
    first_new = len(history.records)
    keep = [i for i, k in enumerate(matrix.row_keys) if k.record >= first_new]
    dropped = len(new.records) - len(keep)
    if dropped:
        log.warning("%d input rows lack enough history for lags and were skipped", dropped)
    rows = matrix.take(keep)
    per_model = clamped_predictions(models, rows, matrix)
    chosen = selector.predict(rows)
    rack = dispatch(chosen, per_model) if len(rows) else np.zeros(0)
    return combined, rows, rack, chosen, per_model


def cmd_forecast(cfg: RunConfig, output_dir: Path, input_path: Path, out_path: Path) -> Path:
    models, selector = load_artifacts(cfg, output_dir)
    input_path, out_path = Path(input_path), Path(out_path)
    text = input_path.read_text(encoding="utf-8") if input_path.exists() else None
    if text is None:
        raise EmptyInputError(f"input file {input_path} does not exist")
    with staged_output(out_path.parent) as stage:
        target = stage / out_path.name
        try:
            new = parse_text(text, provenance=str(input_path))
        except EmptyInputError:
            new = Dataset((), provenance=str(input_path))
        if new.rejects:
            write_rejects(new, stage / f"{out_path.stem}.rejects.csv")
        if not new.records:
            with open(target, "w", newline="", encoding="utf-8") as fh:
                csv.writer(fh, lineterminator="\n").writerow(FORECAST_HEADER)
            return out_path
        combined, rows, rack, chosen, per_model = forecast_rows(cfg, models, selector,
                                                                load_dataset(cfg), new)
        _write_predictions(target, combined, rows, rack, chosen, per_model)
    return out_path


__all__ = [
    "OUTPUT_DIR_ENV", "Prepared", "TrainedRack", "Evaluation", "shipped_config", "resolve_output_dir",
    "prepare", "train_rack", "evaluate_rack", "baseline_forecasts", "cmd_train", "cmd_evaluate",
    "cmd_generate", "cmd_forecast", "forecast_rows", "stable_manifest", "check_conservation",
    "load_artifacts",
]
