"""Weekly retail sales records: CSV parsing with quarantine, writing, and a seeded
synthetic generator.

The column layout follows the retailer extract (GAN ... SalesQty). Two header
misspellings found in that extract, ``Divison`` and ``HrsPercipitation``, are
accepted on read; the corrected spellings are always written.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError, EmptyInputError, SchemaError


@dataclass(frozen=True)
class SalesRecord:
    gan: int
    year: int
    month: int
    week_no: int
    promo_available: bool
    range_id: str
    item_id: str
    fit_id: str
    listing_ind: str
    division: str
    avg_sell_price: float
    original_price: float
    min_temp: float
    max_temp: float
    hrs_sunshine: float
    hrs_rainfall: float
    hrs_snowfall: float
    hrs_precipitation: float
    sales_qty: int

    def validate(self) -> None:
        """Raise ``DataError`` if the record breaks a field invariant."""
        if not 1 <= self.month <= 12:
            raise DataError(f"month {self.month} outside 1..12")
        if self.week_no < 0:
            raise DataError(f"negative week_no {self.week_no}")
        if self.min_temp > self.max_temp:
            raise DataError(f"min_temp {self.min_temp} > max_temp {self.max_temp}")
        for name in ("avg_sell_price", "original_price", "hrs_sunshine",
                     "hrs_rainfall", "hrs_snowfall", "hrs_precipitation"):
            value = getattr(self, name)
            if value < 0:
                raise DataError(f"{name} must be >= 0, got {value}")
        if self.sales_qty < 0:
            raise DataError(f"negative sales_qty {self.sales_qty}")


FIELD_NAMES = tuple(f.name for f in fields(SalesRecord))

# Canonical header spelling, in column order.
HEADER = (
    "GAN", "Year", "Month", "WeekNo", "PromoAvailable", "RangeID", "ItemID",
    "FitID", "ListingInd", "Division", "AvgSellPrice", "OriginalPrice",
    "MinTemp", "MaxTemp", "HrsSunShine", "HrsRainfall", "HrsSnowFall",
    "HrsPrecipitation", "SalesQty",
)
COLUMN_TO_FIELD = dict(zip(HEADER, FIELD_NAMES))

_ALIASES = {name.lower(): name for name in HEADER}
_ALIASES["divison"] = "Division"
_ALIASES["hrspercipitation"] = "HrsPrecipitation"

_INT_FIELDS = {"gan", "year", "month", "week_no", "sales_qty"}
_STR_FIELDS = {"range_id", "item_id", "fit_id", "listing_ind", "division"}
_TRUE = {"yes", "true", "1", "y"}
_FALSE = {"no", "false", "0", "n"}


@dataclass(frozen=True)
class Reject:
    line: int
    raw: str
    reason: str


@dataclass(frozen=True)
class Dataset:
    records: tuple[SalesRecord, ...]
    provenance: str = ""
    rejects: tuple[Reject, ...] = ()
    rows_in: int = field(default=-1)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "rejects", tuple(self.rejects))
        if self.rows_in < 0:
            object.__setattr__(self, "rows_in", len(self.records) + len(self.rejects))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def _parse_int(text: str) -> int:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        value = float(text)
        if not value.is_integer():
            raise ValueError(f"expected an integer, got {text!r}")
        return int(value)


def _parse_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {text!r}")
    return value


def parse_bool(text: str) -> bool:
    key = text.strip().lower()
    if key in _TRUE:
        return True
    if key in _FALSE:
        return False
    raise ValueError(f"unrecognised boolean {text!r}")


def _parse_row(cells: Sequence[str], positions: dict[str, int]) -> SalesRecord:
    values = {}
    for column, name in COLUMN_TO_FIELD.items():
        cell = cells[positions[column]].strip()
        if name in _INT_FIELDS:
            values[name] = _parse_int(cell)
        elif name in _STR_FIELDS:
            if not cell:
                raise ValueError(f"empty {column}")
            values[name] = cell
        elif name == "promo_available":
            values[name] = parse_bool(cell)
        else:
            values[name] = _parse_float(cell)
    record = SalesRecord(**values)
    record.validate()
    return record


def _header_positions(header: Sequence[str]) -> dict[str, int]:
    positions = {}
    for i, name in enumerate(header):
        canonical = _ALIASES.get(name.strip().lower())
        if canonical is not None and canonical not in positions:
            positions[canonical] = i
    missing = [name for name in HEADER if name not in positions]
    if missing:
        raise SchemaError(f"missing required column {missing[0]}"
                          + (f" (and {len(missing) - 1} more)" if len(missing) > 1 else ""))
    return positions


def parse_text(text: str, provenance: str = "") -> Dataset:
    lines = text.splitlines()
    numbered = [(i + 1, line) for i, line in enumerate(lines) if line.strip()]
    if not numbered:
        raise EmptyInputError(f"empty input {provenance or '<text>'}")
    _, header_line = numbered[0]
    header = next(csv.reader([header_line]))
    positions = _header_positions(header)
    width = len(header)

    records, rejects = [], []
    for lineno, line in numbered[1:]:
        try:
            cells = next(csv.reader([line]))
            if len(cells) != width:
                raise ValueError(f"expected {width} cells, found {len(cells)}")
            records.append(_parse_row(cells, positions))
        except (ValueError, DataError) as exc:
            rejects.append(Reject(lineno, line, str(exc)))
    return Dataset(records, provenance, rejects, rows_in=len(numbered) - 1)


def parse_csv(path) -> Dataset:
    """Read a sales CSV.

    Bad rows are quarantined into ``Dataset.rejects`` rather than dropped, so
    ``rows_in == len(records) + len(rejects)`` always holds.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    return parse_text(text, provenance=str(path))


def _format(value) -> str:
    if isinstance(value, bool):
        return "YES" if value else "NO"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_csv_text(records: Sequence[SalesRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for r in records:
        writer.writerow([_format(getattr(r, name)) for name in FIELD_NAMES])
    return buf.getvalue()


def write_csv(dataset: Dataset | Sequence[SalesRecord], path) -> None:
    records = dataset.records if isinstance(dataset, Dataset) else dataset
    path = Path(path)
    try:
        path.write_text(to_csv_text(records), encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


def write_rejects(dataset: Dataset, path) -> None:
    path = Path(path)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["line", "raw", "reason"])
    for rej in dataset.rejects:
        writer.writerow([rej.line, rej.raw, rej.reason])
    try:
        path.write_text(buf.getvalue(), encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# synthetic data

@dataclass(frozen=True)
class SyntheticConfig:
    """Parameters of the synthetic knitwear generator.

    ``regime_mix`` is the fraction of items whose demand is linear in price;
    the rest respond to cold weather through a sharp logistic threshold.
    Intermittent items are zeroed each week with ``zero_probability``.
    ``price_cut`` is the largest extra weekly discount (fraction of the
    original price) drawn on top of the markdown schedule.
    """

    seed: int = 0
    n_items: int = 20
    n_weeks: int = 52
    divisions: tuple[str, ...] = ("Central", "North", "South")
    intermittent_fraction: float = 0.2
    regime_mix: float = 0.5
    zero_probability: float = 0.85
    start_year: int = 2018
    n_ranges: int = 4
    noise: float = 0.02
    max_markdown: float = 0.9
    clearance_start: float = 0.5
    price_cut: float = 0.09

    def __post_init__(self):
        object.__setattr__(self, "divisions", tuple(self.divisions))
        for name in ("intermittent_fraction", "regime_mix", "zero_probability"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")
        if self.n_items < 1:
            raise ConfigError("n_items must be >= 1")
        if self.n_weeks < 3:
            raise ConfigError("n_weeks must be >= 3 so that two lags exist")
        if not self.divisions:
            raise ConfigError("at least one division is required")
        if self.n_ranges < 4 or self.n_ranges % 4:
            raise ConfigError("n_ranges must be a positive multiple of 4")
        if self.noise < 0:
            raise ConfigError("noise must be >= 0")
        if not 0.1 <= self.max_markdown < 1.0:
            raise ConfigError("max_markdown must lie in [0.1, 1)")
        if not 0.0 <= self.price_cut < 1.0 - self.max_markdown:
            raise ConfigError("price_cut must lie in [0, 1 - max_markdown)")
        if not 0.0 <= self.clearance_start < 1.0:
            raise ConfigError("clearance_start must lie in [0, 1)")


BASE_DEMAND = (5.0, 50.0)
PROMO_UPLIFT = 1.5
SEASON_AMPLITUDE = 0.4
PROMO_RATE = 0.3
PRICE_SLOPE = 0.75         # extra units per currency unit of markdown (linear items)
TEMP_SLOPE = 0.5           # units lost per degree (linear items)
COLD_THRESHOLD = 5.0       # degrees; centre of the weather response
COLD_WIDTH = 0.5
MEAN_BASE = sum(BASE_DEMAND) / 2


@dataclass(frozen=True)
class ItemProfile:
    index: int
    item_id: str
    range_id: str
    gan: int
    fit_id: str
    linear: bool
    intermittent: bool
    base: float
    original_price: float


def item_profiles(config: SyntheticConfig) -> list[ItemProfile]:
    """Per-item latent attributes, derived from the seed only.

    Base demand falls with the item's original price (40..100 maps onto
    50..5 units/week) plus a small item-specific offset.
    """
    rng = np.random.default_rng([config.seed, 1])
    n = config.n_items
    n_linear = int(round(config.regime_mix * n))
    n_intermittent = int(round(config.intermittent_fraction * n))
    linear = np.zeros(n, bool)
    linear[rng.permutation(n)[:n_linear]] = True
    intermittent = np.zeros(n, bool)
    intermittent[rng.permutation(n)[:n_intermittent]] = True
    # ranges are homogeneous product lines: one block per (regime, intermittent) class
    per_class = config.n_ranges // 4
    profiles = []
    counters = [0, 0, 0, 0]
    lo, hi = BASE_DEMAND
    for i in range(n):
        cls = (0 if linear[i] else 1) + 2 * int(intermittent[i])
        r = cls + 4 * (counters[cls] % per_class)
        counters[cls] += 1
        original = float(np.round(rng.uniform(40.0, 100.0) * 2) / 2)
        base = hi - (hi - lo) * (original - 40.0) / 60.0 + rng.normal(0.0, 2.0)
        profiles.append(ItemProfile(
            index=i,
            item_id=f"T38{i:03d}A",
            range_id=f"T38R{r:02d}",
            gan=22403673 + i,
            fit_id=f"F{int(rng.integers(10, 20))}",
            linear=bool(linear[i]),
            intermittent=bool(intermittent[i]),
            base=float(np.clip(base, lo, hi)),
            original_price=original,
        ))
    return profiles


def _calendar(config: SyntheticConfig, t: int) -> tuple[int, int, int]:
    woy = t % 52 + 1
    year = config.start_year + t // 52
    month = min(12, (woy - 1) * 12 // 52 + 1)
    return year, month, woy


def generate_synthetic(config: SyntheticConfig) -> Dataset:
    """Seeded knitwear sales in record order (item, division, week).

    Weather is shared by all items in a division-week. Prices hold a 10%
    markdown until ``clearance_start`` (fraction of the horizon), then fall
    linearly to ``max_markdown``, so late weeks see prices below anything
    earlier. Each item-week also gets a random extra cut of up to
    ``price_cut``. Demand per regime:

    * linear items, additive: ``base + MEAN_BASE * (season - 1 + 0.5 * promo)
      + PRICE_SLOPE * markdown - TEMP_SLOPE * temperature``
    * weather items: ``base * season * uplift * cold(temperature)``, with
      ``cold`` a steep logistic step around ``COLD_THRESHOLD``

    followed by multiplicative Gaussian noise and rounding. Intermittent items
    are zeroed each week with probability ``zero_probability``.
    """
    rng = np.random.default_rng([config.seed, 2])
    profiles = item_profiles(config)
    n_div, n_weeks = len(config.divisions), config.n_weeks
    weeks = np.arange(n_weeks)
    woy = weeks % 52 + 1
    phase = 2 * np.pi * (woy - 1) / 52

    div_offset = rng.uniform(-2.0, 2.0, n_div)
    mean_temp = 9.0 - 7.0 * np.cos(phase)[None, :] + div_offset[:, None] \
        + rng.normal(0.0, 2.5, (n_div, n_weeks))
    spread = rng.uniform(1.0, 4.0, (n_div, n_weeks))
    min_temp = np.round(mean_temp - spread, 4)
    max_temp = np.round(mean_temp + spread, 4)
    sunshine = np.round(np.clip(0.8 + 0.06 * mean_temp + rng.normal(0, 0.3, mean_temp.shape), 0, None), 4)
    rainfall = np.round(rng.uniform(0.0, 1.5, mean_temp.shape), 4)
    snowfall = np.round(np.clip(0.25 * (4.0 - mean_temp) + rng.normal(0, 0.2, mean_temp.shape), 0, None), 4)
    precipitation = np.round(np.clip(rainfall + snowfall + rng.normal(0, 0.05, mean_temp.shape), 0, None), 4)
    cold = 0.4 + 1.6 / (1.0 + np.exp((mean_temp - COLD_THRESHOLD) / COLD_WIDTH))

    season = 1.0 + SEASON_AMPLITUDE * np.cos(phase)
    progress = weeks / max(n_weeks - 1, 1)
    ramp = np.clip((progress - config.clearance_start) / (1.0 - config.clearance_start), 0.0, 1.0)
    markdown = 0.1 + (config.max_markdown - 0.1) * ramp

    records = []
    for item in profiles:
        listing = "D" if item.index % 3 else "N"
        cut = rng.uniform(0.0, config.price_cut, n_weeks) if config.price_cut > 0 else 0.0
        price = np.round(item.original_price * (1.0 - markdown - cut), 2)
        for j, division in enumerate(config.divisions):
            promo = rng.random(n_weeks) < PROMO_RATE
            if item.linear:
                mu = item.base + MEAN_BASE * (season - 1.0 + (PROMO_UPLIFT - 1.0) * promo) \
                    + PRICE_SLOPE * (item.original_price - price) - TEMP_SLOPE * mean_temp[j]
            else:
                mu = item.base * season * np.where(promo, PROMO_UPLIFT, 1.0) * cold[j]
            mu = np.clip(mu, 0.0, None)
            qty = np.round(mu * (1.0 + config.noise * rng.standard_normal(n_weeks)))
            qty = np.clip(qty, 0, None).astype(int)
            if item.intermittent:
                qty[rng.random(n_weeks) < config.zero_probability] = 0
            for t in range(n_weeks):
                year, month, week = _calendar(config, t)
                records.append(SalesRecord(
                    gan=item.gan, year=year, month=month, week_no=week,
                    promo_available=bool(promo[t]), range_id=item.range_id,
                    item_id=item.item_id, fit_id=item.fit_id, listing_ind=listing,
                    division=division, avg_sell_price=float(price[t]),
                    original_price=item.original_price,
                    min_temp=float(min_temp[j, t]), max_temp=float(max_temp[j, t]),
                    hrs_sunshine=float(sunshine[j, t]), hrs_rainfall=float(rainfall[j, t]),
                    hrs_snowfall=float(snowfall[j, t]),
                    hrs_precipitation=float(precipitation[j, t]),
                    sales_qty=int(qty[t]),
                ))
    return Dataset(records, provenance=f"synthetic:seed={config.seed}")
