"""Reference forecasters used to put the rack's accuracy in context.

``intermittent_forecast`` is a flat-line smoother for slow, lumpy demand: the
level moves only in periods with positive demand, and its smoothing constant
adapts to the percentage errors it makes (ratio of smoothed signed error to
smoothed absolute error, mapped onto ``[alpha_min, alpha_max]``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import IntermittentParams
from .errors import ConfigError, DataError


@dataclass
class IntermittentState:
    level: float
    alpha: float
    alpha_min: float
    alpha_max: float
    last_error_pct: float = 0.0
    smoothed_error: float = 0.0
    smoothed_abs_error: float = 0.0

    def update(self, demand: float, error_smoothing: float, adaptive: bool = True) -> None:
        if demand <= 0:
            return
        err = (demand - self.level) / demand
        self.level += self.alpha * (demand - self.level)
        self.last_error_pct = err
        if not adaptive:
            return
        b = error_smoothing
        self.smoothed_error = b * err + (1 - b) * self.smoothed_error
        self.smoothed_abs_error = b * abs(err) + (1 - b) * self.smoothed_abs_error
        if self.smoothed_abs_error > 0:
            tracking = abs(self.smoothed_error) / self.smoothed_abs_error
            self.alpha = self.alpha_min + (self.alpha_max - self.alpha_min) * min(tracking, 1.0)


def _check_series(series) -> np.ndarray:
    y = np.asarray(series, dtype=float)
    if y.ndim != 1 or len(y) == 0:
        raise DataError("series must be a non-empty 1-D sequence")
    if np.any(y < 0) or not np.all(np.isfinite(y)):
        raise DataError("series values must be finite and >= 0")
    return y


def intermittent_trace(series, alpha0: float = IntermittentParams.alpha0,
                       alpha_min: float = IntermittentParams.alpha_min,
                       alpha_max: float = IntermittentParams.alpha_max,
                       error_smoothing: float = IntermittentParams.error_smoothing,
                       adaptive: bool = IntermittentParams.adaptive):
    """Forecasts plus the smoothing constant in force at each period.

    The forecast for period t is the level before demand t is seen. The level
    starts at the first positive demand (0 for an all-zero series). With
    ``adaptive=False`` the constant stays at ``alpha0``.
    """
    if not 0.0 < alpha0 < 1.0:
        raise ConfigError(f"alpha0 must lie in (0, 1), got {alpha0}")
    if adaptive and not 0.0 < alpha_min <= alpha_max < 1.0:
        raise ConfigError("need 0 < alpha_min <= alpha_max < 1")
    y = _check_series(series)
    if not adaptive:
        alpha_min = alpha_max = alpha0
    positive = np.flatnonzero(y > 0)
    state = IntermittentState(level=float(y[positive[0]]) if len(positive) else 0.0,
                              alpha=float(np.clip(alpha0, alpha_min, alpha_max)),
                              alpha_min=alpha_min, alpha_max=alpha_max)
    forecasts = np.empty(len(y))
    alphas = np.empty(len(y))
    for t, demand in enumerate(y):
        forecasts[t] = state.level
        alphas[t] = state.alpha
        state.update(demand, error_smoothing, adaptive)
    return forecasts, alphas


def intermittent_forecast(series, alpha0: float = IntermittentParams.alpha0, **kwargs) -> np.ndarray:
    return intermittent_trace(series, alpha0, **kwargs)[0]


def naive_forecast(series) -> np.ndarray:
    """forecast_t = demand_{t-1}; the first entry is NaN."""
    y = _check_series(series)
    out = np.full(len(y), np.nan)
    out[1:] = y[:-1]
    return out


def seasonal_naive_forecast(series, season_length: int) -> np.ndarray:
    y = _check_series(series)
    if season_length < 1 or season_length >= len(y):
        raise ConfigError(f"season_length {season_length} must lie in [1, {len(y) - 1}]")
    out = np.full(len(y), np.nan)
    out[season_length:] = y[:-season_length]
    return out
