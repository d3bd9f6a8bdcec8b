"""The flat-line intermittent smoother next to the naive baselines."""

import numpy as np

from rackcast.baselines import intermittent_trace, naive_forecast, seasonal_naive_forecast

demand = np.array([0, 0, 12, 0, 0, 0, 9, 0, 15, 0, 0, 30, 0, 0, 28, 0, 31, 0, 0, 0], dtype=float)
flat, alpha = intermittent_trace(demand)
print(" t  demand  flat-line  alpha   naive  seasonal(4)")
seasonal = seasonal_naive_forecast(demand, 4)
for t, (d, f, a, n, s) in enumerate(zip(demand, flat, alpha, naive_forecast(demand), seasonal)):
    print(f"{t:2d} {d:7.0f} {f:10.2f} {a:6.3f} {n:7.1f} {s:10.1f}")
print("the level only moves after weeks with demand; alpha rises while the jump to ~30 persists")
