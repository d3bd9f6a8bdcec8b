"""Small constructors shared by the unit tests."""

import numpy as np

from rackcast.data_ingest import parse_text
from rackcast.features import FeatureMatrix, RowKey

SAMPLE_CSV = """GAN,Year,Month,WeekNo,PromoAvailable,RangeID,ItemID,FitID,ListingInd,Divison,AvgSellPrice,OriginalPrice,MinTemp,MaxTemp,HrsSunShine,HrsRainfall,HrsSnowFall,HrsPercipitation,SalesQty
22403673,2018,1,0,NO,T38112,T3812A,F15,D,Central,36,75,0.9,4,1.116667,0.733333,0.633333,1.366667,37
22403673,2018,1,0,NO,T38112,T3812A,F15,D,North,36.5,75,1.5,4.227273,1.295455,0.431818,0.954545,1.386364,21
22403673,2018,1,0,NO,T38112,T3812A,F15,D,South,36,75,2.078125,5.234375,1.421875,0.765625,1.15625,1.96875,22
22403673,2018,1,0,YES,T38112,T3812A,F15,D,South,58.25,75,2,5.125,0.75,0.125,0.5,0.625,2
22403673,2018,1,1,NO,T38112,T3812A,F15,D,Central,31.42125,75,4.125,6,0.375,0,0,0,10
"""


def sample_rows():
    return parse_text(SAMPLE_CSV, "sample")


def matrix(X, y, groups=None, names=None):
    """FeatureMatrix over raw arrays; every row its own period of one group by default."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, p = X.shape
    names = names or [f"x{j}" for j in range(p)]
    if groups is None:
        groups = [("g",)] * n
    periods, seen = [], {}
    for g in groups:
        periods.append(seen.get(g, 0))
        seen[g] = seen.get(g, 0) + 1
    keys = [RowKey(tuple(g), p_, i) for i, (g, p_) in enumerate(zip(groups, periods))]
    return FeatureMatrix(list(names), X, np.asarray(y, dtype=float), keys)
