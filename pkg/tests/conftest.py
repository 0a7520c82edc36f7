import numpy as np
import pandas as pd
import pytest

from volnet.timeseries import DatedSeries


def make_series(values, start="2020-01-01"):
    values = np.asarray(values, dtype=np.float64)
    dates = pd.bdate_range(start, periods=len(values)).values
    return DatedSeries(dates, values)


@pytest.fixture
def series_factory():
    return make_series
