"""
app/numerics/tails.py

Extrapolated tails for sums whose terms decay faster than any power.

Terms are flagged "significant" when they rise above a roundoff floor; the log
magnitude of the last significant ones is fitted by a line and the fitted
geometric decay is summed beyond the truncation index with caller weights.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

TAIL_WINDOW = 10       # significant terms used in the fit
TAIL_GAP = 8           # sub-floor terms before the end that count as "settled"
TAIL_HORIZON = 4000
MIN_DECAY = 1e-3       # slope of log|x_k| that still counts as decay


def extrapolated_tail(
    index: np.ndarray,
    magnitude: np.ndarray,
    significant: np.ndarray,
    weight: Callable[[np.ndarray], np.ndarray],
) -> float:
    """Estimate sum_{k > index[-1]} weight(k) * |x_k| from the trend of the significant terms.

    Returns inf when the terms are still significant at the end of the range
    and no decay can be fitted.
    """
    index = np.asarray(index, dtype=float)
    magnitude = np.abs(np.asarray(magnitude, dtype=float))
    hits = np.flatnonzero(significant)
    if hits.size == 0:
        return 0.0
    last = index[-1]
    settled = index[hits[-1]] <= last - TAIL_GAP

    window = hits[-TAIL_WINDOW:]
    slope = None
    if window.size >= 3:
        slope, intercept = np.polyfit(index[window], np.log(magnitude[window]), 1)
    if slope is None or slope > -MIN_DECAY:
        return 0.0 if settled else math.inf

    k = last + np.arange(1, TAIL_HORIZON + 1, dtype=float)
    model = np.exp(intercept + slope * k)
    return float(np.sum(weight(k) * model))
