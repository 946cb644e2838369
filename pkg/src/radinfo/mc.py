"""Monte Carlo summaries shared by the experiments."""
from __future__ import annotations

import numpy as np
from scipy import stats


def wilson(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("need at least one sample")
    ci = stats.binomtest(int(k), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def proportion(k: int, n: int, level: float = 0.95) -> dict:
    lo, hi = wilson(k, n, level)
    p = k / n
    return {"estimate": p, "ci_lo": lo, "ci_hi": hi, "halfwidth": 0.5 * (hi - lo), "n": int(n)}


def bootstrap_ci(values: np.ndarray, statistic, rng: np.random.Generator,
                 n_resamples: int = 200, level: float = 0.95) -> tuple[float, float]:
    """Percentile bootstrap interval for ``statistic`` of a 1-d sample."""
    res = stats.bootstrap((np.asarray(values),), statistic, n_resamples=n_resamples,
                          confidence_level=level, method="percentile", vectorized=True,
                          batch=10, random_state=rng)
    return float(res.confidence_interval.low), float(res.confidence_interval.high)
