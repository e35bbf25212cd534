"""Kaplan-Meier product-limit estimation and the two-group log-rank test.

Times are in days. Confidence bands use the Greenwood variance on the
log(-log) scale (95%, clamped at the 0/1 boundaries). The median is the
smallest event time where the survival estimate drops to <= 0.5; curves that
never reach 0.5 carry ``median = None``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DataError

DAYS_PER_MONTH = 30.44
_Z95 = 1.959963984540054


def days_to_months(days: float) -> float:
    return days / DAYS_PER_MONTH


@dataclass(frozen=True)
class SurvivalCurve:
    times: np.ndarray  # distinct event times, ascending
    surv: np.ndarray  # S(t) after each event time
    at_risk: np.ndarray  # n at risk just before each event time
    events: np.ndarray  # events at each event time
    ci_low: np.ndarray
    ci_high: np.ndarray
    censor_times: np.ndarray  # censoring times (plot ticks)
    median: float | None
    n: int

    def survival_at(self, t: float) -> float:
        idx = np.searchsorted(self.times, t, side="right") - 1
        return 1.0 if idx < 0 else float(self.surv[idx])


def kaplan_meier(times, events) -> SurvivalCurve:
    """Product-limit estimate from durations and event flags (False = censored)."""
    times = np.asarray(times, dtype=np.float64)
    events = np.asarray(events, dtype=bool)
    if times.shape != events.shape or times.ndim != 1 or times.size == 0:
        raise DataError(f"times {times.shape} and events {events.shape} disagree or are empty")
    if np.any(times < 0):
        raise DataError("negative survival time")

    order = np.argsort(times, kind="stable")
    t = times[order]
    e = events[order]
    n = t.size

    grid = []
    surv = []
    at_risk = []
    d_at = []
    var_sum = 0.0
    greenwood = []
    s = 1.0
    i = 0
    while i < n:
        j = i
        while j < n and t[j] == t[i]:
            j += 1
        d = int(e[i:j].sum())
        if d > 0:
            n_i = n - i
            s *= 1.0 - d / n_i
            if n_i > d:
                var_sum += d / (n_i * (n_i - d))
            grid.append(float(t[i]))
            surv.append(s)
            at_risk.append(n_i)
            d_at.append(d)
            greenwood.append(var_sum)
        i = j

    grid = np.asarray(grid)
    surv = np.asarray(surv)
    ci_low = np.zeros_like(surv)
    ci_high = np.ones_like(surv)
    for k, s_k in enumerate(surv):
        if s_k <= 0.0:
            ci_low[k] = ci_high[k] = 0.0
        elif s_k >= 1.0:
            ci_low[k] = ci_high[k] = 1.0
        else:
            se_ll = math.sqrt(greenwood[k]) / abs(math.log(s_k))
            ci_low[k] = s_k ** math.exp(_Z95 * se_ll)
            ci_high[k] = s_k ** math.exp(-_Z95 * se_ll)

    median = None
    below = np.nonzero(surv <= 0.5)[0]
    if below.size:
        median = float(grid[below[0]])

    return SurvivalCurve(
        times=grid,
        surv=surv,
        at_risk=np.asarray(at_risk, dtype=np.int64),
        events=np.asarray(d_at, dtype=np.int64),
        ci_low=ci_low,
        ci_high=ci_high,
        censor_times=np.sort(times[~events]),
        median=median,
        n=n,
    )


@dataclass(frozen=True)
class LogRankResult:
    chi2: float
    p: float
    observed_a: float
    expected_a: float


def log_rank(times_a, events_a, times_b, events_b) -> LogRankResult:
    """Two-group log-rank statistic; p from chi-square with 1 df."""
    ta = np.asarray(times_a, dtype=np.float64)
    ea = np.asarray(events_a, dtype=bool)
    tb = np.asarray(times_b, dtype=np.float64)
    eb = np.asarray(events_b, dtype=bool)
    if ta.size == 0 or tb.size == 0:
        raise DataError("log-rank needs both groups nonempty")
    if np.any(ta < 0) or np.any(tb < 0):
        raise DataError("negative survival time")
    if not (ea.any() or eb.any()):
        raise DataError("log-rank needs at least one event")

    event_times = np.unique(np.concatenate([ta[ea], tb[eb]]))
    observed = 0.0
    expected = 0.0
    variance = 0.0
    for t in event_times:
        n_a = int((ta >= t).sum())
        n_b = int((tb >= t).sum())
        n_t = n_a + n_b
        d_a = int(((ta == t) & ea).sum())
        d_b = int(((tb == t) & eb).sum())
        d = d_a + d_b
        if n_t == 0 or d == 0:
            continue
        observed += d_a
        expected += d * n_a / n_t
        if n_t > 1:
            variance += d * (n_a / n_t) * (n_b / n_t) * (n_t - d) / (n_t - 1)

    if variance == 0.0:
        return LogRankResult(0.0, 1.0, observed, expected)
    chi2 = (observed - expected) ** 2 / variance
    p = math.erfc(math.sqrt(chi2 / 2.0))
    return LogRankResult(float(chi2), float(p), float(observed), float(expected))
