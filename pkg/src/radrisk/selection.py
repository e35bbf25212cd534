"""Pearson correlation and greedy minimum-redundancy feature selection.

The greedy criterion is the difference form: at each step pick the unselected
feature maximizing ``|r(f, label)| - mean over selected s of |r(f, s)|``; the
first pick maximizes ``|r(f, label)|`` alone. Ties break on the
lexicographically smallest feature name. Selection stops at the cap, or once
every remaining score is non-positive (after at least one pick).

Constant features carry r = 0 with a degenerate flag instead of failing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError


def pearson(x, y) -> float:
    """Pearson linear correlation; 0 by convention when either vector is constant."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError(f"pearson needs two equal-length vectors, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise DataError(f"pearson needs n >= 2 samples, got {x.size}")
    # exact-constancy guard: the float mean of a constant vector is not exact
    if np.all(x == x[0]) or np.all(y == y[0]):
        return 0.0
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(np.sqrt((xc**2).sum()))
    sy = float(np.sqrt((yc**2).sum()))
    if sx == 0.0 or sy == 0.0:
        return 0.0
    return float((xc * yc).sum() / (sx * sy))


def is_degenerate(x) -> bool:
    x = np.asarray(x, dtype=np.float64)
    return bool(np.all(x == x[0]))


def selection_cap(n_samples: int, per: int = 10) -> int:
    """One feature per ``per`` samples, never below 1."""
    return max(1, n_samples // per)


@dataclass(frozen=True)
class CorrelationReport:
    """Per-feature correlation to the label, ranked by |r| (descending)."""

    names: list[str]
    r: np.ndarray
    degenerate: np.ndarray

    def ranked(self) -> list[tuple[str, float]]:
        order = sorted(range(len(self.names)), key=lambda k: (-abs(float(self.r[k])), self.names[k]))
        return [(self.names[k], float(self.r[k])) for k in order]


def correlation_report(X: np.ndarray, y, names: list[str]) -> CorrelationReport:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    r = _corr_to_vector(X, y)
    degenerate = np.array([bool(np.all(X[:, k] == X[0, k])) for k in range(X.shape[1])])
    return CorrelationReport(list(names), r, degenerate)


def pairwise_abs_correlation(X) -> np.ndarray:
    """|r| between all feature-column pairs; degenerate columns carry 0 throughout."""
    X = np.asarray(X, dtype=np.float64)
    d = X.shape[1]
    out = np.empty((d, d))
    degenerate = np.array([bool(np.all(X[:, j] == X[0, j])) for j in range(d)])
    for j in range(d):
        out[:, j] = np.abs(_corr_to_vector(X, X[:, j]))
    np.fill_diagonal(out, 1.0)
    out[degenerate, :] = 0.0
    out[:, degenerate] = 0.0
    return out


def _corr_to_vector(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Column-wise pearson(X[:, k], y) with the constant-column convention."""
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    xn = np.sqrt((Xc**2).sum(axis=0))
    yn = float(np.sqrt((yc**2).sum()))
    r = np.zeros(X.shape[1])
    ok = ~np.all(X == X[0, :], axis=0)  # exact constancy, not float-residual norms
    if yn > 0.0 and not np.all(y == y[0]):
        r[ok] = (Xc[:, ok] * yc[:, None]).sum(axis=0) / (xn[ok] * yn)
    return r


@dataclass(frozen=True)
class SelectionStep:
    name: str
    relevance: float
    redundancy: float
    score: float


@dataclass(frozen=True)
class SelectionResult:
    selected: list[str]
    trace: list[SelectionStep]
    cap: int

    def indices(self, names: list[str]) -> list[int]:
        lookup = {n: k for k, n in enumerate(names)}
        return [lookup[n] for n in self.selected]

    def to_dict(self) -> dict:
        return {
            "cap": self.cap,
            "selected": list(self.selected),
            "trace": [
                {"name": s.name, "relevance": s.relevance, "redundancy": s.redundancy, "score": s.score}
                for s in self.trace
            ],
        }


def mrmr_select(X, y, k: int, names: list[str] | None = None) -> SelectionResult:
    """Greedy relevance-minus-redundancy selection of at most ``k`` features."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.size == 0:
        raise DataError(f"feature matrix must be nonempty 2D, got shape {X.shape}")
    if k < 1:
        raise ConfigError(f"selection cap must be >= 1, got {k}")
    n, d = X.shape
    if n < 2:
        raise DataError(f"selection needs >= 2 samples, got {n}")
    y = np.asarray(y, dtype=np.float64)
    if names is None:
        names = [f"f{k:06d}" for k in range(d)]
    if len(names) != d or len(set(names)) != d:
        raise DataError("feature names must be unique and match the matrix width")

    relevance = np.abs(_corr_to_vector(X, y))
    redundancy_sum = np.zeros(d)
    remaining = np.ones(d, dtype=bool)
    selected: list[int] = []
    trace: list[SelectionStep] = []

    while len(selected) < min(k, d):
        idx = np.nonzero(remaining)[0]
        if len(selected) == 0:
            scores = relevance[idx]
            redund = np.zeros(idx.size)
        else:
            redund = redundancy_sum[idx] / len(selected)
            scores = relevance[idx] - redund
            if scores.max() <= 0.0:
                break
        # deterministic tie-break: highest score, then smallest name
        best_pos = min(range(idx.size), key=lambda t: (-scores[t], names[idx[t]]))
        best = int(idx[best_pos])
        selected.append(best)
        remaining[best] = False
        trace.append(
            SelectionStep(
                names[best],
                float(relevance[best]),
                float(redund[best_pos]),
                float(scores[best_pos]),
            )
        )
        if remaining.any():
            redundancy_sum[remaining] += np.abs(_corr_to_vector(X[:, remaining], X[:, best]))

    return SelectionResult([names[s] for s in selected], trace, k)
