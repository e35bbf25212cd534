import numpy as np
import pytest

from radrisk import (
    correlation_report,
    mrmr_select,
    pearson,
    selection_cap,
)
from radrisk.errors import ConfigError, DataError
from radrisk.selection import is_degenerate
from oracles import bf_mrmr, bf_pearson


def test_pearson_hand_values():
    assert pearson([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0, abs=1e-12)
    assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-12)
    # covariance 4.0 over sqrt(5) * sqrt(5)
    assert pearson([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)


def test_pearson_degenerate_convention():
    assert pearson([2, 2, 2], [1, 2, 3]) == 0.0
    assert is_degenerate([2, 2, 2])
    assert not is_degenerate([2, 2, 3])


def test_pearson_errors():
    with pytest.raises(DataError):
        pearson([1, 2], [1, 2, 3])
    with pytest.raises(DataError):
        pearson([1], [1])


def test_pearson_properties_random():
    rng = np.random.default_rng(40)
    for _ in range(200):
        n = int(rng.integers(2, 30))
        x = rng.normal(size=n)
        y = rng.normal(size=n)
        r = pearson(x, y)
        assert abs(r) <= 1.0 + 1e-12
        assert r == pytest.approx(pearson(y, x), abs=1e-12)
        assert r == pytest.approx(bf_pearson(x.tolist(), y.tolist()), abs=1e-12)
        a = float(rng.uniform(0.1, 5.0))
        b = float(rng.normal())
        assert pearson(a * x + b, y) == pytest.approx(r, abs=1e-10)
        assert pearson(-a * x + b, y) == pytest.approx(-r, abs=1e-10)


def test_selection_cap_rule():
    # one feature per ten samples: 932 samples -> 93
    assert selection_cap(932) == 93
    assert selection_cap(9) == 1
    assert selection_cap(0) == 1


def test_label_column_selected_first():
    rng = np.random.default_rng(41)
    y = rng.integers(0, 2, size=40).astype(float)
    X = np.column_stack([rng.normal(size=40), y, rng.normal(size=40)])
    result = mrmr_select(X, y, 2, ["a", "is_label", "b"])
    assert result.selected[0] == "is_label"
    assert result.trace[0].relevance == pytest.approx(1.0, abs=1e-12)


def test_duplicate_column_redundancy_penalty():
    rng = np.random.default_rng(42)
    n = 20
    y = rng.integers(0, 2, size=n).astype(float)
    informative = y + rng.normal(0, 0.1, size=n)
    other = y + rng.normal(0, 0.6, size=n)
    X = np.column_stack([informative, informative, other, rng.normal(size=n), rng.normal(size=n)])
    names = ["dup_a", "dup_b", "other", "n1", "n2"]
    result = mrmr_select(X, y, 3, names)
    assert result.selected[0] == "dup_a"  # tie on |r| broken by name
    # the bit-identical duplicate carries |r| = 1 redundancy: never picked second
    assert result.selected[1] != "dup_b"
    oracle = bf_mrmr(X.tolist(), y.tolist(), 3, names)
    assert result.selected == oracle


def test_tie_break_is_lexicographic():
    y = np.array([0.0, 1.0, 0.0, 1.0])
    col = np.array([1.0, 2.0, 1.0, 2.0])
    X = np.column_stack([col, col])
    result = mrmr_select(X, y, 1, ["zeta", "alpha"])
    assert result.selected == ["alpha"]


def test_stops_when_scores_nonpositive():
    y = np.array([0.0, 1.0, 0.0, 1.0, 0.0, 1.0])
    col = np.array([1.0, 2.0, 1.0, 2.0, 1.0, 2.0])
    X = np.column_stack([col, col, col])
    result = mrmr_select(X, y, 3, ["a", "b", "c"])
    # after the first pick every remaining candidate scores 1 - 1 = 0
    assert result.selected == ["a"]
    assert len(result.trace) == 1


def test_oracle_equivalence_random_instances():
    rng = np.random.default_rng(43)
    for trial in range(30):
        n = int(rng.integers(5, 51))
        d = int(rng.integers(2, 13))
        X = rng.normal(size=(n, d))
        if trial % 3 == 0:
            X[:, 0] = X[:, 1]  # planted duplicate
        if trial % 4 == 0:
            X[:, -1] = 3.14  # constant column
        y = rng.integers(0, 2, size=n).astype(float)
        if len(np.unique(y)) < 2:
            y[0] = 1.0 - y[0]
        k = int(rng.integers(1, d + 1))
        names = [f"f{j:02d}" for j in range(d)]
        mine = mrmr_select(X, y, k, names).selected
        ref = bf_mrmr(X.tolist(), y.tolist(), k, names)
        assert mine == ref, (trial, mine, ref)


def test_affine_rescaling_invariance():
    rng = np.random.default_rng(44)
    n, d = 30, 6
    X = rng.normal(size=(n, d))
    y = rng.integers(0, 2, size=n).astype(float)
    names = [f"f{j}" for j in range(d)]
    base = mrmr_select(X, y, 4, names).selected
    X2 = X * rng.uniform(0.5, 4.0, size=d) + rng.normal(size=d)
    assert mrmr_select(X2, y, 4, names).selected == base


def test_determinism():
    rng = np.random.default_rng(45)
    X = rng.normal(size=(25, 8))
    y = rng.integers(0, 2, size=25).astype(float)
    a = mrmr_select(X, y, 5)
    b = mrmr_select(X.copy(), y.copy(), 5)
    assert a.selected == b.selected
    assert [s.score for s in a.trace] == [s.score for s in b.trace]


def test_selection_errors():
    with pytest.raises(DataError):
        mrmr_select(np.zeros((0, 3)), np.zeros(0), 1)
    with pytest.raises(ConfigError):
        mrmr_select(np.zeros((4, 3)), np.zeros(4), 0)


def test_pairwise_abs_correlation():
    from radrisk.selection import pairwise_abs_correlation

    rng = np.random.default_rng(47)
    X = np.column_stack([rng.normal(size=30), rng.normal(size=30), np.full(30, 2.0)])
    X = np.column_stack([X, -3.0 * X[:, 0] + 1.0])
    m = pairwise_abs_correlation(X)
    assert m.shape == (4, 4)
    assert m[0, 0] == 1.0 and m[1, 1] == 1.0
    assert m[0, 3] == pytest.approx(1.0, abs=1e-12)  # affine copy
    assert m[0, 1] == pytest.approx(abs(pearson(X[:, 0], X[:, 1])), abs=1e-12)
    assert np.all(m[2, :] == 0.0) and np.all(m[:, 2] == 0.0)  # constant column
    assert np.allclose(m, m.T, atol=1e-12)


def test_correlation_report_ranking():
    rng = np.random.default_rng(46)
    y = rng.integers(0, 2, size=50).astype(float)
    X = np.column_stack([y * 2.0, rng.normal(size=50), np.full(50, 7.0)])
    report = correlation_report(X, y, ["strong", "noise", "flat"])
    ranked = report.ranked()
    assert ranked[0][0] == "strong"
    assert ranked[0][1] == pytest.approx(1.0, abs=1e-12)
    assert report.degenerate.tolist() == [False, False, True]
    assert dict(ranked)["flat"] == 0.0
