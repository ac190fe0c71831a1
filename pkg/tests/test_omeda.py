"""Group-contrast diagnosis bars."""

from __future__ import annotations

import numpy as np
import pytest

from loglens.errors import ConfigError, DataError
from loglens.matrix import FeatureMatrix
from loglens.omeda import GroupSelection, build_dummy, omeda, top_features
from loglens.pca import fit_pca, preprocess


def brute_force_bars(model, xcs, w):
    """Independent elementwise re-implementation of the bar formula."""
    xhat = xcs @ model.loadings @ model.loadings.T
    m = xcs.shape[1]
    bars = np.zeros(m)
    for j in range(m):
        for n in range(xcs.shape[0]):
            bars[j] += w[n] * (2.0 * xcs[n, j] - xhat[n, j]) * xhat[n, j]
    return bars


def fitted(n=12, m=5, a=2, seed=0):
    rng = np.random.default_rng(seed)
    labels = [f"2026-01-{i + 1:02d}" for i in range(n)]
    matrix = FeatureMatrix(labels, [f"f{j}" for j in range(m)], rng.integers(0, 50, (n, m)))
    xcs, spec = preprocess(matrix)
    return fit_pca(xcs, a, spec), xcs, labels


class TestDummy:
    def test_two_singleton_groups(self):
        w = build_dummy(GroupSelection(frozenset({"d1"}), frozenset({"d2"})), ["d1", "d2", "d3"])
        assert list(w) == [1.0, -1.0, 0.0]

    def test_rest_group_normalization(self):
        labels = [f"d{i}" for i in range(10)]
        w = build_dummy(GroupSelection(frozenset({"d0", "d1"})), labels)
        assert w[0] == w[1] == 0.5
        assert list(w[2:]) == [-1.0 / 8] * 8

    def test_empty_group1_rejected(self):
        with pytest.raises(ConfigError):
            GroupSelection(frozenset())

    def test_overlap_rejected(self):
        with pytest.raises(ConfigError, match="overlap"):
            GroupSelection(frozenset({"d1"}), frozenset({"d1", "d2"}))

    def test_unknown_label_rejected(self):
        with pytest.raises(ConfigError, match="unknown"):
            build_dummy(GroupSelection(frozenset({"nope"})), ["d1"])


class TestOmeda:
    def test_identical_groups_give_zero_bars(self):
        model, xcs, labels = fitted()
        # duplicate two rows so the groups are truly identical
        xcs2 = xcs.copy()
        xcs2[1] = xcs2[0]
        w = np.zeros(len(labels))
        w[0], w[1] = 1.0, -1.0
        result = omeda(model, xcs2, w)
        assert np.abs(result.bars).max() < 1e-10

    def test_full_rank_reduces_to_squared_group_means(self):
        model, xcs, labels = fitted(n=10, m=4, a=4)
        g1, g2 = {labels[0], labels[1]}, {labels[2]}
        w = build_dummy(GroupSelection(frozenset(g1), frozenset(g2)), labels)
        result = omeda(model, xcs, w)
        idx1 = [labels.index(l) for l in g1]
        idx2 = [labels.index(l) for l in g2]
        expected = (xcs[idx1] ** 2).mean(axis=0) - (xcs[idx2] ** 2).mean(axis=0)
        assert result.bars == pytest.approx(expected, abs=1e-9)

    def test_matches_brute_force_oracle(self):
        model, xcs, labels = fitted(n=4, m=3, a=1, seed=3)
        w = np.array([0.5, 0.5, -0.5, -0.5])
        result = omeda(model, xcs, w)
        assert result.bars == pytest.approx(brute_force_bars(model, xcs, w), abs=1e-12)

    def test_linearity_in_w(self):
        model, xcs, labels = fitted(seed=5)
        w = build_dummy(GroupSelection(frozenset({labels[0]})), labels)
        b1 = omeda(model, xcs, w).bars
        b3 = omeda(model, xcs, 3.0 * w).bars
        assert b3 == pytest.approx(3.0 * b1)

    def test_antisymmetry(self):
        model, xcs, labels = fitted(seed=7)
        sel = GroupSelection(frozenset({labels[0], labels[1]}), frozenset({labels[2], labels[3]}))
        swapped = GroupSelection(sel.group2, sel.group1)
        b1 = omeda(model, xcs, build_dummy(sel, labels)).bars
        b2 = omeda(model, xcs, build_dummy(swapped, labels)).bars
        assert b2 == pytest.approx(-b1)

    def test_all_zero_weights_warn(self):
        model, xcs, labels = fitted()
        with pytest.warns(UserWarning, match="all-zero"):
            result = omeda(model, xcs, np.zeros(len(labels)))
        assert np.all(result.bars == 0.0)

    def test_wrong_length_rejected(self):
        model, xcs, _ = fitted()
        with pytest.raises(DataError):
            omeda(model, xcs, np.ones(3))

    def test_dropped_columns_report_zero_bars(self):
        rng = np.random.default_rng(11)
        vals = rng.integers(0, 50, (8, 4))
        vals[:, 2] = 9  # constant column
        matrix = FeatureMatrix([f"d{i}" for i in range(8)], ["a", "b", "flat", "c"], vals)
        xcs, spec = preprocess(matrix)
        model = fit_pca(xcs, 2, spec)
        w = np.zeros(8)
        w[0], w[1:] = 1.0, -1.0 / 7
        result = omeda(model, xcs, w)
        assert result.features == ["a", "b", "flat", "c"]
        assert result.bars[2] == 0.0
        assert result.dropped == ["flat"]


class TestTopFeatures:
    def make_result(self):
        model, xcs, labels = fitted(seed=13)
        w = build_dummy(GroupSelection(frozenset({labels[0]})), labels)
        return omeda(model, xcs, w)

    def test_k_larger_than_m_returns_all_sorted(self):
        result = self.make_result()
        out = top_features(result, k=99)
        assert len(out) == len(result.features)
        mags = [abs(dict(zip(result.features, result.bars))[f]) for f in out]
        assert mags == sorted(mags, reverse=True)

    def test_fraction_rule(self):
        result = self.make_result()
        out = top_features(result, fraction=0.5)
        peak = max(abs(b) for b in result.bars)
        expected = {f for f, b in zip(result.features, result.bars) if abs(b) >= 0.5 * peak}
        assert set(out) == expected

    def test_exactly_one_rule(self):
        result = self.make_result()
        with pytest.raises(ConfigError):
            top_features(result)
        with pytest.raises(ConfigError):
            top_features(result, k=2, fraction=0.5)

    def test_deterministic_tie_break_by_name(self):
        from loglens.omeda import OmedaResult

        result = OmedaResult(features=["b", "a", "c"], bars=np.array([1.0, 1.0, -1.0]))
        assert top_features(result, k=3) == ["a", "b", "c"]
