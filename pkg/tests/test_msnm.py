"""D/Q statistics and their control limits."""

from __future__ import annotations

import numpy as np
import pytest

from loglens.errors import ConfigError, DataError
from loglens.matrix import FeatureMatrix
from loglens.msnm import PHASE_FUTURE, control_limits, monitor, statistics
from loglens.pca import fit_pca, preprocess


def fitted(n=40, m=8, a=3, seed=0):
    rng = np.random.default_rng(seed)
    labels = [f"2026-{1 + i // 28:02d}-{1 + i % 28:02d}" for i in range(n)]
    matrix = FeatureMatrix(labels, [f"f{j}" for j in range(m)], rng.integers(0, 500, (n, m)))
    xcs, spec = preprocess(matrix)
    return fit_pca(xcs, a, spec), xcs, labels


class TestStatistics:
    def test_in_subspace_observation_has_zero_q(self):
        model, xcs, _ = fitted()
        row = model.reconstruct(xcs[:1])  # projection lies exactly in the subspace
        res = statistics(model, row)
        assert res.q[0] == pytest.approx(0.0, abs=1e-16 + 1e-10 * xcs.var())

    def test_zero_row_has_zero_scores_and_stats(self):
        model, xcs, _ = fitted()
        res = statistics(model, np.zeros((1, xcs.shape[1])))
        assert res.d[0] == 0.0 and res.q[0] == 0.0

    def test_trace_identity_for_d(self):
        model, xcs, labels = fitted(n=60, m=10, a=4, seed=3)
        res = statistics(model, xcs, labels)
        assert res.d.sum() == pytest.approx(4 * 59, rel=1e-6)

    def test_variance_partition_identity_for_q(self):
        model, xcs, _ = fitted(n=60, m=10, a=4, seed=3)
        res = statistics(model, xcs)
        expected = 59 * model.eigenvalues[4:].sum()
        assert res.q.sum() == pytest.approx(expected, rel=1e-6)

    def test_singular_score_covariance_rejected(self):
        rng = np.random.default_rng(5)
        direction = rng.normal(size=6)
        xcs = np.outer(rng.normal(size=20), direction)
        xcs -= xcs.mean(axis=0)
        model = fit_pca(xcs, 3)  # eigenvalues 2..3 are zero
        with pytest.raises(DataError, match="singular"):
            statistics(model, xcs)

    def test_sign_flip_invariance(self):
        model, xcs, _ = fitted(n=50, m=7, a=3, seed=11)
        flipped = model.loadings.copy()
        flipped[:, 1] *= -1
        from loglens.pca import PcaModel

        model2 = PcaModel(model.A, flipped, model.eigenvalues, model.n_cal, model.preprocess)
        r1 = statistics(model, xcs)
        r2 = statistics(model2, xcs)
        assert r1.d == pytest.approx(r2.d)
        assert r1.q == pytest.approx(r2.q)


class TestLimits:
    def test_limits_increase_with_confidence(self):
        model, _, _ = fitted()
        d95, q95 = control_limits(model, 0.95)
        d99, q99 = control_limits(model, 0.99)
        assert d99 > d95 > 0
        assert q99 > q95 > 0

    def test_future_phase_larger_than_calibration(self):
        model, _, _ = fitted()
        d_cal, _ = control_limits(model, 0.99)
        d_fut, _ = control_limits(model, 0.99, PHASE_FUTURE)
        assert d_fut > d_cal

    def test_alpha_bounds(self):
        model, _, _ = fitted()
        for bad in (0.0, 1.0, -1, 2):
            with pytest.raises(ConfigError):
                control_limits(model, bad)

    def test_degenerate_residuals_flagged(self):
        rng = np.random.default_rng(7)
        basis = rng.normal(size=(2, 5))
        xcs = rng.normal(size=(30, 2)) @ basis
        xcs -= xcs.mean(axis=0)
        model = fit_pca(xcs, 2)  # no residual variance left
        with pytest.warns(UserWarning, match="Q limit"):
            _, ucl_q = control_limits(model, 0.99)
        assert ucl_q is None

    def test_needs_enough_calibration_rows(self):
        model, _, _ = fitted(n=5, m=8, a=3)
        model.n_cal = 4
        with pytest.raises(DataError):
            control_limits(model, 0.99)

    def test_monitor_flags_above_either_limit(self):
        model, xcs, labels = fitted(n=60, m=10, a=3, seed=17)
        res = monitor(model, xcs, labels, alpha=0.99)
        flags = res.flagged()
        oracle = [(d > res.ucl_d) or (q > res.ucl_q) for d, q in zip(res.d, res.q)]
        assert flags == oracle
