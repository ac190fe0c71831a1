"""Plot payload builders: cardinality, grouping, scaling, serialization."""

from __future__ import annotations

import json

import numpy as np
import pytest

from loglens.errors import ConfigError
from loglens.matrix import FeatureMatrix
from loglens.msnm import monitor
from loglens.pca import fit_pca, preprocess, selection_curves
from loglens.plots import (
    biplot_payload,
    curves_payload,
    dump_payload,
    loadings_payload,
    msnm_payload,
    scores_payload,
)


@pytest.fixture(scope="module")
def fitted():
    rng = np.random.default_rng(3)
    labels = [f"2025-12-{i + 1:02d}" for i in range(15)] + [f"2026-01-{i + 1:02d}" for i in range(15)]
    vals = rng.integers(0, 300, (30, 7))
    vals[:, 4] = 11  # constant column exercises dropped-feature handling
    matrix = FeatureMatrix(labels, [f"f{j}" for j in range(7)], vals)
    xcs, spec = preprocess(matrix)
    model = fit_pca(xcs, 3, spec)
    return model, xcs, labels, matrix


def test_score_payload_has_one_point_per_observation(fitted):
    model, xcs, labels, matrix = fitted
    payload = scores_payload(model, xcs, labels, (1, 2))
    assert len(payload["points"]) == len(labels)
    assert payload["pcs"] == [1, 2]
    # year grouping for color
    assert {p["group"] for p in payload["points"]} == {"2025", "2026"}


def test_loading_payload_has_one_point_per_original_feature(fitted):
    model, _, _, matrix = fitted
    payload = loadings_payload(model, (1, 2))
    assert len(payload["points"]) == len(matrix.columns)
    dropped = next(p for p in payload["points"] if p["feature"] == "f4")
    assert (dropped["x"], dropped["y"]) == (0.0, 0.0)


def test_biplot_scales_loadings_by_component_sd(fitted):
    model, xcs, labels, _ = fitted
    plain = loadings_payload(model, (1, 2))
    biplot = biplot_payload(model, xcs, labels, (1, 2))
    sx, sy = np.sqrt(model.eigenvalues[0]), np.sqrt(model.eigenvalues[1])
    for raw, scaled in zip(plain["points"], biplot["features"]):
        assert scaled["x"] == pytest.approx(raw["x"] * sx)
        assert scaled["y"] == pytest.approx(raw["y"] * sy)
    assert len(biplot["points"]) == len(labels)


def test_msnm_payload_includes_both_limits_and_all_points(fitted):
    model, xcs, labels, _ = fitted
    result = monitor(model, xcs, labels, alpha=0.99)
    payload = msnm_payload(result)
    assert len(payload["points"]) == len(labels)
    assert payload["ucl_d"] > 0 and payload["ucl_q"] > 0
    assert payload["alpha"] == 0.99


def test_pc_out_of_range_rejected(fitted):
    model, xcs, labels, _ = fitted
    with pytest.raises(ConfigError, match="out of range"):
        scores_payload(model, xcs, labels, (1, 9))


def test_curves_payload_round_trips_through_json(fitted):
    _, xcs, _, _ = fitted
    report = selection_curves(xcs, k_folds=3)
    payload = curves_payload(report)
    again = json.loads(dump_payload(payload))
    assert again == payload
    assert again["a_values"][0] == 0 and again["residual_variance"][0] == 1.0
