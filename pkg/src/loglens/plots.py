"""Serializable plot payloads consumed by the CLI emitter and the explorer UI.

Every payload is a plain dict of JSON types; the CLI and the HTTP service
both serialize through `dump_payload`, so their outputs are byte-identical
for the same workspace state.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ConfigError
from .msnm import MsnmResult
from .omeda import OmedaResult
from .pca import CurveReport, PcaModel


def dump_payload(payload: dict) -> str:
    """Canonical JSON used by both the CLI and the service."""
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


def _group(label: str) -> str:
    """Color group of a bin label: the year prefix."""
    return label[:4]


def _check_pcs(model: PcaModel, pcs: tuple[int, int]) -> tuple[int, int]:
    i, j = pcs
    for p in (i, j):
        if not (1 <= p <= model.A):
            raise ConfigError(f"component {p} out of range [1, {model.A}]")
    return i, j


def _explained(model: PcaModel) -> list[float]:
    total = float(model.eigenvalues.sum())
    return [float(v / total) if total > 0 else 0.0 for v in model.eigenvalues[: model.A]]


def scores_payload(model: PcaModel, xcs: np.ndarray, labels: list[str], pcs: tuple[int, int] = (1, 2)) -> dict:
    i, j = _check_pcs(model, pcs)
    t = model.project(xcs)
    return {
        "kind": "scores",
        "pcs": [i, j],
        "explained": _explained(model),
        "points": [
            {"label": lab, "x": float(t[n, i - 1]), "y": float(t[n, j - 1]), "group": _group(lab)}
            for n, lab in enumerate(labels)
        ],
    }


def loadings_payload(model: PcaModel, pcs: tuple[int, int] = (1, 2)) -> dict:
    """One point per original feature; dropped columns sit at the origin."""
    i, j = _check_pcs(model, pcs)
    points = []
    if model.preprocess is not None:
        kept_pos = {c: r for r, c in enumerate(model.preprocess.kept_columns)}
        names = list(model.preprocess.original_columns)
    else:
        kept_pos = {f"x{r}": r for r in range(model.loadings.shape[0])}
        names = list(kept_pos)
    for name in names:
        r = kept_pos.get(name)
        points.append(
            {
                "feature": name,
                "x": float(model.loadings[r, i - 1]) if r is not None else 0.0,
                "y": float(model.loadings[r, j - 1]) if r is not None else 0.0,
            }
        )
    return {"kind": "loadings", "pcs": [i, j], "explained": _explained(model), "points": points}


def biplot_payload(model: PcaModel, xcs: np.ndarray, labels: list[str], pcs: tuple[int, int] = (1, 2)) -> dict:
    """Scores with loadings overlaid, scaled by the component standard
    deviations so distances and angles between both sets stay comparable."""
    i, j = _check_pcs(model, pcs)
    scores = scores_payload(model, xcs, labels, pcs)
    loadings = loadings_payload(model, pcs)
    sx = float(np.sqrt(model.eigenvalues[i - 1]))
    sy = float(np.sqrt(model.eigenvalues[j - 1]))
    for p in loadings["points"]:
        p["x"] *= sx
        p["y"] *= sy
    return {
        "kind": "biplot",
        "pcs": [i, j],
        "explained": scores["explained"],
        "points": scores["points"],
        "features": loadings["points"],
    }


def msnm_payload(result: MsnmResult) -> dict:
    return {
        "kind": "msnm",
        "alpha": result.alpha,
        "ucl_d": result.ucl_d,
        "ucl_q": result.ucl_q,
        "points": [
            {"label": lab, "d": float(d), "q": float(q), "group": _group(lab), "flagged": f}
            for lab, d, q, f in zip(result.labels, result.d, result.q, result.flagged())
        ],
    }


def curves_payload(report: CurveReport) -> dict:
    return {"kind": "curves", **report.to_dict()}


def omeda_payload(result: OmedaResult, selection: dict | None = None) -> dict:
    return {"kind": "omeda", "selection": selection, **result.to_dict()}
