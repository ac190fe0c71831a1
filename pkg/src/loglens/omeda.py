"""Group-contrast diagnosis bars over the model subspace.

Given a weight vector opposing an anomalous group of observations to a
reference group, each feature gets a signed bar measuring its contribution
to the difference between the groups as seen through the model: positive
means the first group runs higher in that feature. Columns dropped at
preprocessing report a bar of exactly zero so output stays aligned with the
original feature list.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .pca import PcaModel


@dataclass(frozen=True)
class GroupSelection:
    """Two disjoint groups of bin labels; group2 None means 'all others'."""

    group1: frozenset[str]
    group2: frozenset[str] | None = None

    def __post_init__(self) -> None:
        if not self.group1:
            raise ConfigError("group1 must be non-empty")
        if self.group2 is not None and self.group1 & self.group2:
            raise ConfigError(f"groups overlap: {sorted(self.group1 & self.group2)}")

    @classmethod
    def versus_rest(cls, labels: set[str]) -> "GroupSelection":
        return cls(group1=frozenset(labels), group2=None)


def build_dummy(selection: GroupSelection, labels: list[str]) -> np.ndarray:
    """Size-normalized contrast weights: +1/|g1| on group1, -1/|g2| on group2."""
    index = {lab: i for i, lab in enumerate(labels)}
    unknown = (selection.group1 | (selection.group2 or frozenset())) - set(index)
    if unknown:
        raise ConfigError(f"unknown bin labels: {sorted(unknown)}")
    group2 = selection.group2
    if group2 is None:
        group2 = frozenset(set(index) - selection.group1)
    w = np.zeros(len(labels))
    for lab in selection.group1:
        w[index[lab]] = 1.0 / len(selection.group1)
    if group2:
        for lab in group2:
            w[index[lab]] = -1.0 / len(group2)
    return w


@dataclass
class OmedaResult:
    """Signed per-feature contribution bars, aligned with the matrix columns."""

    features: list[str]
    bars: np.ndarray
    dropped: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(self.features) != len(self.bars):
            raise DataError("bars misaligned with feature names")
        if not np.all(np.isfinite(self.bars)):
            raise DataError("non-finite contribution bars")

    def ranked(self) -> list[tuple[str, float]]:
        """(feature, bar) sorted by |bar| descending, ties by name."""
        order = sorted(range(len(self.features)), key=lambda i: (-abs(self.bars[i]), self.features[i]))
        return [(self.features[i], float(self.bars[i])) for i in order]

    def to_dict(self) -> dict:
        ranks = {name: r + 1 for r, (name, _) in enumerate(self.ranked())}
        return {
            "bars": [
                {"feature": name, "bar": float(bar), "rank": ranks[name]}
                for name, bar in zip(self.features, self.bars)
            ],
            "dropped": self.dropped,
        }


def omeda(model: PcaModel, xcs: np.ndarray, w: np.ndarray) -> OmedaResult:
    """Contribution bars for a contrast vector over the calibration rows."""
    xcs = np.asarray(xcs, dtype=float)
    w = np.asarray(w, dtype=float)
    if len(w) != xcs.shape[0]:
        raise DataError(f"weight vector length {len(w)} != {xcs.shape[0]} observations")
    if not np.any(w):
        warnings.warn("all-zero contrast weights; bars are all zero")
    xhat = model.reconstruct(xcs)
    bars_kept = ((2.0 * xcs - xhat) * xhat).T @ w

    if model.preprocess is None:
        return OmedaResult(features=[f"x{i}" for i in range(len(bars_kept))], bars=bars_kept)
    spec = model.preprocess
    bars = np.zeros(len(spec.original_columns))
    kept_pos = {c: j for j, c in enumerate(spec.kept_columns)}
    for i, c in enumerate(spec.original_columns):
        if c in kept_pos:
            bars[i] = bars_kept[kept_pos[c]]
    return OmedaResult(
        features=list(spec.original_columns), bars=bars, dropped=sorted(spec.dropped)
    )


def top_features(result: OmedaResult, k: int | None = None, fraction: float | None = None) -> list[str]:
    """Features explaining the contrast, by |bar|.

    Exactly one rule applies: the top `k` features, or every feature with
    |bar| >= fraction * max|bar|. Ties break by feature name.
    """
    if (k is None) == (fraction is None):
        raise ConfigError("pass exactly one of k or fraction")
    ranked = result.ranked()
    if k is not None:
        if k < 1:
            raise ConfigError(f"k must be >= 1, got {k}")
        return [name for name, _ in ranked[:k]]
    if not (0.0 < fraction <= 1.0):
        raise ConfigError(f"fraction must be in (0, 1], got {fraction}")
    peak = abs(ranked[0][1]) if ranked else 0.0
    if peak == 0.0:
        return []
    return [name for name, bar in ranked if abs(bar) >= fraction * peak]
