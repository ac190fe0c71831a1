"""Preprocessing, PCA fitting and component-selection curves.

The model factorizes a preprocessed N x M matrix into scores and loadings
plus residuals. Loadings come from an eigendecomposition of the M x M
covariance (M is small here), with a deterministic sign convention: the
largest-magnitude element of each loading column is positive.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .matrix import FeatureMatrix

MODE_CENTER = "center"
MODE_AUTOSCALE = "autoscale"


@dataclass(frozen=True)
class PreprocessSpec:
    """Column-wise centering/scaling, with zero-variance columns dropped."""

    mode: str
    original_columns: tuple[str, ...]
    kept_columns: tuple[str, ...]
    mean: np.ndarray
    scale: np.ndarray
    dropped: dict[str, float]  # column name -> its constant value

    def apply(self, values: np.ndarray, columns: list[str] | None = None) -> np.ndarray:
        """Transform rows given in the original column order."""
        vals = np.asarray(values, dtype=float)
        if columns is not None and list(columns) != list(self.original_columns):
            raise DataError("column order does not match the preprocessing spec")
        if vals.shape[-1] != len(self.original_columns):
            raise DataError(
                f"expected {len(self.original_columns)} columns, got {vals.shape[-1]}"
            )
        keep = [i for i, c in enumerate(self.original_columns) if c not in self.dropped]
        return (vals[..., keep] - self.mean) / self.scale

    def invert(self, xcs: np.ndarray) -> np.ndarray:
        """Inverse transform back to the original columns (dropped restored)."""
        xcs = np.atleast_2d(np.asarray(xcs, dtype=float))
        out = np.empty((xcs.shape[0], len(self.original_columns)))
        kept_pos = {c: j for j, c in enumerate(self.kept_columns)}
        for i, c in enumerate(self.original_columns):
            if c in self.dropped:
                out[:, i] = self.dropped[c]
            else:
                j = kept_pos[c]
                out[:, i] = xcs[:, j] * self.scale[j] + self.mean[j]
        return out

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "original_columns": list(self.original_columns),
            "kept_columns": list(self.kept_columns),
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "dropped": self.dropped,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PreprocessSpec":
        return cls(
            mode=d["mode"],
            original_columns=tuple(d["original_columns"]),
            kept_columns=tuple(d["kept_columns"]),
            mean=np.array(d["mean"], dtype=float),
            scale=np.array(d["scale"], dtype=float),
            dropped={k: float(v) for k, v in d["dropped"].items()},
        )


def preprocess(matrix: FeatureMatrix, mode: str = MODE_CENTER) -> tuple[np.ndarray, PreprocessSpec]:
    """Center (and optionally scale to unit variance) the count matrix.

    Zero-variance columns cannot inform the model and are dropped, recorded
    with their constant value so the transform stays invertible.
    """
    if mode not in (MODE_CENTER, MODE_AUTOSCALE):
        raise ConfigError(f"unknown preprocessing mode: {mode!r}")
    n, _ = matrix.shape
    if n < 2:
        raise DataError(f"preprocessing needs at least 2 observations, got {n}")
    values = matrix.values.astype(float)
    variances = values.var(axis=0, ddof=1)
    keep = variances > 0.0
    dropped = {c: float(values[0, i]) for i, c in enumerate(matrix.columns) if not keep[i]}
    kept_cols = tuple(c for i, c in enumerate(matrix.columns) if keep[i])
    sub = values[:, keep]
    mean = sub.mean(axis=0)
    scale = np.sqrt(sub.var(axis=0, ddof=1)) if mode == MODE_AUTOSCALE else np.ones(sub.shape[1])
    spec = PreprocessSpec(
        mode=mode,
        original_columns=tuple(matrix.columns),
        kept_columns=kept_cols,
        mean=mean,
        scale=scale,
        dropped=dropped,
    )
    return (sub - mean) / scale, spec


@dataclass
class PcaModel:
    """Fitted principal-component model of the preprocessed calibration data."""

    A: int
    loadings: np.ndarray  # M_kept x A, orthonormal columns
    eigenvalues: np.ndarray  # full spectrum, descending, length min(N-1, M_kept)
    n_cal: int
    preprocess: PreprocessSpec | None = None

    @property
    def score_covariance(self) -> np.ndarray:
        """Diagonal of the score covariance: the first A eigenvalues."""
        return self.eigenvalues[: self.A]

    def project(self, xcs: np.ndarray) -> np.ndarray:
        xcs = np.asarray(xcs, dtype=float)
        if xcs.shape[-1] != self.loadings.shape[0]:
            raise DataError(
                f"expected {self.loadings.shape[0]} columns, got {xcs.shape[-1]}"
            )
        return xcs @ self.loadings

    def reconstruct(self, xcs: np.ndarray) -> np.ndarray:
        return self.project(xcs) @ self.loadings.T

    def residual(self, xcs: np.ndarray) -> np.ndarray:
        return np.asarray(xcs, dtype=float) - self.reconstruct(xcs)

    def to_dict(self) -> dict:
        return {
            "A": self.A,
            "loadings": self.loadings.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "n_cal": self.n_cal,
            "preprocess": self.preprocess.to_dict() if self.preprocess else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        return cls(
            A=int(d["A"]),
            loadings=np.array(d["loadings"], dtype=float),
            eigenvalues=np.array(d["eigenvalues"], dtype=float),
            n_cal=int(d["n_cal"]),
            preprocess=PreprocessSpec.from_dict(d["preprocess"]) if d.get("preprocess") else None,
        )

    def save(self, path: Path | str) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Path | str) -> "PcaModel":
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, ValueError, KeyError) as exc:
            raise DataError(f"cannot load model {path}: {exc}") from exc


def _eigendecompose(xcs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Descending (eigenvalues, eigenvectors) of the sample covariance."""
    n = xcs.shape[0]
    cov = (xcs.T @ xcs) / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    return np.clip(evals[order], 0.0, None), evecs[:, order]


def _fix_signs(loadings: np.ndarray) -> np.ndarray:
    out = loadings.copy()
    for a in range(out.shape[1]):
        j = int(np.argmax(np.abs(out[:, a])))
        if out[j, a] < 0:
            out[:, a] = -out[:, a]
    return out


def fit_pca(
    xcs: np.ndarray, A: int, preprocess_spec: PreprocessSpec | None = None
) -> PcaModel:
    """Fit an A-component model on preprocessed data."""
    xcs = np.asarray(xcs, dtype=float)
    n, m = xcs.shape
    max_a = min(n - 1, m)
    if not (1 <= A <= max_a):
        raise ConfigError(f"component count must be in [1, {max_a}], got {A}")
    evals, evecs = _eigendecompose(xcs)
    loadings = _fix_signs(evecs[:, :A])
    return PcaModel(
        A=A,
        loadings=loadings,
        eigenvalues=evals[:max_a],
        n_cal=n,
        preprocess=preprocess_spec,
    )


def project(model: PcaModel, xcs: np.ndarray) -> np.ndarray:
    """Scores of rows already preprocessed with the model's spec."""
    return model.project(xcs)


@dataclass
class CurveReport:
    """Residual variance and ckf cross-validation value per component count."""

    a_values: list[int]
    residual_variance: list[float]
    ckf: list[float]
    k_folds: int

    def to_dict(self) -> dict:
        return {
            "a_values": self.a_values,
            "residual_variance": self.residual_variance,
            "ckf": self.ckf,
            "k_folds": self.k_folds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CurveReport":
        return cls(list(d["a_values"]), list(d["residual_variance"]), list(d["ckf"]), int(d["k_folds"]))


def selection_curves(xcs: np.ndarray, a_max: int | None = None, k_folds: int | None = None) -> CurveReport:
    """Curves guiding the choice of the component count.

    Residual variance at A is the eigenvalue mass beyond the first A
    components. The ckf value at A is 1 - PRESS(A)/||X||^2 under column-wise
    k-fold holdout: each column group is predicted by least squares from the
    scores of a model fitted without those columns.
    """
    xcs = np.asarray(xcs, dtype=float)
    n, m = xcs.shape
    k = k_folds if k_folds is not None else min(m, 10)
    if k < 2 or k > m:
        raise ConfigError(f"k_folds must be in [2, {m}], got {k}")
    bound = min(n - 1, m - math.ceil(m / k))
    a_max = bound if a_max is None else a_max
    if not (0 <= a_max <= bound):
        raise ConfigError(f"a_max must be in [0, {bound}], got {a_max}")

    evals, _ = _eigendecompose(xcs)
    total = float(evals.sum())
    if total <= 0.0:
        raise DataError("zero total variance; nothing to model")
    resvar = [float(evals[a:].sum() / total) for a in range(a_max + 1)]

    total_ss = float((xcs**2).sum())
    folds = [[j for j in range(m) if j % k == g] for g in range(k)]
    fold_loadings = []
    for group in folds:
        keep = [j for j in range(m) if j not in group]
        _, evecs = _eigendecompose(xcs[:, keep])
        fold_loadings.append((group, keep, evecs[:, :a_max]))

    press = np.zeros(a_max + 1)
    press[0] = total_ss
    for a in range(1, a_max + 1):
        acc = 0.0
        for group, keep, evecs in fold_loadings:
            t = xcs[:, keep] @ evecs[:, :a]
            target = xcs[:, group]
            b, *_ = np.linalg.lstsq(t, target, rcond=None)
            acc += float(((target - t @ b) ** 2).sum())
        press[a] = acc
    ckf = [float(1.0 - p / total_ss) for p in press]
    return CurveReport(list(range(a_max + 1)), resvar, ckf, k)


def choose_components(report: CurveReport, rel_tolerance: float = 0.01) -> int:
    """Smallest A whose next ckf improvement is negligible.

    Negligible means below `rel_tolerance` times the total ckf rise from
    A=0 to the best value on the curve; falls back to the last A when the
    curve keeps improving.
    """
    ckf = report.ckf
    if len(ckf) < 2:
        raise ConfigError("curve report too short to choose a component count")
    span = max(ckf) - ckf[0]
    threshold = rel_tolerance * (span if span > 0 else 1.0)
    for a in range(1, len(ckf) - 1):
        if ckf[a + 1] - ckf[a] < threshold:
            return a
    return report.a_values[-1]
