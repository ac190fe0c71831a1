"""Per-observation monitoring statistics and their upper control limits.

Each observation is compressed to two numbers: a Mahalanobis-type distance
of its scores under the calibration score covariance (D), and the squared
norm of its residual outside the model subspace (Q). Control limits at a
confidence level come from the Tracy-Young-Mason Beta/F forms for D and the
Jackson-Mudholkar approximation for Q.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ConfigError, DataError
from .pca import PcaModel

PHASE_CALIBRATION = "calibration"
PHASE_FUTURE = "future"


@dataclass
class MsnmResult:
    """D and Q per observation, with optional limits attached."""

    labels: list[str]
    d: np.ndarray
    q: np.ndarray
    ucl_d: float | None = None
    ucl_q: float | None = None
    alpha: float | None = None

    def flagged(self) -> list[bool]:
        """Observations exceeding either control limit."""
        out = []
        for d, q in zip(self.d, self.q):
            over_d = self.ucl_d is not None and d > self.ucl_d
            over_q = self.ucl_q is not None and q > self.ucl_q
            out.append(bool(over_d or over_q))
        return out

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "ucl_d": self.ucl_d,
            "ucl_q": self.ucl_q,
            "observations": [
                {"bin": lab, "d": float(d), "q": float(q), "flagged": f}
                for lab, d, q, f in zip(self.labels, self.d, self.q, self.flagged())
            ],
        }


def statistics(model: PcaModel, xcs: np.ndarray, labels: list[str] | None = None) -> MsnmResult:
    """D and Q for rows preprocessed with the model's spec."""
    xcs = np.atleast_2d(np.asarray(xcs, dtype=float))
    lam = model.score_covariance
    if np.any(lam <= 0.0):
        raise DataError(
            f"singular score covariance: eigenvalue {int(np.argmin(lam)) + 1} of {model.A} is zero "
            f"(choose a smaller component count)"
        )
    t = model.project(xcs)
    d = ((t**2) / lam).sum(axis=1)
    e = xcs - t @ model.loadings.T
    q = (e**2).sum(axis=1)
    return MsnmResult(labels=labels or [str(i) for i in range(len(d))], d=d, q=q)


def control_limits(model: PcaModel, alpha: float, phase: str = PHASE_CALIBRATION) -> tuple[float, float | None]:
    """Upper control limits for D and Q at confidence `alpha`.

    The calibration-phase D limit is Beta-based and applies to the data the
    model was fitted on; the future phase uses the F form for new
    observations. The Q limit is Jackson-Mudholkar from the residual
    eigenvalue moments; it is None (with a warning) when the model leaves no
    residual variance.
    """
    if not (0.0 < alpha < 1.0):
        raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
    n, a = model.n_cal, model.A
    if n <= a + 1:
        raise DataError(f"control limits need n_cal > A + 1 (n_cal={n}, A={a})")

    if phase == PHASE_CALIBRATION:
        ucl_d = float((n - 1) ** 2 / n * stats.beta.ppf(alpha, a / 2.0, (n - a - 1) / 2.0))
    elif phase == PHASE_FUTURE:
        ucl_d = float(a * (n - 1) * (n + 1) / (n * (n - a)) * stats.f.ppf(alpha, a, n - a))
    else:
        raise ConfigError(f"unknown phase: {phase!r}")

    residual = model.eigenvalues[a:]
    theta1 = float(residual.sum())
    theta2 = float((residual**2).sum())
    theta3 = float((residual**3).sum())
    # eigenvalues past the data rank are floating-point dust, not variance
    if theta1 <= max(1e-30, 1e-12 * float(model.eigenvalues.sum())) or theta2 <= 0.0:
        warnings.warn("no residual variance beyond the model; Q limit undefined")
        return ucl_d, None
    h0 = 1.0 - 2.0 * theta1 * theta3 / (3.0 * theta2**2)
    z = stats.norm.ppf(alpha)
    inner = z * np.sqrt(2.0 * theta2 * h0**2) / theta1 + 1.0 + theta2 * h0 * (h0 - 1.0) / theta1**2
    if inner <= 0.0:
        warnings.warn("Jackson-Mudholkar base went non-positive; Q limit degenerate")
        return ucl_d, 0.0
    ucl_q = float(theta1 * inner ** (1.0 / h0))
    return ucl_d, ucl_q


def monitor(
    model: PcaModel,
    xcs: np.ndarray,
    labels: list[str],
    alpha: float = 0.99,
    phase: str = PHASE_CALIBRATION,
) -> MsnmResult:
    """Statistics plus limits in one step."""
    result = statistics(model, xcs, labels)
    result.ucl_d, result.ucl_q = control_limits(model, alpha, phase)
    result.alpha = alpha
    return result
