"""Gaussian kernel ridge regression with a median-heuristic bandwidth."""

from __future__ import annotations

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist, pdist

from ..core import NumericalError, RngStream, ValidationError

_MEDIAN_SUBSAMPLE = 500


class KernelRidgeModel:
    def __init__(self, x_train, alpha, y_mean, bandwidth):
        self.x_train = x_train
        self.alpha = alpha
        self.y_mean = float(y_mean)
        self.bandwidth = float(bandwidth)
        self.input_dim = x_train.shape[1]

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ValidationError(
                f"predict expects shape (n, {self.input_dim}), got {x.shape}"
            )
        sq = cdist(x, self.x_train, "sqeuclidean")
        k = np.exp(-sq / (2.0 * self.bandwidth**2))
        return self.y_mean + k @ self.alpha


def median_bandwidth(x: np.ndarray, rng: RngStream) -> float:
    """Median pairwise distance on a deterministic subsample of at most 500 rows."""
    n = x.shape[0]
    if n > _MEDIAN_SUBSAMPLE:
        rows = rng.generator().choice(n, size=_MEDIAN_SUBSAMPLE, replace=False)
        x = x[np.sort(rows)]
    dists = pdist(x)
    med = float(np.median(dists)) if dists.size else 0.0
    # all-identical rows give a zero median; fall back to a unit scale
    return med if med > 0 else 1.0


def fit_kernel_ridge(
    x: np.ndarray,
    y: np.ndarray,
    penalty_scale: float,
    bandwidth: float,
    rng: RngStream,
) -> KernelRidgeModel:
    """Solve (K + penalty_scale * n * I) a = y - mean(y); predict mean(y) + K a."""
    n = x.shape[0]
    h = bandwidth if bandwidth > 0 else median_bandwidth(x, rng)
    sq = cdist(x, x, "sqeuclidean")
    k = np.exp(-sq / (2.0 * h**2))
    lam = penalty_scale * n
    try:
        factor = linalg.cho_factor(k + lam * np.eye(n))
        alpha = linalg.cho_solve(factor, y - y.mean())
    except linalg.LinAlgError as exc:
        raise NumericalError(f"kernel system not positive definite: {exc}") from exc
    return KernelRidgeModel(x.copy(), alpha, y.mean(), h)
