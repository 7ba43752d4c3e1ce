"""Linear-family engines: ordinary least squares, ridge, and lasso.

OLS and ridge are solved through orthogonal-decomposition least squares
(LAPACK gelsd), never the normal equations.  Rank-deficient designs fall
back to the minimum-norm solution with a warning.  Lasso uses cyclic
coordinate descent on standardized columns with exact soft-threshold zeros.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy import linalg

from ..core import NumericalError, ValidationError


class LinearModel:
    """Intercept plus coefficients; shared by ols, ridge, and lasso fits."""

    def __init__(self, intercept: float, coef: np.ndarray, kind: str):
        self.intercept = float(intercept)
        self.coef = np.asarray(coef, dtype=np.float64)
        self.kind = kind
        self.input_dim = self.coef.shape[0]

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ValidationError(
                f"predict expects shape (n, {self.input_dim}), got {x.shape}"
            )
        return self.intercept + x @ self.coef


class LassoModel(LinearModel):
    """Lasso adds the exact nonzero set used for selection baselines."""

    def __init__(self, intercept, coef, nonzero):
        super().__init__(intercept, coef, "lasso")
        self.nonzero = frozenset(int(j) for j in nonzero)


def fit_ols(x: np.ndarray, y: np.ndarray) -> LinearModel:
    n, p = x.shape
    design = np.column_stack([np.ones(n), x])
    coef, _, rank, _ = linalg.lstsq(design, y, lapack_driver="gelsd")
    if rank < design.shape[1]:
        warnings.warn(
            f"rank-deficient design (rank {rank} < {design.shape[1]}); "
            "using minimum-norm least-squares solution",
            stacklevel=2,
        )
    return LinearModel(coef[0], coef[1:], "ols")


def fit_ridge(x: np.ndarray, y: np.ndarray, penalty: float) -> LinearModel:
    """Ridge with an unpenalized intercept, via the augmented lstsq system."""
    n, p = x.shape
    x_mean = x.mean(axis=0)
    y_mean = y.mean()
    xc = x - x_mean
    if penalty == 0.0:
        return fit_ols(x, y)
    augmented = np.vstack([xc, np.sqrt(penalty) * np.eye(p)])
    target = np.concatenate([y - y_mean, np.zeros(p)])
    coef, _, _, _ = linalg.lstsq(augmented, target, lapack_driver="gelsd")
    return LinearModel(y_mean - x_mean @ coef, coef, "ridge")


def fit_lasso(
    x: np.ndarray,
    y: np.ndarray,
    penalty: float,
    tol: float = 1e-8,
    max_sweeps: int = 10000,
) -> LassoModel:
    """Cyclic coordinate descent on standardized columns.

    Objective (standardized scale): (1/2n) ||y - Xw||^2 + penalty * ||w||_1.
    Penalty 0 reduces to OLS; soft thresholding produces exact zeros.
    """
    n, p = x.shape
    x_mean = x.mean(axis=0)
    x_sd = x.std(axis=0)
    y_mean = y.mean()
    active_cols = np.flatnonzero(x_sd > 0)
    if active_cols.size == 0:
        return LassoModel(y_mean, np.zeros(p), [])
    xs = (x[:, active_cols] - x_mean[active_cols]) / x_sd[active_cols]
    yc = y - y_mean

    w = np.zeros(active_cols.size)
    residual = yc.copy()
    for _ in range(int(max_sweeps)):
        max_delta = 0.0
        for jj in range(active_cols.size):
            col = xs[:, jj]
            # partial residual correlation; columns have unit (1/n) norm
            rho = (col @ residual) / n + w[jj]
            new = np.sign(rho) * max(abs(rho) - penalty, 0.0)
            delta = new - w[jj]
            if delta != 0.0:
                residual -= delta * col
                w[jj] = new
                max_delta = max(max_delta, abs(delta))
        if max_delta < tol:
            break
    if not np.all(np.isfinite(w)):
        raise NumericalError("lasso coordinate descent diverged")

    coef = np.zeros(p)
    coef[active_cols] = w / x_sd[active_cols]
    intercept = y_mean - x_mean @ coef
    nonzero = [int(active_cols[jj]) for jj in range(active_cols.size) if w[jj] != 0.0]
    return LassoModel(intercept, coef, nonzero)
