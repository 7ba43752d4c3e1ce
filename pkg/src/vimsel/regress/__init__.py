"""Pluggable regression engines behind a single fit(spec, x, y) entry point.

Engines: ols, ridge, kernel_ridge, gbm, mlp, lasso.  Every engine fits an
intercept, validates input shapes, and is bit-reproducible given the same
RegressorSpec (seed included).  Hyperparameters arrive as a flat mapping
merged over per-kind defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from ..core import RngStream, ValidationError

KINDS = ("ols", "ridge", "kernel_ridge", "gbm", "mlp", "lasso")

DEFAULTS: dict[str, dict[str, float]] = {
    "ols": {},
    "ridge": {"penalty": 1e-3},
    # bandwidth 0.0 means "median heuristic"
    "kernel_ridge": {"penalty_scale": 1e-3, "bandwidth": 0.0},
    "gbm": {"rounds": 100, "depth": 2, "shrinkage": 0.1, "min_leaf": 1},
    "mlp": {"width": 50, "step": 1e-2, "epochs": 2000},
    "lasso": {"penalty": 0.1, "tol": 1e-8, "max_sweeps": 10000},
}

_POSITIVE = {"penalty_scale", "shrinkage", "step", "tol"}
_NON_NEGATIVE = {"penalty", "bandwidth"}
_COUNTS = {"rounds", "depth", "min_leaf", "width", "epochs", "max_sweeps"}


def _validated_params(kind: str, overrides: Mapping[str, float]) -> dict[str, float]:
    params = dict(DEFAULTS[kind])
    for key, value in overrides.items():
        if key not in params:
            raise ValidationError(f"engine {kind!r} has no hyperparameter {key!r}")
        params[key] = value
    for key, value in params.items():
        if key in _COUNTS:
            if int(value) != value or int(value) < 1:
                raise ValidationError(f"{kind}.{key} must be a positive integer, got {value!r}")
            params[key] = int(value)
        elif key in _POSITIVE:
            if not value > 0:
                raise ValidationError(f"{kind}.{key} must be strictly positive, got {value!r}")
            params[key] = float(value)
        elif key in _NON_NEGATIVE:
            if not value >= 0:
                raise ValidationError(f"{kind}.{key} must be non-negative, got {value!r}")
            params[key] = float(value)
    return params


@dataclass(frozen=True)
class RegressorSpec:
    """Which engine to fit, with what hyperparameters, under which seed."""

    kind: str
    params: Mapping[str, float] = field(default_factory=dict)
    seed: RngStream = RngStream(0)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValidationError(f"unknown regressor kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "params", _validated_params(self.kind, self.params))

    def reseeded(self, rng: RngStream) -> "RegressorSpec":
        return replace(self, seed=rng)


def _check_xy(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.ndim != 2:
        raise ValidationError(f"x must be 2-dimensional, got shape {x.shape}")
    if x.shape[0] != y.shape[0]:
        raise ValidationError(f"x has {x.shape[0]} rows, y has {y.shape[0]}")
    if x.shape[0] < 2:
        raise ValidationError("need at least 2 rows to fit")
    return x, y


def fit(spec: RegressorSpec, x: np.ndarray, y: np.ndarray):
    """Fit the engine named by spec; returns a model with .predict(x)."""
    x, y = _check_xy(x, y)
    kind = spec.kind
    if kind == "ols":
        from .linear import fit_ols

        return fit_ols(x, y)
    if kind == "ridge":
        from .linear import fit_ridge

        return fit_ridge(x, y, penalty=spec.params["penalty"])
    if kind == "lasso":
        from .linear import fit_lasso

        return fit_lasso(
            x,
            y,
            penalty=spec.params["penalty"],
            tol=spec.params["tol"],
            max_sweeps=spec.params["max_sweeps"],
        )
    if kind == "kernel_ridge":
        from .kernel import fit_kernel_ridge

        return fit_kernel_ridge(
            x,
            y,
            penalty_scale=spec.params["penalty_scale"],
            bandwidth=spec.params["bandwidth"],
            rng=spec.seed,
        )
    if kind == "gbm":
        from .boost import fit_gbm

        return fit_gbm(
            x,
            y,
            rounds=spec.params["rounds"],
            depth=spec.params["depth"],
            shrinkage=spec.params["shrinkage"],
            min_leaf=spec.params["min_leaf"],
        )
    if kind == "mlp":
        from .mlp import fit_mlp

        return fit_mlp(
            x,
            y,
            width=spec.params["width"],
            step=spec.params["step"],
            epochs=spec.params["epochs"],
            rng=spec.seed,
        )
    raise ValidationError(f"unknown regressor kind {kind!r}")
