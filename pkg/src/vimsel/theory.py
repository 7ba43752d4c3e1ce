"""Closed-form asymptotics for the residual-product and error-difference tests.

Setting: Y = f(X) + eps with Var(eps) = noise_var, and a target feature j
with conditional residual Xt = X_j - E[X_j | X_-j].  For additive signals
write ft = f_j(X_j) - E[f_j(X_j) | X_-j].  All quantities here are population
moments of (Xt, ft); nothing in this module touches fitted models.

Provided:

* detection boundaries (minimal coefficient scale detectable at level n)
  for the residual-product test (gcm) and the refit error-difference test
  (loco), in linear, nonlinear-additive, and single-index models;
* their asymptotic relative efficiency are = (cv_loco / cv_gcm)^2, where
  values above 1 mean the residual-product test detects smaller signals;
* the correlation condition deciding which test wins for a nonlinear
  additive component, as the ratio LHS / RHS (ratio > 1 iff are > 1);
* asymptotic mean and variance of each estimator's per-sample summand,
  covering the dropout variant as well;
* plug-in moments from samples, standard normal even moments, and a
  numerically safe sigmoid with derivative for single-index links.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import ValidationError

_REL_SLACK = 1e-9

MODELS = ("linear", "nonlinear_additive", "single_index")
VARIANCE_METHODS = ("gcm", "loco", "dropout")


def _close_enough(lhs: float, rhs: float) -> bool:
    scale = max(abs(lhs), abs(rhs), 1.0)
    return lhs <= rhs + _REL_SLACK * scale


@dataclass(frozen=True)
class ModelMoments:
    """Population (or plug-in) moments of the residual pair (Xt, ft).

    e_xh2 / var_xh2 are the *unconditional* second-moment analogues
    (X_j - E X_j), used only by the dropout formulas; they may be omitted.
    """

    noise_var: float
    e_xt2: float
    var_xt2: float
    e_ft2: float
    e_ft4: float
    e_xt_ft: float
    e_xt2_ft2: float
    e_xh2: float | None = None
    var_xh2: float | None = None

    def __post_init__(self) -> None:
        if self.noise_var < 0:
            raise ValidationError(f"noise_var must be non-negative, got {self.noise_var}")
        if not self.e_xt2 > 0:
            raise ValidationError(f"e_xt2 must be strictly positive, got {self.e_xt2}")
        if self.var_xt2 < 0:
            raise ValidationError("var_xt2 must be non-negative")
        if self.e_ft2 < 0 or self.e_ft4 < 0 or self.e_xt2_ft2 < 0:
            raise ValidationError("squared moments must be non-negative")
        if self.e_ft4 > 1e300 or not math.isfinite(self.e_ft4):
            raise ValidationError(f"e_ft4 is too large to be usable, got {self.e_ft4}")
        if not _close_enough(self.e_ft2**2, self.e_ft4):
            raise ValidationError(
                f"e_ft4 ({self.e_ft4}) must dominate e_ft2^2 ({self.e_ft2**2})"
            )
        if not _close_enough(self.e_xt_ft**2, self.e_xt2 * self.e_ft2):
            raise ValidationError("e_xt_ft^2 exceeds e_xt2 * e_ft2 (Cauchy-Schwarz)")
        if (self.e_xh2 is None) != (self.var_xh2 is None):
            raise ValidationError("e_xh2 and var_xh2 must be supplied together")
        if self.e_xh2 is not None:
            if self.var_xh2 < 0:
                raise ValidationError("var_xh2 must be non-negative")
            if not _close_enough(self.e_xt2, self.e_xh2):
                raise ValidationError(
                    "e_xh2 (unconditional) cannot be smaller than e_xt2 (conditional)"
                )

    @property
    def var_xt_ft(self) -> float:
        return self.e_xt2_ft2 - self.e_xt_ft**2

    @property
    def var_ft2(self) -> float:
        return self.e_ft4 - self.e_ft2**2


@dataclass(frozen=True)
class CvPair:
    """Detection boundaries of the two tests and their efficiency ratio."""

    cv_gcm: float
    cv_loco: float
    are: float
    sample_size: int

    def __post_init__(self) -> None:
        if self.cv_gcm < 0 or self.cv_loco < 0:
            raise ValidationError("detection boundaries must be non-negative")
        if self.sample_size < 1:
            raise ValidationError("sample_size must be at least 1")
        if self.cv_gcm > 0:
            ratio = (self.cv_loco / self.cv_gcm) ** 2
            scale = max(ratio, self.are, 1.0)
            if abs(ratio - self.are) > 1e-9 * scale:
                raise ValidationError("are must equal (cv_loco / cv_gcm)^2")


def _check_n(n: int) -> float:
    if n < 1:
        raise ValidationError(f"sample size must be at least 1, got {n}")
    return float(n)


def cv_linear(beta_j: float, m: ModelMoments, n: int) -> CvPair:
    """Detection boundaries for Y = beta . X + eps at sample size n.

    cv_gcm  = n^{-1/2} sqrt(b^2 Var Xt^2 + s^2 E Xt^2) / (|b| E Xt^2)
    cv_loco = n^{-1/2} sqrt(b^4 Var Xt^2 + 4 s^2 b^2 E Xt^2) / (b^2 E Xt^2)
    and are is their squared ratio, always > 1 when s^2 > 0.
    """
    nf = _check_n(n)
    if beta_j == 0:
        raise ValidationError("beta_j must be nonzero")
    b2 = beta_j**2
    s2 = m.noise_var
    gcm_var = b2 * m.var_xt2 + s2 * m.e_xt2
    loco_var = b2**2 * m.var_xt2 + 4.0 * s2 * b2 * m.e_xt2
    cv_gcm = np.sqrt(gcm_var) / (abs(beta_j) * m.e_xt2 * np.sqrt(nf))
    cv_loco = np.sqrt(loco_var) / (b2 * m.e_xt2 * np.sqrt(nf))
    are = (b2 * m.var_xt2 + 4.0 * s2 * m.e_xt2) / (b2 * m.var_xt2 + s2 * m.e_xt2)
    return CvPair(float(cv_gcm), float(cv_loco), float(are), int(n))


def are_example1(beta1: float, rho: float, sigma_x: float, sigma_eps: float) -> float:
    """Efficiency ratio in the two-feature Gaussian linear model.

    X1, X2 are mean-zero normals with common scale sigma_x and correlation
    rho, so E Xt^2 = (1 - rho^2) sigma_x^2 and Var Xt^2 = 2 (E Xt^2)^2.
    Substituting into the linear formulas and cancelling gives

        are = (4 r + t) / (r + t),  r = sigma_eps^2 / beta1^2,
                                    t = 2 (1 - rho^2) sigma_x^2,

    which tends to 4 as noise dominates and to 1 as noise vanishes.
    """
    if beta1 == 0:
        raise ValidationError("beta1 must be nonzero")
    if not abs(rho) < 1:
        raise ValidationError(f"|rho| must be below 1, got {rho}")
    if not sigma_x > 0:
        raise ValidationError("sigma_x must be strictly positive")
    if sigma_eps < 0:
        raise ValidationError("sigma_eps must be non-negative")
    r = sigma_eps**2 / beta1**2
    t = 2.0 * (1.0 - rho**2) * sigma_x**2
    return (4.0 * r + t) / (r + t)


def condition_b_ratio(m: ModelMoments) -> float:
    """Correlation condition for a nonlinear additive component, as a ratio.

    LHS = Corr^2(Xt, ft); RHS mixes fourth moments with the noise level.
    The residual-product test needs a smaller signal exactly when the ratio
    exceeds 1; purely even components have LHS = 0 and always lose.
    """
    if m.e_ft2 == 0:
        raise ValidationError("e_ft2 must be nonzero for the correlation condition")
    s2 = m.noise_var
    lhs = m.e_xt_ft**2 / (m.e_xt2 * m.e_ft2)
    rhs = (m.e_xt2_ft2 * m.e_ft2 / m.e_xt2 + s2 * m.e_ft2) / (m.e_ft4 + 4.0 * s2 * m.e_ft2)
    return float(lhs / rhs)


def are_nonlinear(m: ModelMoments, n: int) -> CvPair:
    """Detection boundaries for one additive component f_j.

    cv_gcm  = n^{-1/2} sqrt(Var(Xt ft) + s^2 E Xt^2) / |E(Xt ft)|
    cv_loco = n^{-1/2} sqrt(Var ft^2 + 4 s^2 E ft^2) / E ft^2
    sign(are - 1) always agrees with sign(condition_b_ratio - 1).
    """
    nf = _check_n(n)
    if m.e_xt_ft == 0:
        raise ValidationError(
            "e_xt_ft is zero (even component): the residual-product boundary is undefined"
        )
    if m.e_ft2 == 0:
        raise ValidationError("e_ft2 must be nonzero")
    s2 = m.noise_var
    gcm_var = m.var_xt_ft + s2 * m.e_xt2
    loco_var = m.var_ft2 + 4.0 * s2 * m.e_ft2
    cv_gcm = np.sqrt(gcm_var) / (abs(m.e_xt_ft) * np.sqrt(nf))
    cv_loco = np.sqrt(loco_var) / (m.e_ft2 * np.sqrt(nf))
    are = (loco_var * m.e_xt_ft**2) / (gcm_var * m.e_ft2**2)
    return CvPair(float(cv_gcm), float(cv_loco), float(are), int(n))


def cv_single_index(beta_j: float, eta_prime: float, m: ModelMoments, n: int) -> CvPair:
    """Linear boundaries scaled by the link slope eta' at the index mean.

    With eta' = 1 this reduces exactly to cv_linear.
    """
    nf = _check_n(n)
    if beta_j == 0:
        raise ValidationError("beta_j must be nonzero")
    if eta_prime <= 0:
        raise ValidationError("eta_prime must be positive (monotone link)")
    b2 = beta_j**2
    g2 = eta_prime**2
    s2 = m.noise_var
    gcm_var = g2 * b2 * m.var_xt2 + s2 * m.e_xt2
    loco_var = g2**2 * b2**2 * m.var_xt2 + 4.0 * s2 * g2 * b2 * m.e_xt2
    cv_gcm = np.sqrt(gcm_var) / (abs(beta_j * eta_prime) * m.e_xt2 * np.sqrt(nf))
    cv_loco = np.sqrt(loco_var) / (g2 * b2 * m.e_xt2 * np.sqrt(nf))
    are = (g2 * b2 * m.var_xt2 + 4.0 * s2 * m.e_xt2) / (g2 * b2 * m.var_xt2 + s2 * m.e_xt2)
    return CvPair(float(cv_gcm), float(cv_loco), float(are), int(n))


def normal_even_moment(t: int) -> float:
    """E Z^{2t} = (2t - 1)!! for Z standard normal, exact for t up to 15."""
    if not isinstance(t, (int, np.integer)):
        raise ValidationError(f"t must be an integer, got {t!r}")
    if t < 0 or t > 15:
        raise ValidationError(f"t must lie in 0..15 (exact double range), got {t}")
    out = 1
    for k in range(2, 2 * t, 2):
        out *= k + 1
    return float(out)


def sigmoid_and_derivative(x):
    """(sigma(x), sigma'(x)) computed without overflow for |x| up to 700."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(np.abs(x) > 700):
        raise ValidationError("|x| above 700 overflows exp; rescale the index")
    value = np.empty_like(x)
    positive = x >= 0
    value[positive] = 1.0 / (1.0 + np.exp(-x[positive]))
    expx = np.exp(x[~positive])
    value[~positive] = expx / (1.0 + expx)
    deriv = value * (1.0 - value)
    if x.ndim == 0:
        return float(value), float(deriv)
    return value, deriv


def variance_formulas(
    model: str, method: str, params: Mapping[str, float], m: ModelMoments
) -> tuple[float, float]:
    """Asymptotic (mean, variance) of the estimator's per-sample summand.

    model in {linear, nonlinear_additive, single_index}; method in
    {gcm, loco, dropout}.  `params` carries beta_j (linear, single_index),
    eta_prime (single_index), and for the nonlinear dropout case the
    component summaries e_f, f_at_mean, var_f, fourth_central.
    """
    if model not in MODELS:
        raise ValidationError(f"unknown model {model!r}; expected one of {MODELS}")
    if method not in VARIANCE_METHODS:
        raise ValidationError(
            f"unknown method {method!r}; expected one of {VARIANCE_METHODS}"
        )
    s2 = m.noise_var

    def _need(key: str) -> float:
        if key not in params:
            raise ValidationError(f"{model}/{method} requires params[{key!r}]")
        return float(params[key])

    def _need_unconditional() -> tuple[float, float]:
        if m.e_xh2 is None:
            raise ValidationError("dropout formulas need e_xh2/var_xh2 in the moments")
        return m.e_xh2, m.var_xh2

    if model == "linear":
        b = _need("beta_j")
        if method == "gcm":
            return b * m.e_xt2, b**2 * m.var_xt2 + s2 * m.e_xt2
        if method == "loco":
            return b**2 * m.e_xt2, b**4 * m.var_xt2 + 4.0 * s2 * b**2 * m.e_xt2
        e_xh2, var_xh2 = _need_unconditional()
        return b**2 * e_xh2, b**4 * var_xh2 + 4.0 * s2 * b**2 * e_xh2

    if model == "nonlinear_additive":
        if method == "gcm":
            return m.e_xt_ft, m.var_xt_ft + s2 * m.e_xt2
        if method == "loco":
            return m.e_ft2, m.var_ft2 + 4.0 * s2 * m.e_ft2
        # dropout keeps the gap between E f and f at the imputed mean
        gap = _need("e_f") - _need("f_at_mean")
        var_f = _need("var_f")
        fourth = _need("fourth_central")
        if var_f < 0 or fourth < 0:
            raise ValidationError("var_f and fourth_central must be non-negative")
        mean = var_f + gap**2
        variance = (fourth - var_f**2) + 4.0 * s2 * var_f + 4.0 * gap**2 * (var_f + s2)
        return mean, variance

    b = _need("beta_j")
    g = _need("eta_prime")
    if method == "gcm":
        return g * b * m.e_xt2, g**2 * b**2 * m.var_xt2 + s2 * m.e_xt2
    if method == "loco":
        return (
            g**2 * b**2 * m.e_xt2,
            g**4 * b**4 * m.var_xt2 + 4.0 * s2 * g**2 * b**2 * m.e_xt2,
        )
    e_xh2, var_xh2 = _need_unconditional()
    return (
        g**2 * b**2 * e_xh2,
        g**4 * b**4 * var_xh2 + 4.0 * s2 * g**2 * b**2 * e_xh2,
    )


def empirical_moments(
    xt_samples: Sequence[float],
    ft_samples: Sequence[float],
    noise_var: float,
    unconditional: bool = False,
) -> ModelMoments:
    """Plug-in ModelMoments from residual samples.

    Residualized samples are already centered by construction, so raw
    second and fourth moments are used.  With unconditional=True the
    xt samples are taken as X_j - E X_j and also fill e_xh2 / var_xh2.
    """
    xt = np.asarray(xt_samples, dtype=np.float64).ravel()
    ft = np.asarray(ft_samples, dtype=np.float64).ravel()
    if xt.shape[0] != ft.shape[0]:
        raise ValidationError(
            f"sample lengths differ: {xt.shape[0]} vs {ft.shape[0]}"
        )
    if xt.shape[0] < 2:
        raise ValidationError("need at least 2 samples")
    if noise_var < 0:
        raise ValidationError("noise_var must be non-negative")
    xt2 = xt * xt
    ft2 = ft * ft
    e_xt2 = float(xt2.mean())
    if e_xt2 == 0:
        raise ValidationError("xt samples are identically zero")
    e_xh2 = e_xt2 if unconditional else None
    var_xh2 = float(xt2.var()) if unconditional else None
    return ModelMoments(
        noise_var=float(noise_var),
        e_xt2=e_xt2,
        var_xt2=float(xt2.var()),
        e_ft2=float(ft2.mean()),
        e_ft4=float((ft2 * ft2).mean()),
        e_xt_ft=float((xt * ft).mean()),
        e_xt2_ft2=float((xt2 * ft2).mean()),
        e_xh2=e_xh2,
        var_xh2=var_xh2,
    )
