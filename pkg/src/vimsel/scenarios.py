"""Deterministic synthetic scenario generators.

Four benchmark families over X ~ N(0, Sigma) with unit variances:

* linear_a         Y = 0.01 X1 + 0.1 X2 + X3 + X4 + 1.5 X5 + 2 X6 + 3 X7 + 4 X8,
                   Corr(X3, X4) = 0.5
* additive_b       Y = 2 X1^2 + 2 cos(4 X2) + sin X3 + exp(X4/3) + 3 X5 + X6^3
                   + 5 X7 + max(0, X8)
* interaction_c    Y = 2 sin X1 + log(|X2| + 1) + 3 X1 X2 + cos(X3 + X4) + X5^3
                   + X6 X7 X8
* single_index_d   Y = link(X . beta), beta = (6, 5, 4, 3, 2, 1, 0.5, 0.1, 0, ...),
                   Corr(X1, X2) = 0.5, link sigmoid / gaussian_bump / none

plus the pathological even_quadratic (Y = X1^2 + eps, where Cov(X1, Y) = 0)
and a custom hook.  Noise is N(0, noise_sd^2), default 0.1.  Replication r
tiles the active pattern r times across p columns for high-dimensional runs.
Generation is a pure function of the spec (seed included).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np

from .core import Dataset, RngStream, ValidationError
from .theory import sigmoid_and_derivative

KINDS = ("linear_a", "additive_b", "interaction_c", "single_index_d", "even_quadratic", "custom")
LINKS = ("sigmoid", "gaussian_bump", "none")

ALIASES = {
    "a": "linear_a",
    "b": "additive_b",
    "c": "interaction_c",
    "d": "single_index_d",
}

LINEAR_A_BETA = (0.01, 0.1, 1.0, 1.0, 1.5, 2.0, 3.0, 4.0)
SINGLE_INDEX_BETA = (6.0, 5.0, 4.0, 3.0, 2.0, 1.0, 0.5, 0.1)
CANONICAL_CORRELATIONS = {
    "linear_a": ((2, 3, 0.5),),
    "single_index_d": ((0, 1, 0.5),),
}


def _sq2(x):
    return 2.0 * x * x


def _cos4x2(x):
    return 2.0 * np.cos(4.0 * x)


def _sin(x):
    return np.sin(x)


def _exp_third(x):
    return np.exp(x / 3.0)


def _cube(x):
    return x**3


def _relu(x):
    return np.maximum(x, 0.0)


def _scaled_identity(scale, x):
    return scale * x


def _square(x):
    return x * x


B_COMPONENTS: tuple[Callable, ...] = (
    _sq2,
    _cos4x2,
    _sin,
    _exp_third,
    partial(_scaled_identity, 3.0),
    _cube,
    partial(_scaled_identity, 5.0),
    _relu,
)


@dataclass(frozen=True)
class ScenarioSpec:
    """Everything needed to draw one dataset, including the seed."""

    kind: str
    n: int
    p: int
    seed: RngStream
    noise_sd: float = 0.1
    correlations: tuple[tuple[int, int, float], ...] = ()
    link: str = "sigmoid"
    replication: int = 1
    coefficients: tuple[float, ...] | None = None
    custom_signal: Callable[[np.ndarray], np.ndarray] | None = None
    custom_active: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValidationError(f"unknown scenario kind {self.kind!r}; expected one of {KINDS}")
        if self.n < 10:
            raise ValidationError(f"n must be at least 10, got {self.n}")
        if self.p < 1:
            raise ValidationError("p must be positive")
        if self.noise_sd < 0:
            raise ValidationError("noise_sd must be non-negative")
        if self.replication < 1:
            raise ValidationError("replication must be at least 1")
        if self.p % self.replication != 0:
            raise ValidationError(
                f"p={self.p} must be divisible by replication={self.replication}"
            )
        if self.link not in LINKS:
            raise ValidationError(f"unknown link {self.link!r}; expected one of {LINKS}")
        tile = self.p // self.replication
        correlations = tuple((int(i), int(j), float(r)) for i, j, r in self.correlations)
        for i, j, r in correlations:
            if not (0 <= i < tile and 0 <= j < tile):
                raise ValidationError(
                    f"correlation ({i}, {j}) outside the tile width {tile}"
                )
            if i == j:
                raise ValidationError("correlation triple must name two distinct features")
            if not abs(r) < 1:
                raise ValidationError(f"|rho| must be below 1, got {r}")
        object.__setattr__(self, "correlations", correlations)
        if self.coefficients is not None:
            coefs = tuple(float(c) for c in self.coefficients)
            if self.kind not in ("linear_a", "single_index_d"):
                raise ValidationError("coefficients override applies only to linear/index kinds")
            if len(coefs) != tile:
                raise ValidationError(
                    f"coefficients length {len(coefs)} must equal tile width {tile}"
                )
            object.__setattr__(self, "coefficients", coefs)
        if self.kind == "custom":
            if self.custom_signal is None or self.custom_active is None:
                raise ValidationError("custom scenarios need custom_signal and custom_active")
            active = tuple(int(a) for a in self.custom_active)
            if any(not 0 <= a < self.p for a in active):
                raise ValidationError("custom_active indices out of range")
            object.__setattr__(self, "custom_active", active)
        elif self.kind != "even_quadratic" and tile < 8 and self.coefficients is None:
            raise ValidationError(
                f"kind {self.kind!r} needs a tile width of at least 8 (p >= {8 * self.replication})"
            )

    @property
    def tile_width(self) -> int:
        return self.p // self.replication


@dataclass(frozen=True)
class GeneratedData:
    """One drawn dataset with its ground-truth active set."""

    data: Dataset
    active_set: frozenset[int]
    spec: ScenarioSpec
    signal: np.ndarray = field(repr=False, default=None)

    def __post_init__(self) -> None:
        p = self.data.p
        if any(not 0 <= a < p for a in self.active_set):
            raise ValidationError("active_set indices out of range")


def default_spec(kind: str, n: int, seed: RngStream, **overrides) -> ScenarioSpec:
    """Canonical spec for a named kind: p=20 (5 for even_quadratic), the
    paper-matched correlations, noise_sd=0.1."""
    kind = ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise ValidationError(f"unknown scenario kind {kind!r}")
    fields: dict = {"kind": kind, "n": n, "seed": seed}
    replication = int(overrides.get("replication", 1))
    fields["p"] = 5 if kind == "even_quadratic" else 20 * replication
    if kind in CANONICAL_CORRELATIONS:
        fields["correlations"] = CANONICAL_CORRELATIONS[kind]
    fields.update(overrides)
    return ScenarioSpec(**fields)


def _tile_covariance(spec: ScenarioSpec) -> np.ndarray:
    tile = spec.tile_width
    sigma = np.eye(tile)
    for i, j, r in spec.correlations:
        sigma[i, j] = sigma[j, i] = r
    return sigma


def _draw_x(spec: ScenarioSpec, gen: np.random.Generator) -> np.ndarray:
    z = gen.standard_normal((spec.n, spec.p))
    if not spec.correlations:
        return z
    sigma = _tile_covariance(spec)
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise ValidationError(
            f"correlation matrix is not positive definite: {exc}"
        ) from exc
    tile = spec.tile_width
    x = np.empty_like(z)
    for start in range(0, spec.p, tile):
        x[:, start : start + tile] = z[:, start : start + tile] @ chol.T
    return x


def _tiled_coefficients(spec: ScenarioSpec, base: tuple[float, ...]) -> np.ndarray:
    tile = spec.tile_width
    pattern = spec.coefficients if spec.coefficients is not None else base + (0.0,) * (tile - len(base))
    return np.tile(np.asarray(pattern, dtype=np.float64), spec.replication)


def _signal_and_active(spec: ScenarioSpec, x: np.ndarray) -> tuple[np.ndarray, frozenset[int]]:
    n, p = x.shape
    tile = spec.tile_width
    if spec.kind == "linear_a":
        beta = _tiled_coefficients(spec, LINEAR_A_BETA)
        return x @ beta, frozenset(np.flatnonzero(beta).tolist())
    if spec.kind == "additive_b":
        signal = np.zeros(n)
        active: set[int] = set()
        for start in range(0, p, tile):
            for k, component in enumerate(B_COMPONENTS):
                signal += component(x[:, start + k])
                active.add(start + k)
        return signal, frozenset(active)
    if spec.kind == "interaction_c":
        signal = np.zeros(n)
        active = set()
        for start in range(0, p, tile):
            t = x[:, start : start + tile]
            signal += (
                2.0 * np.sin(t[:, 0])
                + np.log(np.abs(t[:, 1]) + 1.0)
                + 3.0 * t[:, 0] * t[:, 1]
                + np.cos(t[:, 2] + t[:, 3])
                + t[:, 4] ** 3
                + t[:, 5] * t[:, 6] * t[:, 7]
            )
            active.update(range(start, start + 8))
        return signal, frozenset(active)
    if spec.kind == "single_index_d":
        beta = _tiled_coefficients(spec, SINGLE_INDEX_BETA)
        index = x @ beta
        if spec.link == "sigmoid":
            signal, _ = sigmoid_and_derivative(np.clip(index, -700, 700))
        elif spec.link == "gaussian_bump":
            signal = np.exp(-(index**2))
        else:
            signal = index
        return signal, frozenset(np.flatnonzero(beta).tolist())
    if spec.kind == "even_quadratic":
        return x[:, 0] ** 2, frozenset({0})
    signal = np.asarray(spec.custom_signal(x), dtype=np.float64).ravel()
    if signal.shape[0] != n:
        raise ValidationError("custom_signal must return one value per row")
    return signal, frozenset(spec.custom_active)


def generate(spec: ScenarioSpec) -> GeneratedData:
    """Draw X, the scenario signal, and noise; bit-identical for equal specs."""
    gen = spec.seed.generator()
    x = _draw_x(spec, gen)
    noise = spec.noise_sd * gen.standard_normal(spec.n)
    signal, active = _signal_and_active(spec, x)
    y = signal + noise
    data = Dataset(x=x, y=y, feature_names=tuple(f"X{j + 1}" for j in range(spec.p)))
    return GeneratedData(data=data, active_set=active, spec=spec, signal=signal)


def even_quadratic(n: int, noise_sd: float, seed: RngStream) -> GeneratedData:
    """Y = X1^2 + eps with four independent nuisance columns (p = 5)."""
    return generate(ScenarioSpec(kind="even_quadratic", n=n, p=5, seed=seed, noise_sd=noise_sd))


def additive_components(spec: ScenarioSpec) -> tuple[Callable | None, ...]:
    """Per-feature component functions for additive kinds; None for nuisance.

    Defined for additive_b, linear_a, and even_quadratic (and custom specs
    that tabulate their own components is out of scope here).
    """
    tile = spec.tile_width
    per_tile: list[Callable | None]
    if spec.kind == "additive_b":
        per_tile = list(B_COMPONENTS) + [None] * (tile - len(B_COMPONENTS))
    elif spec.kind == "linear_a":
        pattern = (
            spec.coefficients
            if spec.coefficients is not None
            else LINEAR_A_BETA + (0.0,) * (tile - len(LINEAR_A_BETA))
        )
        per_tile = [partial(_scaled_identity, b) if b != 0 else None for b in pattern]
    elif spec.kind == "even_quadratic":
        return (_square,) + (None,) * (spec.p - 1)
    else:
        raise ValidationError(
            f"scenario kind {spec.kind!r} has no per-feature additive decomposition"
        )
    return tuple(per_tile * spec.replication)
