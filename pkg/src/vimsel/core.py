"""Shared data containers, seeding, and fold assignment.

Everything downstream (regressors, tests, the simulation harness) builds on
the types here.  Seeding is explicit: an :class:`RngStream` names a
deterministic generator by ``(seed, stream_id)``, and derived streams are
obtained by hashing, never by wall clock.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np


class VimselError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(VimselError, ValueError):
    """A caller-supplied argument or record violates its contract."""


class DataError(VimselError, ValueError):
    """Input data (files, arrays) is malformed or unusable."""


class NumericalError(VimselError, ArithmeticError):
    """A numerical routine left its supported regime (overflow, divergence)."""


GCM = "gcm"
LOCO = "loco"
DROPOUT = "dropout"
PERMUTATION = "permutation"
LAZY_VI = "lazy_vi"

METHODS = (GCM, LOCO, DROPOUT, PERMUTATION, LAZY_VI)

_MASK64 = (1 << 64) - 1


def _mix64(z: int) -> int:
    # splitmix64 finalizer; spreads small ids over the full 64-bit space so
    # derived streams never collide with hand-picked ones.
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class RngStream:
    """Deterministic generator handle: same (seed, stream_id), same draws."""

    seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ValidationError(f"seed must be a non-negative integer, got {self.seed!r}")
        if not isinstance(self.stream_id, (int, np.integer)) or self.stream_id < 0:
            raise ValidationError(f"stream_id must be a non-negative integer, got {self.stream_id!r}")

    def generator(self) -> np.random.Generator:
        """Fresh generator; repeated calls restart the stream."""
        ss = np.random.SeedSequence((int(self.seed), int(self.stream_id)))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, tag: int) -> "RngStream":
        """Derived independent stream, reproducible from (seed, stream_id, tag)."""
        if tag < 0:
            raise ValidationError("child tag must be non-negative")
        # splitmix64 stream keyed by the parent: state + (i+1)*gamma, then
        # finalize.  Asymmetric in (stream_id, tag), so sibling windows of
        # different parents cannot line up.
        state = _mix64(int(self.stream_id) + 1)
        derived = _mix64((state + (int(tag) + 1) * 0x9E3779B97F4A7C15) & _MASK64)
        return RngStream(self.seed, derived)


@dataclass(frozen=True)
class Dataset:
    """Design matrix plus response, validated and stored as float64."""

    x: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        x = np.ascontiguousarray(np.asarray(self.x, dtype=np.float64))
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if x.ndim != 2:
            raise ValidationError(f"x must be 2-dimensional, got shape {np.shape(self.x)}")
        n, p = x.shape
        if n < 2:
            raise ValidationError(f"need at least 2 rows, got {n}")
        if p < 1:
            raise ValidationError("need at least 1 feature column")
        if y.shape[0] != n:
            raise ValidationError(f"y has {y.shape[0]} rows but x has {n}")
        if not np.all(np.isfinite(x)):
            raise DataError("x contains non-finite values")
        if not np.all(np.isfinite(y)):
            raise DataError("y contains non-finite values")
        names = tuple(self.feature_names) if self.feature_names else tuple(f"X{j + 1}" for j in range(p))
        if len(names) != p:
            raise ValidationError(f"{len(names)} feature names for {p} columns")
        if len(set(names)) != p:
            raise ValidationError("feature names must be unique")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def drop_column(self, j: int) -> np.ndarray:
        """Design with column j removed (view-free copy)."""
        if not 0 <= j < self.p:
            raise ValidationError(f"feature index {j} out of range for p={self.p}")
        return np.ascontiguousarray(np.delete(self.x, j, axis=1))


@dataclass(frozen=True)
class FoldAssignment:
    """Row-to-fold map for cross-fitting; fold sizes differ by at most one."""

    assignment: np.ndarray
    k: int

    def __post_init__(self) -> None:
        a = np.asarray(self.assignment, dtype=np.int64)
        if a.ndim != 1:
            raise ValidationError("assignment must be 1-dimensional")
        if self.k < 1:
            raise ValidationError("k must be at least 1")
        if a.size and (a.min() < 0 or a.max() >= self.k):
            raise ValidationError("fold labels must lie in [0, k)")
        counts = np.bincount(a, minlength=self.k)
        if counts.size and counts.max() - counts.min() > 1:
            raise ValidationError("fold sizes must differ by at most one")
        object.__setattr__(self, "assignment", a)

    def holdout_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)


def make_folds(n: int, k: int, rng: RngStream) -> FoldAssignment:
    """Balanced random folds; a pure function of (n, k, seed, stream_id)."""
    if n < 1:
        raise ValidationError("n must be positive")
    if not 1 <= k <= n:
        raise ValidationError(f"k must lie in [1, n]; got k={k}, n={n}")
    if k == 1:
        return FoldAssignment(np.zeros(n, dtype=np.int64), 1)
    perm = rng.generator().permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    assignment[perm] = np.arange(n) % k
    return FoldAssignment(assignment, k)


@dataclass(frozen=True)
class TestResult:
    """Outcome of one (feature, method) significance test."""

    feature_index: int
    method: str
    estimate: float
    std_error: float
    statistic: float
    p_value: float
    n_used: int
    degenerate: bool = False

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}")
        if not 0.0 <= self.p_value <= 1.0:
            raise ValidationError(f"p_value {self.p_value} outside [0, 1]")
        if self.std_error < 0:
            raise ValidationError("std_error must be non-negative")
        if self.n_used < 1:
            raise ValidationError("n_used must be positive")


@dataclass(frozen=True)
class ImportanceReport:
    """Per-feature test results plus the induced selection sets."""

    alpha: float
    feature_names: tuple[str, ...]
    results: tuple[TestResult, ...]
    selected: Mapping[str, frozenset[int]]
    wall_time_seconds: Mapping[str, float]
    config_digest: str

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValidationError(f"alpha must lie in (0, 1], got {self.alpha}")
        object.__setattr__(self, "results", tuple(self.results))
        object.__setattr__(self, "selected", dict(self.selected))
        object.__setattr__(self, "wall_time_seconds", dict(self.wall_time_seconds))
        for res in self.results:
            if not 0 <= res.feature_index < len(self.feature_names):
                raise ValidationError(f"result index {res.feature_index} out of range")

    def methods(self) -> tuple[str, ...]:
        seen: list[str] = []
        for res in self.results:
            if res.method not in seen:
                seen.append(res.method)
        return tuple(seen)

    def p_values(self, method: str) -> dict[int, float]:
        return {r.feature_index: r.p_value for r in self.results if r.method == method}


def selection_from_results(results: Iterable[TestResult], alpha: float) -> dict[str, frozenset[int]]:
    """Selection rule shared everywhere: pick feature j iff p_j < alpha."""
    out: dict[str, set[int]] = {}
    for res in results:
        out.setdefault(res.method, set())
        if res.p_value < alpha:
            out[res.method].add(res.feature_index)
    return {m: frozenset(s) for m, s in out.items()}


def config_digest(payload: Mapping[str, object]) -> str:
    """Stable sha256 over sorted key=value lines of a flat config mapping."""
    lines = [f"{key}={payload[key]!r}" for key in sorted(payload)]
    return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()
