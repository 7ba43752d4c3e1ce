"""Feature-significance tests built on pluggable regressors.

Five tests share one Wald construction: form a per-sample summand, take its
mean and standard deviation, and studentize.

* gcm: product of the two nuisance residuals (X_j on X_-j, Y on X_-j);
  always two-sided because the estimand is signed.
* loco: squared-error difference between a refit without X_j and the full
  fit, oriented reduced minus full so the population mean is non-negative.
* dropout: same construction, but the "reduced" prediction is the full
  model evaluated with column j frozen at its sample mean (no refit).
* permutation: column j permuted instead of frozen, averaged per sample
  over b independent permutations of the trained model's input.
* lazy_vi: dropout input, but the network parameters take one closed-form
  ridge step toward the retrained optimum before evaluation.

Cross-fitting (k >= 2) applies to the two refitting tests (gcm, loco):
models are trained out of fold and residuals evaluated on the held-out
fold.  The default k = 1 uses in-sample residuals.

Degenerate summands (zero standard deviation) yield p = 1 with the
``degenerate`` flag set instead of a division error.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import linalg, stats

from .core import (
    DROPOUT,
    GCM,
    LAZY_VI,
    LOCO,
    METHODS,
    PERMUTATION,
    Dataset,
    FoldAssignment,
    ImportanceReport,
    NumericalError,
    RngStream,
    TestResult,
    ValidationError,
    config_digest,
    make_folds,
    selection_from_results,
)
from .regress import RegressorSpec, fit
from .regress.mlp import MlpModel

P_FLOOR = 1e-300


@dataclass(frozen=True)
class LazyConfig:
    """Ridge step for the lazy retraining test; lam=None means sqrt(n)."""

    lam: float | None = None
    solve_side: str = "auto"

    def __post_init__(self) -> None:
        if self.lam is not None and not self.lam > 0:
            raise ValidationError(f"lam must be strictly positive, got {self.lam}")
        if self.solve_side not in ("auto", "primal", "dual"):
            raise ValidationError(
                f"solve_side must be auto, primal, or dual; got {self.solve_side!r}"
            )


def _check_feature(data: Dataset, j: int) -> None:
    if not isinstance(j, (int, np.integer)):
        raise ValidationError(f"feature index must be an integer, got {j!r}")
    if not 0 <= j < data.p:
        raise ValidationError(f"feature index {j} out of range for p={data.p}")


def _wald(
    summand: np.ndarray,
    method: str,
    j: int,
    ddof: int,
    one_sided: bool,
) -> TestResult:
    n = summand.shape[0]
    estimate = float(summand.mean())
    if ddof == 0:
        sd = float(np.sqrt(max((summand * summand).mean() - estimate**2, 0.0)))
    else:
        sd = float(summand.std(ddof=ddof))
    if sd == 0.0:
        return TestResult(j, method, estimate, 0.0, 0.0, 1.0, n, degenerate=True)
    std_error = sd / np.sqrt(n)
    statistic = estimate / std_error
    if one_sided:
        p_value = float(stats.norm.sf(statistic))
    else:
        p_value = float(2.0 * stats.norm.sf(abs(statistic)))
    p_value = min(1.0, max(p_value, P_FLOOR))
    return TestResult(j, method, estimate, float(std_error), float(statistic), p_value, n)


def _oof_predictions(
    spec: RegressorSpec,
    x: np.ndarray,
    target: np.ndarray,
    folds: FoldAssignment | None,
    purpose: int,
) -> np.ndarray:
    """Predictions for every row; trained out-of-fold when folds has k >= 2."""
    if folds is None or folds.k == 1:
        model = fit(spec.reseeded(spec.seed.child(purpose).child(0)), x, target)
        return model.predict(x)
    preds = np.empty(x.shape[0])
    for fold in range(folds.k):
        train = folds.train_rows(fold)
        hold = folds.holdout_rows(fold)
        model = fit(spec.reseeded(spec.seed.child(purpose).child(fold)), x[train], target[train])
        preds[hold] = model.predict(x[hold])
    return preds


def _fit_full(spec: RegressorSpec, data: Dataset):
    """The shared in-sample full model (same seed path as _oof with k=1)."""
    return fit(spec.reseeded(spec.seed.child(1).child(0)), data.x, data.y)


# purpose tags keep every fit on its own derived seed stream
def _tag(j: int, slot: int) -> int:
    return 10 * j + slot


def gcm_test(
    data: Dataset, j: int, spec: RegressorSpec, folds: FoldAssignment | None = None
) -> TestResult:
    """Studentized mean of the product of the two nuisance residuals."""
    _check_feature(data, j)
    if data.p < 2:
        raise ValidationError("gcm needs at least 2 features (a nonempty X_-j)")
    x_minus = data.drop_column(j)
    xj = data.x[:, j]
    f_hat = _oof_predictions(spec, x_minus, xj, folds, _tag(j, 2))
    g_hat = _oof_predictions(spec, x_minus, data.y, folds, _tag(j, 3))
    products = (xj - f_hat) * (data.y - g_hat)
    return _wald(products, GCM, j, ddof=0, one_sided=False)


def loco_test(
    data: Dataset,
    j: int,
    spec: RegressorSpec,
    folds: FoldAssignment | None = None,
    one_sided: bool = False,
    full_predictions: np.ndarray | None = None,
) -> TestResult:
    """Refit without column j; test the mean squared-error increase."""
    _check_feature(data, j)
    if data.p < 2:
        raise ValidationError("loco needs at least 2 features (a nonempty reduced model)")
    if full_predictions is None:
        full_predictions = _oof_predictions(spec, data.x, data.y, folds, 1)
    reduced = _oof_predictions(spec, data.drop_column(j), data.y, folds, _tag(j, 4))
    d = (data.y - reduced) ** 2 - (data.y - full_predictions) ** 2
    return _wald(d, LOCO, j, ddof=1, one_sided=one_sided)


def dropout_test(
    data: Dataset,
    j: int,
    model,
    one_sided: bool = False,
    full_predictions: np.ndarray | None = None,
) -> TestResult:
    """Freeze column j at its sample mean inside the trained full model."""
    _check_feature(data, j)
    if full_predictions is None:
        full_predictions = model.predict(data.x)
    x_mod = data.x.copy()
    x_mod[:, j] = data.x[:, j].mean()
    d = (data.y - model.predict(x_mod)) ** 2 - (data.y - full_predictions) ** 2
    return _wald(d, DROPOUT, j, ddof=1, one_sided=one_sided)


def permutation_test(
    data: Dataset,
    j: int,
    model,
    b: int = 10,
    rng: RngStream | None = None,
    one_sided: bool = False,
    full_predictions: np.ndarray | None = None,
    permutations: Sequence[np.ndarray] | None = None,
) -> TestResult:
    """Permute column j; average the squared-error increase over b draws."""
    _check_feature(data, j)
    if data.n < 3:
        raise ValidationError("permutation_test needs at least 3 rows")
    if permutations is None:
        if b < 1:
            raise ValidationError(f"b must be at least 1, got {b}")
        if rng is None:
            raise ValidationError("permutation_test needs an rng when permutations are not given")
        gen = rng.generator()
        permutations = [gen.permutation(data.n) for _ in range(int(b))]
    else:
        permutations = [np.asarray(perm, dtype=np.int64) for perm in permutations]
        if not permutations:
            raise ValidationError("permutations must be nonempty")
        for perm in permutations:
            if perm.shape[0] != data.n:
                raise ValidationError("each permutation must cover all n rows")
    if full_predictions is None:
        full_predictions = model.predict(data.x)
    full_sq = (data.y - full_predictions) ** 2
    acc = np.zeros(data.n)
    x_mod = data.x.copy()
    for perm in permutations:
        x_mod[:, j] = data.x[perm, j]
        acc += (data.y - model.predict(x_mod)) ** 2
    d = acc / len(permutations) - full_sq
    return _wald(d, PERMUTATION, j, ddof=1, one_sided=one_sided)


def lazy_vi_test(
    data: Dataset,
    j: int,
    model: MlpModel,
    cfg: LazyConfig | None = None,
    one_sided: bool = False,
    full_predictions: np.ndarray | None = None,
) -> TestResult:
    """One closed-form ridge step toward the retrained network, then dropout.

    With column j frozen at its mean, solve

        delta = (Phi^T Phi + n lam I)^-1 Phi^T r

    where Phi holds per-row output gradients at the modified inputs and
    r is the residual of the trained network there.  The true network is
    then evaluated at theta + delta (not its linearization).  The dual
    n-by-n system is used when n < param_count.  lam -> infinity recovers
    the dropout test.
    """
    _check_feature(data, j)
    if not isinstance(model, MlpModel):
        raise ValidationError("lazy_vi_test requires a fitted mlp model")
    cfg = cfg if cfg is not None else LazyConfig()
    n = data.n
    lam = cfg.lam if cfg.lam is not None else float(np.sqrt(n))
    if full_predictions is None:
        full_predictions = model.predict(data.x)
    x_mod = data.x.copy()
    x_mod[:, j] = data.x[:, j].mean()
    residual = data.y - model.predict(x_mod)
    phi = model.param_gradient_matrix(x_mod)
    side = cfg.solve_side
    if side == "auto":
        side = "dual" if n < model.param_count else "primal"
    try:
        if side == "dual":
            gram = phi @ phi.T
            gram[np.diag_indices_from(gram)] += n * lam
            delta = phi.T @ linalg.solve(gram, residual, assume_a="pos")
        else:
            normal = phi.T @ phi
            normal[np.diag_indices_from(normal)] += n * lam
            delta = linalg.solve(normal, phi.T @ residual, assume_a="pos")
    except linalg.LinAlgError as exc:
        raise NumericalError(f"lazy ridge system could not be solved: {exc}") from exc
    shifted = model.with_params(model.params_vector() + delta)
    d = (data.y - shifted.predict(x_mod)) ** 2 - (data.y - full_predictions) ** 2
    return _wald(d, LAZY_VI, j, ddof=1, one_sided=one_sided)


def _normalize_methods(methods: Iterable[str]) -> list[str]:
    ordered: list[str] = []
    for m in methods:
        if m not in METHODS:
            raise ValidationError(f"unknown method {m!r}; expected one of {METHODS}")
        if m not in ordered:
            ordered.append(m)
    if not ordered:
        raise ValidationError("at least one method is required")
    return ordered


def select_features(
    data: Dataset,
    methods: Iterable[str],
    alpha: float,
    spec: RegressorSpec,
    rng: RngStream,
    crossfit_k: int = 1,
    permutation_rounds: int = 10,
    lazy: LazyConfig | None = None,
    one_sided: bool = False,
) -> ImportanceReport:
    """Run the requested tests for every feature and select by p < alpha.

    The full model is fitted once and shared by every method that evaluates
    it (loco at k=1, dropout, permutation, lazy_vi); its fit time is charged
    to each of those methods.  All randomness derives from ``rng``.
    """
    method_list = _normalize_methods(methods)
    if not 0.0 < alpha <= 1.0:
        raise ValidationError(f"alpha must lie in (0, 1], got {alpha}")
    if crossfit_k < 1 or crossfit_k > data.n:
        raise ValidationError(f"crossfit_k must lie in [1, n], got {crossfit_k}")
    if permutation_rounds < 1:
        raise ValidationError("permutation_rounds must be at least 1")
    if LAZY_VI in method_list and spec.kind != "mlp":
        raise ValidationError("lazy_vi requires the mlp regressor")

    eff_spec = spec.reseeded(rng.child(1))
    folds = make_folds(data.n, crossfit_k, rng.child(2)) if crossfit_k >= 2 else None
    perm_base = rng.child(3)

    model_methods = {LOCO, DROPOUT, PERMUTATION, LAZY_VI}
    needs_full_model = bool(model_methods.intersection(method_list)) and not (
        folds is not None and set(method_list).intersection(model_methods) == {LOCO}
    )
    full_model = None
    full_model_preds = None
    shared_fit_seconds = 0.0
    if needs_full_model:
        t0 = time.perf_counter()
        full_model = _fit_full(eff_spec, data)
        full_model_preds = full_model.predict(data.x)
        shared_fit_seconds = time.perf_counter() - t0
    loco_full_preds = full_model_preds
    if LOCO in method_list and folds is not None:
        t0 = time.perf_counter()
        loco_full_preds = _oof_predictions(eff_spec, data.x, data.y, folds, 1)
        shared_fit_seconds += time.perf_counter() - t0

    results: list[TestResult] = []
    wall: dict[str, float] = {}
    for method in method_list:
        t0 = time.perf_counter()
        for j in range(data.p):
            if method == GCM:
                res = gcm_test(data, j, eff_spec, folds)
            elif method == LOCO:
                res = loco_test(
                    data, j, eff_spec, folds, one_sided, full_predictions=loco_full_preds
                )
            elif method == DROPOUT:
                res = dropout_test(
                    data, j, full_model, one_sided, full_predictions=full_model_preds
                )
            elif method == PERMUTATION:
                res = permutation_test(
                    data,
                    j,
                    full_model,
                    b=permutation_rounds,
                    rng=perm_base.child(j),
                    one_sided=one_sided,
                    full_predictions=full_model_preds,
                )
            else:
                res = lazy_vi_test(
                    data, j, full_model, lazy, one_sided, full_predictions=full_model_preds
                )
            results.append(res)
        elapsed = time.perf_counter() - t0
        if method in model_methods:
            elapsed += shared_fit_seconds
        wall[method] = elapsed

    digest_payload: dict[str, object] = {
        "n": data.n,
        "p": data.p,
        "alpha": alpha,
        "methods": ",".join(method_list),
        "regressor.kind": spec.kind,
        "crossfit_k": crossfit_k,
        "permutation_rounds": permutation_rounds,
        "one_sided": one_sided,
        "seed": (rng.seed, rng.stream_id),
        "lazy.lam": None if lazy is None else lazy.lam,
        "lazy.solve_side": "auto" if lazy is None else lazy.solve_side,
    }
    for key, value in sorted(spec.params.items()):
        digest_payload[f"regressor.{spec.kind}.{key}"] = value

    return ImportanceReport(
        alpha=alpha,
        feature_names=data.feature_names,
        results=tuple(results),
        selected=selection_from_results(results, alpha),
        wall_time_seconds=wall,
        config_digest=config_digest(digest_payload),
    )
