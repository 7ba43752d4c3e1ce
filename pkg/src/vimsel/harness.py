"""Monte Carlo harness: replicated selection runs, metrics, and theory checks.

A plan bundles a scenario, the tests to run, a regressor, and a replicate
count.  Replicate r draws a fresh dataset and fresh test randomness from
``RngStream(base_seed.seed, base_seed.stream_id + r)``, so runs are
reproducible and embarrassingly parallel.  Aggregation is always in
replicate order regardless of the number of worker processes.

Besides selection metrics, the harness measures the empirical efficiency
ratio between two tests and compares it with the closed-form prediction
(``empirical_are``), and tabulates the correlation condition that decides
which test wins per additive component (``condition_b_report``).
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import (
    DROPOUT,
    GCM,
    LOCO,
    ImportanceReport,
    RngStream,
    ValidationError,
    VimselError,
)
from .methods import LazyConfig, _normalize_methods, select_features
from .regress import RegressorSpec, fit
from .scenarios import (
    LINEAR_A_BETA,
    SINGLE_INDEX_BETA,
    GeneratedData,
    ScenarioSpec,
    _draw_x,
    additive_components,
    generate,
)
from .theory import (
    ModelMoments,
    empirical_moments,
    are_nonlinear,
    condition_b_ratio,
    sigmoid_and_derivative,
    variance_formulas,
)

VARIANCE_METHODS = (GCM, LOCO, DROPOUT)

MIN_ARE_REPLICATES = 50
RECOMMENDED_ARE_REPLICATES = 200


@dataclass(frozen=True)
class ExperimentPlan:
    """One reproducible Monte Carlo experiment."""

    scenario: ScenarioSpec
    methods: tuple[str, ...]
    regressor: RegressorSpec
    replicates: int
    alpha: float
    base_seed: RngStream
    crossfit_k: int = 1
    permutation_rounds: int = 10
    lazy: LazyConfig | None = None
    one_sided: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "methods", tuple(_normalize_methods(self.methods)))
        if self.replicates < 1:
            raise ValidationError(f"replicates must be at least 1, got {self.replicates}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValidationError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.crossfit_k < 1:
            raise ValidationError("crossfit_k must be at least 1")
        if self.permutation_rounds < 1:
            raise ValidationError("permutation_rounds must be at least 1")

    def replicate_stream(self, r: int) -> RngStream:
        if not 0 <= r < self.replicates:
            raise ValidationError(f"replicate index {r} out of range")
        return RngStream(self.base_seed.seed, self.base_seed.stream_id + r)


@dataclass(frozen=True)
class MethodMetrics:
    """Selection quality of one method, aggregated over replicates.

    Rate pairs are (mean, sd) across replicates; per-feature tuples have
    one entry per column of the design.
    """

    method: str
    accuracy: tuple[float, float]
    precision: tuple[float, float]
    recall: tuple[float, float]
    specificity: tuple[float, float]
    f1: tuple[float, float]
    mean_p_values: tuple[float, ...]
    sd_p_values: tuple[float, ...]
    selection_rate: tuple[float, ...]
    mean_wall_seconds: float

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "accuracy": list(self.accuracy),
            "precision": list(self.precision),
            "recall": list(self.recall),
            "specificity": list(self.specificity),
            "f1": list(self.f1),
            "mean_p_values": list(self.mean_p_values),
            "sd_p_values": list(self.sd_p_values),
            "selection_rate": list(self.selection_rate),
            "mean_wall_seconds": self.mean_wall_seconds,
        }


@dataclass(frozen=True)
class MetricsSummary:
    """Aggregated outcome of ``run_plan``."""

    plan: ExperimentPlan
    active_set: frozenset[int]
    per_method: Mapping[str, MethodMetrics]
    baseline_f1: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "per_method", dict(self.per_method))

    def to_dict(self) -> dict:
        plan = self.plan
        return {
            "scenario": {
                "kind": plan.scenario.kind,
                "n": plan.scenario.n,
                "p": plan.scenario.p,
                "noise_sd": plan.scenario.noise_sd,
                "replication": plan.scenario.replication,
            },
            "regressor": plan.regressor.kind,
            "methods": list(plan.methods),
            "replicates": plan.replicates,
            "alpha": plan.alpha,
            "crossfit_k": plan.crossfit_k,
            "seed": [plan.base_seed.seed, plan.base_seed.stream_id],
            "active_set": sorted(self.active_set),
            "baseline_f1": self.baseline_f1,
            "per_method": {m: v.to_dict() for m, v in self.per_method.items()},
        }


def _rates(selected: frozenset[int], active: frozenset[int], p: int) -> tuple[float, ...]:
    tp = len(selected & active)
    fp = len(selected - active)
    fn = len(active - selected)
    tn = p - tp - fp - fn
    accuracy = (tp + tn) / p
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    specificity = tn / (tn + fp) if tn + fp else 1.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    return accuracy, precision, recall, specificity, f1


def coin_flip_f1(active_count: int, p: int) -> float:
    """Expected F1 of including each feature independently with prob 1/2.

    Plugging the expected confusion counts (TP = a/2, FP = (p-a)/2,
    FN = a/2) into the F1 formula gives 2a / (2a + p); the number to beat.
    """
    if not 0 <= active_count <= p:
        raise ValidationError("active_count must lie in [0, p]")
    if p < 1:
        raise ValidationError("p must be positive")
    if active_count == 0:
        return 0.0
    return 2.0 * active_count / (2.0 * active_count + p)


def run_replicate(plan: ExperimentPlan, r: int) -> tuple[ImportanceReport, GeneratedData]:
    """Draw replicate r's dataset and run the planned tests on it."""
    stream = plan.replicate_stream(r)
    drawn = generate(replace(plan.scenario, seed=stream.child(0)))
    report = select_features(
        drawn.data,
        plan.methods,
        plan.alpha,
        plan.regressor,
        rng=stream.child(1),
        crossfit_k=plan.crossfit_k,
        permutation_rounds=plan.permutation_rounds,
        lazy=plan.lazy,
        one_sided=plan.one_sided,
    )
    return report, drawn


def _replicate_payload(plan: ExperimentPlan, r: int):
    report, drawn = run_replicate(plan, r)
    return report, drawn.active_set


def _mean_sd(values: np.ndarray, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    mean = values.mean(axis=axis)
    if values.shape[axis] < 2:
        sd = np.zeros_like(mean, dtype=np.float64)
    else:
        sd = values.std(axis=axis, ddof=1)
    return mean, sd


def run_plan(plan: ExperimentPlan, threads: int = 1) -> MetricsSummary:
    """Execute every replicate and aggregate in replicate order.

    threads > 1 fans replicates out over worker processes; results are
    still reduced in index order, so the summary does not depend on
    scheduling.  The first failing replicate aborts the run with its index.
    """
    if threads < 1:
        raise ValidationError("threads must be at least 1")
    payloads: list[tuple[ImportanceReport, frozenset[int]]] = []
    if threads == 1 or plan.replicates == 1:
        for r in range(plan.replicates):
            try:
                payloads.append(_replicate_payload(plan, r))
            except VimselError as exc:
                raise type(exc)(f"replicate {r} failed: {exc}") from exc
    else:
        with ProcessPoolExecutor(max_workers=min(threads, plan.replicates)) as pool:
            futures = [pool.submit(_replicate_payload, plan, r) for r in range(plan.replicates)]
            for r, fut in enumerate(futures):
                try:
                    payloads.append(fut.result())
                except VimselError as exc:
                    raise type(exc)(f"replicate {r} failed: {exc}") from exc

    p = plan.scenario.p
    active = payloads[0][1]
    per_method: dict[str, MethodMetrics] = {}
    for method in plan.methods:
        rates = np.empty((plan.replicates, 5))
        pvals = np.empty((plan.replicates, p))
        picks = np.zeros((plan.replicates, p))
        wall = np.empty(plan.replicates)
        for r, (report, rep_active) in enumerate(payloads):
            selected = report.selected.get(method, frozenset())
            rates[r] = _rates(selected, rep_active, p)
            by_feature = report.p_values(method)
            pvals[r] = [by_feature[j] for j in range(p)]
            picks[r, sorted(selected)] = 1.0
            wall[r] = report.wall_time_seconds[method]
        rate_mean, rate_sd = _mean_sd(rates)
        p_mean, p_sd = _mean_sd(pvals)
        per_method[method] = MethodMetrics(
            method=method,
            accuracy=(float(rate_mean[0]), float(rate_sd[0])),
            precision=(float(rate_mean[1]), float(rate_sd[1])),
            recall=(float(rate_mean[2]), float(rate_sd[2])),
            specificity=(float(rate_mean[3]), float(rate_sd[3])),
            f1=(float(rate_mean[4]), float(rate_sd[4])),
            mean_p_values=tuple(float(v) for v in p_mean),
            sd_p_values=tuple(float(v) for v in p_sd),
            selection_rate=tuple(float(v) for v in picks.mean(axis=0)),
            mean_wall_seconds=float(wall.mean()),
        )
    return MetricsSummary(
        plan=plan,
        active_set=active,
        per_method=per_method,
        baseline_f1=coin_flip_f1(len(active), p),
    )


@dataclass(frozen=True)
class AreComparison:
    """Monte Carlo efficiency ratio of two tests at one feature.

    ``empirical_are`` is (sd_b / mean_b)^2 / (sd_a / mean_a)^2 over
    replicate estimates; values above 1 mean method_a detects smaller
    signals.  ``degenerate`` marks a mean statistically indistinguishable
    from zero, in which case the ratio is reported as nan.  ``theory_are``
    is None when no closed form covers the pair, and ``relative_gap`` is
    (empirical - theory) / theory when both sides exist.
    """

    method_a: str
    method_b: str
    feature_index: int
    theory_are: float | None
    empirical_are: float
    relative_gap: float | None
    replicate_count: int
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "method_a": self.method_a,
            "method_b": self.method_b,
            "feature_index": self.feature_index,
            "theory_are": self.theory_are,
            "empirical_are": self.empirical_are,
            "relative_gap": self.relative_gap,
            "replicate_count": self.replicate_count,
            "degenerate": self.degenerate,
        }


def _statistically_zero(mean: float, sd: float, replicates: int) -> bool:
    # mean below twice its own Monte Carlo standard error counts as zero
    return abs(mean) <= max(1e-12, 2.0 * sd / np.sqrt(replicates))


def _eta_prime_at_mean(spec: ScenarioSpec) -> float:
    if spec.link == "sigmoid":
        _, deriv = sigmoid_and_derivative(0.0)
        return deriv
    if spec.link == "none":
        return 1.0
    # gaussian bump: d/dz exp(-z^2) = 0 at the index mean
    return 0.0


def _residualize(target: np.ndarray, others: np.ndarray) -> np.ndarray:
    design = np.column_stack([np.ones(others.shape[0]), others])
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    return target - design @ coef


def _scenario_feature_theory(
    spec: ScenarioSpec, j: int
) -> tuple[str, dict[str, float], Callable | None] | None:
    """(model name, params, component) for feature j, or None when the
    closed forms do not cover the scenario/feature."""
    if spec.kind in ("linear_a", "additive_b", "even_quadratic"):
        components = additive_components(spec)
        component = components[j]
        if component is None:
            return None
        if spec.kind == "linear_a":
            tile = spec.tile_width
            pattern = (
                spec.coefficients
                if spec.coefficients is not None
                else LINEAR_A_BETA + (0.0,) * (tile - 8)
            )
            return "linear", {"beta_j": float(pattern[j % tile])}, component
        return "nonlinear_additive", {}, component
    if spec.kind == "single_index_d":
        tile = spec.tile_width
        pattern = (
            spec.coefficients
            if spec.coefficients is not None
            else SINGLE_INDEX_BETA + (0.0,) * (tile - 8)
        )
        beta_j = float(pattern[j % tile])
        if beta_j == 0:
            return None
        return "single_index", {"beta_j": beta_j, "eta_prime": _eta_prime_at_mean(spec)}, None
    return None


def theoretical_are(
    spec: ScenarioSpec,
    feature_index: int,
    method_a: str,
    method_b: str,
    draws: int = 10**6,
    rng: RngStream | None = None,
) -> float | None:
    """Closed-form efficiency ratio, with moments from a large design draw.

    Returns None when either method lacks an asymptotic variance formula,
    the feature is nuisance, or the scenario has no additive closed form.
    The draw residualizes X_j on the other columns by least squares, which
    matches the population conditional mean for Gaussian designs.
    """
    if method_a not in VARIANCE_METHODS or method_b not in VARIANCE_METHODS:
        return None
    if not 0 <= feature_index < spec.p:
        raise ValidationError(f"feature index {feature_index} out of range for p={spec.p}")
    if draws < 1000:
        raise ValidationError("draws must be at least 1000 for stable moments")
    info = _scenario_feature_theory(spec, feature_index)
    if info is None:
        return None
    model, params, component = info
    if model == "single_index" and params["eta_prime"] == 0:
        return None

    moment_stream = rng if rng is not None else spec.seed.child(9)
    gen = moment_stream.generator()
    big = replace(spec, n=int(draws), seed=moment_stream)
    x = _draw_x(big, gen)
    xj = x[:, feature_index]
    others = np.delete(x, feature_index, axis=1)
    xt = _residualize(xj, others)
    if component is not None and model != "linear":
        f_vals = np.asarray(component(xj), dtype=np.float64)
        ft = _residualize(f_vals, others)
    else:
        f_vals = None
        ft = np.zeros_like(xt)
    noise_var = spec.noise_sd**2
    m = empirical_moments(xt, ft, noise_var)
    if DROPOUT in (method_a, method_b):
        xh = xj - xj.mean()
        xh2 = xh * xh
        m = replace(m, e_xh2=float(xh2.mean()), var_xh2=float(xh2.var()))
        if model == "nonlinear_additive":
            centered = f_vals - f_vals.mean()
            params = dict(params)
            params["e_f"] = float(f_vals.mean())
            params["f_at_mean"] = float(component(np.float64(xj.mean())))
            params["var_f"] = float(centered.var())
            params["fourth_central"] = float((centered**4).mean())

    ratios: list[float] = []
    for method in (method_a, method_b):
        mean, variance = variance_formulas(model, method, params, m)
        if abs(mean) <= 1e-12 * max(1.0, np.sqrt(variance)):
            return None
        ratios.append(variance / mean**2)
    return float(ratios[1] / ratios[0])


def empirical_are(
    plan: ExperimentPlan,
    method_a: str,
    method_b: str,
    j: int,
    include_theory: bool = True,
    theory_draws: int = 10**6,
    threads: int = 1,
) -> AreComparison:
    """Replicate the two tests and compare their detection boundaries.

    Needs at least 50 replicates for the ratio of Monte Carlo moments to
    mean anything; below 200 a warning is emitted.  Identical methods
    return exactly 1 without resampling.
    """
    if not 0 <= j < plan.scenario.p:
        raise ValidationError(f"feature index {j} out of range for p={plan.scenario.p}")
    methods = _normalize_methods([method_a, method_b])
    if plan.replicates < MIN_ARE_REPLICATES:
        raise ValidationError(
            f"efficiency comparison needs at least {MIN_ARE_REPLICATES} replicates, "
            f"got {plan.replicates}"
        )
    if plan.replicates < RECOMMENDED_ARE_REPLICATES:
        warnings.warn(
            f"{plan.replicates} replicates give a noisy efficiency ratio; "
            f"{RECOMMENDED_ARE_REPLICATES}+ recommended",
            stacklevel=2,
        )
    if threads < 1:
        raise ValidationError("threads must be at least 1")
    theory = (
        theoretical_are(plan.scenario, j, method_a, method_b, theory_draws)
        if include_theory
        else None
    )

    def _compare(empirical: float, degenerate: bool) -> AreComparison:
        gap = None
        if theory is not None and not degenerate and theory != 0:
            gap = float((empirical - theory) / theory)
        return AreComparison(
            method_a, method_b, j, theory, empirical, gap, plan.replicates, degenerate
        )

    if method_a == method_b:
        return _compare(1.0, False)

    sub_plan = replace(plan, methods=tuple(methods))
    if threads == 1 or sub_plan.replicates == 1:
        reports = []
        for r in range(sub_plan.replicates):
            try:
                reports.append(run_replicate(sub_plan, r)[0])
            except VimselError as exc:
                raise type(exc)(f"replicate {r} failed: {exc}") from exc
    else:
        with ProcessPoolExecutor(max_workers=min(threads, sub_plan.replicates)) as pool:
            futures = [
                pool.submit(run_replicate, sub_plan, r) for r in range(sub_plan.replicates)
            ]
            reports = []
            for r, fut in enumerate(futures):
                try:
                    reports.append(fut.result()[0])
                except VimselError as exc:
                    raise type(exc)(f"replicate {r} failed: {exc}") from exc
    estimates: dict[str, list[float]] = {method_a: [], method_b: []}
    for report in reports:
        for res in report.results:
            if res.feature_index == j and res.method in estimates:
                estimates[res.method].append(res.estimate)

    stats: dict[str, tuple[float, float]] = {}
    degenerate = False
    for method, vals in estimates.items():
        arr = np.asarray(vals)
        mean = float(arr.mean())
        sd = float(arr.std(ddof=1))
        stats[method] = (mean, sd)
        if sd == 0.0 or _statistically_zero(mean, sd, plan.replicates):
            degenerate = True
    if degenerate:
        return _compare(float("nan"), True)
    mean_a, sd_a = stats[method_a]
    mean_b, sd_b = stats[method_b]
    return _compare(float((sd_b / mean_b) ** 2 / (sd_a / mean_a) ** 2), False)


@dataclass(frozen=True)
class ConditionBRow:
    """Correlation-condition diagnostics for one feature.

    Plug-in ratio and efficiency ratio are means over replicates; agreement
    is the fraction of replicates where both land on the same side of 1.
    Nuisance features carry None throughout.
    """

    feature_index: int
    feature_name: str
    ratio: float | None
    ratio_sd: float | None
    are: float | None
    agreement: float | None

    def to_dict(self) -> dict:
        return {
            "feature_index": self.feature_index,
            "feature_name": self.feature_name,
            "ratio": self.ratio,
            "ratio_sd": self.ratio_sd,
            "are": self.are,
            "agreement": self.agreement,
        }


def condition_b_report(plan: ExperimentPlan) -> tuple[ConditionBRow, ...]:
    """Estimate the per-component correlation condition with the plan's regressor.

    For each replicate the full model's residual variance stands in for the
    noise level, and X_j and the true component f_j(X_j) are residualized on
    X_-j with the same regressor before the moment plug-in.  Requires a
    scenario with a per-feature additive decomposition.
    """
    components = additive_components(plan.scenario)
    p = plan.scenario.p
    ratios = np.full((plan.replicates, p), np.nan)
    ares = np.full((plan.replicates, p), np.nan)
    for r in range(plan.replicates):
        stream = plan.replicate_stream(r)
        drawn = generate(replace(plan.scenario, seed=stream.child(0)))
        data = drawn.data
        fit_base = stream.child(1)
        full = fit(plan.regressor.reseeded(fit_base.child(1)), data.x, data.y)
        noise_var = float(np.mean((data.y - full.predict(data.x)) ** 2))
        for j in range(p):
            component = components[j]
            if component is None:
                continue
            others = data.drop_column(j)
            xj = data.x[:, j]
            xj_model = fit(plan.regressor.reseeded(fit_base.child(10 * j + 2)), others, xj)
            xt = xj - xj_model.predict(others)
            f_vals = np.asarray(component(xj), dtype=np.float64)
            f_model = fit(plan.regressor.reseeded(fit_base.child(10 * j + 5)), others, f_vals)
            ft = f_vals - f_model.predict(others)
            m = empirical_moments(xt, ft, noise_var)
            ratios[r, j] = condition_b_ratio(m)
            try:
                ares[r, j] = are_nonlinear(m, data.n).are
            except ValidationError:
                ares[r, j] = np.nan

    rows: list[ConditionBRow] = []
    names = tuple(f"X{j + 1}" for j in range(p))
    for j in range(p):
        if components[j] is None:
            rows.append(ConditionBRow(j, names[j], None, None, None, None))
            continue
        rj = ratios[:, j]
        aj = ares[:, j]
        both = np.isfinite(rj) & np.isfinite(aj)
        agreement = float(np.mean((rj[both] > 1) == (aj[both] > 1))) if both.any() else None
        sd = float(rj.std(ddof=1)) if plan.replicates > 1 else 0.0
        are_mean = float(np.nanmean(aj)) if np.isfinite(aj).any() else None
        rows.append(
            ConditionBRow(j, names[j], float(rj.mean()), sd, are_mean, agreement)
        )
    return tuple(rows)
