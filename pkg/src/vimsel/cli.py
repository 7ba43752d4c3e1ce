"""Command-line entry point.

Subcommands:

* select     run significance tests on a CSV dataset
* simulate   draw a synthetic scenario; dump it or run the Monte Carlo harness
* are        closed-form detection boundaries and efficiency ratio
* moments    plug-in moment record from residual samples in a CSV
* are-check  Monte Carlo efficiency ratio vs the closed form
* report     re-read and convert a saved report

stdout carries machine-readable JSON only; diagnostics go to stderr.  For a
fixed argv + config file + seed the stdout bytes are identical run to run,
which is why wall-clock timings are reported on stderr and in ``--out``
files but never on stdout.  Exit codes: 0 success, 1 usage error, 2
data/numeric error.

A config file holds flat ``key = value`` lines with dotted keys; explicit
flags win over config entries.  Recognized keys: ``regressor.kind``,
``regressor.<kind>.<param>`` (for example ``regressor.gbm.rounds = 200``),
``lazy.lam``, ``lazy.solve_side``, ``permutation.rounds``.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from .core import (
    METHODS,
    DataError,
    NumericalError,
    RngStream,
    ValidationError,
)
from .harness import (
    AreComparison,
    ExperimentPlan,
    empirical_are,
    run_plan,
)
from .io import load_csv, read_report, report_to_dict, write_csv, write_report
from .methods import LazyConfig, select_features
from .regress import DEFAULTS, KINDS, RegressorSpec
from .scenarios import ALIASES, LINKS, ScenarioSpec, default_spec, generate
from .theory import (
    ModelMoments,
    are_example1,
    are_nonlinear,
    condition_b_ratio,
    cv_linear,
    cv_single_index,
    empirical_moments,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; this CLI reserves 2 for data errors,
    # so usage failures are rerouted through _UsageError instead.
    def error(self, message):
        raise _UsageError(f"{self.format_usage().rstrip()}\n{self.prog}: error: {message}")


def _emit(payload) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True))
    sys.stdout.write("\n")


def _note(message: str) -> None:
    print(message, file=sys.stderr)


def _parse_scalar(text: str):
    text = text.strip()
    lowered = text.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def load_config(path: str | Path) -> dict[str, object]:
    """Flat dotted-key config: one ``key = value`` per line, # comments."""
    out: dict[str, object] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"{path}: line {lineno} is not 'key = value': {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise DataError(f"{path}: line {lineno} has an empty key")
        out[key] = _parse_scalar(value)
    return out


def _regressor_from(kind_flag: str | None, config: dict[str, object]) -> RegressorSpec:
    kind = kind_flag if kind_flag is not None else config.get("regressor.kind", "ols")
    if kind not in KINDS:
        raise ValidationError(f"unknown regressor kind {kind!r}; expected one of {KINDS}")
    prefix = f"regressor.{kind}."
    params = {k[len(prefix) :]: v for k, v in config.items() if k.startswith(prefix)}
    return RegressorSpec(kind=str(kind), params=params)


def _lazy_from(args, config: dict[str, object]) -> LazyConfig | None:
    lam = getattr(args, "lazy_lam", None)
    side = getattr(args, "lazy_side", None)
    if lam is None:
        lam = config.get("lazy.lam")
    if side is None:
        side = config.get("lazy.solve_side")
    if lam is None and side is None:
        return None
    return LazyConfig(
        lam=None if lam is None else float(lam),
        solve_side="auto" if side is None else str(side),
    )


def _permutation_rounds(args, config: dict[str, object]) -> int:
    flag = getattr(args, "permutation_rounds", None)
    if flag is not None:
        return flag
    value = config.get("permutation.rounds", 10)
    if not isinstance(value, int):
        raise ValidationError(f"permutation.rounds must be an integer, got {value!r}")
    return value


def _methods_list(text: str) -> list[str]:
    methods = [m.strip() for m in text.split(",") if m.strip()]
    if not methods:
        raise ValidationError("at least one method is required")
    return methods


def _scenario_kind(name: str) -> str:
    return ALIASES.get(name, name)


def _add_seed(parser) -> None:
    parser.add_argument(
        "--seed", type=int, required=True, help="base RNG seed (required; no wall-clock seeding)"
    )


def _add_threads(parser) -> None:
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker processes for replicates (default: logical cores)",
    )


def _threads(args) -> int:
    value = getattr(args, "threads", None)
    if value is None:
        value = os.cpu_count() or 1
    if value < 1:
        raise ValidationError("--threads must be at least 1")
    return value


def _build_parser() -> _Parser:
    parser = _Parser(prog="vimsel", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    sel = sub.add_parser("select", help="run significance tests on a CSV dataset")
    sel.add_argument("--input", required=True, help="CSV with feature columns plus the target")
    sel.add_argument("--target", default="y", help="target column name (default: y)")
    sel.add_argument(
        "--methods",
        required=True,
        help=f"comma-separated subset of {','.join(METHODS)}",
    )
    sel.add_argument("--alpha", type=float, default=0.05, help="selection level (default: 0.05)")
    sel.add_argument("--regressor", choices=KINDS, default=None, help="engine (default: ols)")
    sel.add_argument("--crossfit", type=int, default=1, help="cross-fitting folds K (default: 1)")
    sel.add_argument(
        "--permutation-rounds", type=int, default=None, help="permutations per feature (default: 10)"
    )
    sel.add_argument(
        "--one-sided",
        action="store_true",
        help="upper-tail p-values for the error-difference tests",
    )
    sel.add_argument("--lazy-lam", type=float, default=None, help="ridge step size (default: sqrt(n))")
    sel.add_argument(
        "--lazy-side", choices=("auto", "primal", "dual"), default=None, help="lazy solver side"
    )
    sel.add_argument("--config", default=None, help="flat dotted-key config file")
    sel.add_argument("--out", default=None, help="write the full report (with timings) here")
    sel.add_argument("--format", choices=("json", "csv"), default="json", help="--out format")
    _add_seed(sel)

    sim = sub.add_parser("simulate", help="draw a scenario; dump it or run the harness")
    sim.add_argument(
        "--scenario",
        required=True,
        help="a|b|c|d, linear_a, additive_b, interaction_c, single_index_d, even_quadratic",
    )
    sim.add_argument("--n", type=int, required=True, help="rows per replicate")
    sim.add_argument("--p", type=int, default=None, help="columns (default: 20 per tile, 5 for even_quadratic)")
    sim.add_argument("--noise-sd", type=float, default=0.1, help="noise standard deviation")
    sim.add_argument("--replication", type=int, default=1, help="tile the active pattern this many times")
    sim.add_argument("--link", choices=LINKS, default="sigmoid", help="single-index link")
    sim.add_argument("--dump", default=None, help="write the drawn dataset CSV (+ sidecar active-set JSON)")
    sim.add_argument("--methods", default=None, help="harness mode: comma-separated test list")
    sim.add_argument("--regressor", choices=KINDS, default=None, help="engine (default: ols)")
    sim.add_argument("--replicates", type=int, default=100, help="Monte Carlo replicates (default: 100)")
    sim.add_argument("--alpha", type=float, default=0.05, help="selection level (default: 0.05)")
    sim.add_argument("--crossfit", type=int, default=1, help="cross-fitting folds K (default: 1)")
    sim.add_argument(
        "--permutation-rounds", type=int, default=None, help="permutations per feature (default: 10)"
    )
    sim.add_argument("--one-sided", action="store_true", help="upper-tail p-values")
    sim.add_argument("--lazy-lam", type=float, default=None, help="ridge step size")
    sim.add_argument("--lazy-side", choices=("auto", "primal", "dual"), default=None)
    sim.add_argument("--config", default=None, help="flat dotted-key config file")
    sim.add_argument("--out", default=None, help="write the metrics summary JSON here")
    sim.add_argument(
        "--emit-plot-csv",
        default=None,
        help="tidy long-format CSV: feature, method, mean_p, sd_p",
    )
    _add_seed(sim)
    _add_threads(sim)

    are = sub.add_parser("are", help="closed-form detection boundaries")
    are.add_argument(
        "--model",
        required=True,
        choices=("linear", "single_index", "nonlinear_additive"),
    )
    are.add_argument("--beta", type=float, default=None, help="target coefficient")
    are.add_argument("--rho", type=float, default=0.0, help="Corr(X_j, other) in the Gaussian pair")
    are.add_argument("--sigma-x", type=float, default=1.0, help="feature scale")
    are.add_argument("--sigma-eps", type=float, default=1.0, help="noise standard deviation")
    are.add_argument("--eta-prime", type=float, default=None, help="link slope (single_index)")
    are.add_argument("--n", type=int, default=1000, help="sample size for the boundaries")
    are.add_argument("--noise-var", type=float, default=None, help="noise variance (nonlinear)")
    are.add_argument("--e-xt2", type=float, default=None)
    are.add_argument("--var-xt2", type=float, default=None)
    are.add_argument("--e-ft2", type=float, default=None)
    are.add_argument("--e-ft4", type=float, default=None)
    are.add_argument("--e-xt-ft", type=float, default=None)
    are.add_argument("--e-xt2-ft2", type=float, default=None)

    mom = sub.add_parser("moments", help="plug-in moments from residual samples")
    mom.add_argument("--input", required=True, help="CSV with xt and ft columns")
    mom.add_argument("--xt-column", default="xt")
    mom.add_argument("--ft-column", default="ft")
    mom.add_argument("--noise-var", type=float, default=0.0)
    mom.add_argument(
        "--unconditional",
        action="store_true",
        help="treat xt as X_j - E X_j and fill the unconditional fields",
    )

    chk = sub.add_parser("are-check", help="Monte Carlo efficiency ratio vs theory")
    chk.add_argument(
        "--example1",
        action="store_true",
        help="two-feature Gaussian linear benchmark with a closed-form target",
    )
    chk.add_argument("--beta", type=float, default=1.0)
    chk.add_argument("--rho", type=float, default=0.5)
    chk.add_argument("--sigma-x", type=float, default=1.0)
    chk.add_argument("--sigma-eps", type=float, default=1.0)
    chk.add_argument("--scenario", default=None, help="generic mode: scenario kind")
    chk.add_argument("--feature", type=int, default=0, help="target feature index")
    chk.add_argument("--method-a", default="gcm", choices=METHODS)
    chk.add_argument("--method-b", default="loco", choices=METHODS)
    chk.add_argument("--n", type=int, default=2000)
    chk.add_argument("--p", type=int, default=None)
    chk.add_argument("--noise-sd", type=float, default=0.1)
    chk.add_argument("--replicates", type=int, default=500)
    chk.add_argument("--alpha", type=float, default=0.05)
    chk.add_argument("--regressor", choices=KINDS, default=None, help="engine (default: ols)")
    chk.add_argument("--config", default=None, help="flat dotted-key config file")
    _add_seed(chk)
    _add_threads(chk)

    rep = sub.add_parser("report", help="re-read and convert a saved report")
    rep.add_argument("--input", required=True, help="report JSON produced by select")
    rep.add_argument("--out", default=None, help="rewrite the report here")
    rep.add_argument("--format", choices=("json", "csv"), default="json", help="--out format")

    return parser


def _cmd_select(args) -> int:
    config = load_config(args.config) if args.config else {}
    data = load_csv(args.input, target=args.target)
    spec = _regressor_from(args.regressor, config)
    report = select_features(
        data,
        _methods_list(args.methods),
        args.alpha,
        spec,
        rng=RngStream(args.seed),
        crossfit_k=args.crossfit,
        permutation_rounds=_permutation_rounds(args, config),
        lazy=_lazy_from(args, config),
        one_sided=args.one_sided,
    )
    if args.out:
        write_report(report, args.out, fmt=args.format)
        _note(f"report written to {args.out}")
    for method, seconds in report.wall_time_seconds.items():
        _note(f"timing: {method} {seconds:.3f}s")
    payload = report_to_dict(report)
    # stdout must be byte-identical across reruns; timings stay on stderr
    payload["wall_time_seconds"] = {}
    payload["feature_names"] = list(report.feature_names)
    payload["selected"] = {m: sorted(s) for m, s in report.selected.items()}
    _emit(payload)
    return EXIT_OK


def _scenario_from_args(args, seed: RngStream) -> ScenarioSpec:
    kind = _scenario_kind(args.scenario)
    overrides: dict[str, object] = {
        "noise_sd": args.noise_sd,
        "replication": args.replication,
        "link": args.link,
    }
    if args.p is not None:
        overrides["p"] = args.p
    return default_spec(kind, args.n, seed, **overrides)


def _cmd_simulate(args) -> int:
    if args.dump and args.methods:
        raise _UsageError("simulate: --dump and --methods are mutually exclusive")
    if not args.dump and not args.methods:
        raise _UsageError("simulate: pass --dump FILE or --methods LIST")
    config = load_config(args.config) if args.config else {}
    scenario = _scenario_from_args(args, RngStream(args.seed))

    if args.dump:
        drawn = generate(scenario)
        write_csv(args.dump, drawn.data.x, drawn.data.y, drawn.data.feature_names)
        sidecar = Path(args.dump).with_suffix(Path(args.dump).suffix + ".active.json")
        meta = {
            "active_set": sorted(drawn.active_set),
            "kind": scenario.kind,
            "n": scenario.n,
            "p": scenario.p,
            "noise_sd": scenario.noise_sd,
            "replication": scenario.replication,
            "seed": [args.seed, 0],
        }
        with open(sidecar, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        _note(f"dataset written to {args.dump}, active set to {sidecar}")
        _emit({"written": str(args.dump), "sidecar": str(sidecar), **meta})
        return EXIT_OK

    plan = ExperimentPlan(
        scenario=scenario,
        methods=tuple(_methods_list(args.methods)),
        regressor=_regressor_from(args.regressor, config),
        replicates=args.replicates,
        alpha=args.alpha,
        base_seed=RngStream(args.seed),
        crossfit_k=args.crossfit,
        permutation_rounds=_permutation_rounds(args, config),
        lazy=_lazy_from(args, config),
        one_sided=args.one_sided,
    )
    summary = run_plan(plan, threads=_threads(args))
    payload = summary.to_dict()
    for method, metrics in summary.per_method.items():
        _note(f"timing: {method} mean {metrics.mean_wall_seconds:.3f}s per replicate")
    for entry in payload["per_method"].values():
        entry["mean_wall_seconds"] = None
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(summary.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        _note(f"summary written to {args.out}")
    if args.emit_plot_csv:
        with open(args.emit_plot_csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["feature", "method", "mean_p", "sd_p"])
            for method in plan.methods:
                metrics = summary.per_method[method]
                for j in range(scenario.p):
                    writer.writerow(
                        [
                            f"X{j + 1}",
                            method,
                            repr(metrics.mean_p_values[j]),
                            repr(metrics.sd_p_values[j]),
                        ]
                    )
        _note(f"plot table written to {args.emit_plot_csv}")
    _emit(payload)
    return EXIT_OK


def _gaussian_pair_moments(beta: float, rho: float, sigma_x: float, noise_var: float) -> ModelMoments:
    e_xt2 = (1.0 - rho**2) * sigma_x**2
    return ModelMoments(
        noise_var=noise_var,
        e_xt2=e_xt2,
        var_xt2=2.0 * e_xt2**2,
        e_ft2=beta**2 * e_xt2,
        e_ft4=3.0 * beta**4 * e_xt2**2,
        e_xt_ft=beta * e_xt2,
        e_xt2_ft2=3.0 * beta**2 * e_xt2**2,
    )


def _cmd_are(args) -> int:
    if args.model in ("linear", "single_index"):
        if args.beta is None:
            raise ValidationError(f"--model {args.model} requires --beta")
        if not abs(args.rho) < 1:
            raise ValidationError(f"|rho| must be below 1, got {args.rho}")
        m = _gaussian_pair_moments(args.beta, args.rho, args.sigma_x, args.sigma_eps**2)
        if args.model == "linear":
            pair = cv_linear(args.beta, m, args.n)
            payload = {
                "model": "linear",
                "cv_gcm": pair.cv_gcm,
                "cv_loco": pair.cv_loco,
                "are": pair.are,
                "sample_size": pair.sample_size,
                "are_example1": are_example1(args.beta, args.rho, args.sigma_x, args.sigma_eps),
            }
        else:
            if args.eta_prime is None:
                raise ValidationError("--model single_index requires --eta-prime")
            pair = cv_single_index(args.beta, args.eta_prime, m, args.n)
            payload = {
                "model": "single_index",
                "cv_gcm": pair.cv_gcm,
                "cv_loco": pair.cv_loco,
                "are": pair.are,
                "sample_size": pair.sample_size,
            }
        _emit(payload)
        return EXIT_OK

    required = {
        "--noise-var": args.noise_var,
        "--e-xt2": args.e_xt2,
        "--var-xt2": args.var_xt2,
        "--e-ft2": args.e_ft2,
        "--e-ft4": args.e_ft4,
        "--e-xt-ft": args.e_xt_ft,
        "--e-xt2-ft2": args.e_xt2_ft2,
    }
    missing = [flag for flag, value in required.items() if value is None]
    if missing:
        raise ValidationError(
            f"--model nonlinear_additive requires explicit moments; missing {', '.join(missing)}"
        )
    m = ModelMoments(
        noise_var=args.noise_var,
        e_xt2=args.e_xt2,
        var_xt2=args.var_xt2,
        e_ft2=args.e_ft2,
        e_ft4=args.e_ft4,
        e_xt_ft=args.e_xt_ft,
        e_xt2_ft2=args.e_xt2_ft2,
    )
    pair = are_nonlinear(m, args.n)
    _emit(
        {
            "model": "nonlinear_additive",
            "cv_gcm": pair.cv_gcm,
            "cv_loco": pair.cv_loco,
            "are": pair.are,
            "sample_size": pair.sample_size,
            "condition_b_ratio": condition_b_ratio(m),
        }
    )
    return EXIT_OK


def _cmd_moments(args) -> int:
    data = load_csv(args.input, target=args.ft_column)
    if args.xt_column not in data.feature_names:
        raise DataError(f"{args.input} has no column named {args.xt_column!r}")
    xt = data.x[:, data.feature_names.index(args.xt_column)]
    m = empirical_moments(xt, data.y, args.noise_var, unconditional=args.unconditional)
    _emit(
        {
            "noise_var": m.noise_var,
            "e_xt2": m.e_xt2,
            "var_xt2": m.var_xt2,
            "e_ft2": m.e_ft2,
            "e_ft4": m.e_ft4,
            "e_xt_ft": m.e_xt_ft,
            "e_xt2_ft2": m.e_xt2_ft2,
            "e_xh2": m.e_xh2,
            "var_xh2": m.var_xh2,
        }
    )
    return EXIT_OK


def _cmd_are_check(args) -> int:
    config = load_config(args.config) if args.config else {}
    regressor = _regressor_from(args.regressor, config)
    if args.example1 and args.scenario:
        raise _UsageError("are-check: --example1 and --scenario are mutually exclusive")
    if args.example1:
        if not abs(args.rho) < 1:
            raise ValidationError(f"|rho| must be below 1, got {args.rho}")
        scenario = ScenarioSpec(
            kind="linear_a",
            n=args.n,
            p=2,
            seed=RngStream(args.seed),
            noise_sd=args.sigma_eps,
            correlations=((0, 1, args.rho),),
            coefficients=(args.beta * args.sigma_x, 0.0),
        )
        plan = ExperimentPlan(
            scenario=scenario,
            methods=("gcm", "loco"),
            regressor=regressor,
            replicates=args.replicates,
            alpha=args.alpha,
            base_seed=RngStream(args.seed),
        )
        measured = empirical_are(plan, "gcm", "loco", 0, include_theory=False, threads=_threads(args))
        theory = are_example1(args.beta, args.rho, args.sigma_x, args.sigma_eps)
        gap = None
        if not measured.degenerate and theory != 0:
            gap = float((measured.empirical_are - theory) / theory)
        comparison = AreComparison(
            method_a="gcm",
            method_b="loco",
            feature_index=0,
            theory_are=theory,
            empirical_are=measured.empirical_are,
            relative_gap=gap,
            replicate_count=measured.replicate_count,
            degenerate=measured.degenerate,
        )
    else:
        if not args.scenario:
            raise _UsageError("are-check: pass --example1 or --scenario KIND")
        kind = _scenario_kind(args.scenario)
        overrides: dict[str, object] = {"noise_sd": args.noise_sd}
        if args.p is not None:
            overrides["p"] = args.p
        scenario = default_spec(kind, args.n, RngStream(args.seed), **overrides)
        plan = ExperimentPlan(
            scenario=scenario,
            methods=(args.method_a, args.method_b)
            if args.method_a != args.method_b
            else (args.method_a,),
            regressor=regressor,
            replicates=args.replicates,
            alpha=args.alpha,
            base_seed=RngStream(args.seed),
        )
        comparison = empirical_are(
            plan, args.method_a, args.method_b, args.feature, threads=_threads(args)
        )
    payload = comparison.to_dict()
    if comparison.relative_gap is not None:
        payload["within_20pct"] = bool(abs(comparison.relative_gap) <= 0.2)
    _emit(payload)
    return EXIT_OK


def _cmd_report(args) -> int:
    report = read_report(args.input)
    if args.out:
        write_report(report, args.out, fmt=args.format)
        _note(f"report rewritten to {args.out}")
    payload = report_to_dict(report)
    payload["feature_names"] = list(report.feature_names)
    payload["selected"] = {m: sorted(s) for m, s in report.selected.items()}
    _emit(payload)
    return EXIT_OK


_COMMANDS = {
    "select": _cmd_select,
    "simulate": _cmd_simulate,
    "are": _cmd_are,
    "moments": _cmd_moments,
    "are-check": _cmd_are_check,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _UsageError(parser.format_usage().rstrip() + "\nvimsel: error: a subcommand is required")
        return _COMMANDS[args.command](args)
    except SystemExit as exc:
        # argparse --help lands here with code 0
        code = exc.code
        return int(code) if isinstance(code, int) else EXIT_OK if code is None else EXIT_USAGE
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(f"vimsel: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, NumericalError) as exc:
        print(f"vimsel: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
