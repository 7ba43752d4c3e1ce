"""Compare the compiled split-scan kernel against the NumPy fallback.

Times the raw best_split call and a full boosted fit with each backend,
and verifies that both pick identical splits so fitted models agree bit
for bit.  Run from the repository root:

    python3 benchmarks/benchmark_split_scan.py
    python3 benchmarks/benchmark_split_scan.py --n 4000 --p 50 --rounds 200
"""

import argparse
import time

import numpy as np

from vimsel._kernels import BACKEND, available_backends
from vimsel.regress.boost import fit_gbm


def time_call(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def bench_split(n, p, backends, repeats):
    rng = np.random.default_rng(7)
    x = rng.normal(size=(n, p))
    resid = rng.normal(size=n)
    x_t = np.ascontiguousarray(x.T)
    sorted_idx = np.ascontiguousarray(np.argsort(x, axis=0).T.astype(np.int32))
    mask = np.ones(n, dtype=np.uint8)
    node_sum = float(resid.sum())

    print(f"best_split on n={n}, p={p} (best of {repeats}):")
    answers = {}
    for name, fn in backends.items():
        seconds, answers[name] = time_call(
            lambda fn=fn: fn(sorted_idx, x_t, resid, mask, n, node_sum, 1), repeats
        )
        print(f"  {name:9s} {1e3 * seconds:8.3f} ms")
    if len(answers) == 2:
        a, b = answers["numpy"], answers["compiled"]
        assert a[0] == b[0] and abs(a[1] - b[1]) < 1e-12, (a, b)
        print(f"  identical split: feature {a[0]}, threshold {a[1]:.6f}")
    return answers


def bench_fit(n, p, rounds, depth, backends, repeats):
    rng = np.random.default_rng(11)
    x = rng.normal(size=(n, p))
    y = x[:, 0] - 2.0 * x[:, 1] + 0.5 * x[:, 2] ** 2 + 0.1 * rng.normal(size=n)

    print(f"fit_gbm rounds={rounds} depth={depth} on n={n}, p={p} (best of {repeats}):")
    models = {}
    for name, fn in backends.items():
        seconds, models[name] = time_call(
            lambda fn=fn: fit_gbm(x, y, rounds, depth, 0.1, 1, split_fn=fn), repeats
        )
        print(f"  {name:9s} {seconds:8.3f} s")
    if len(models) == 2:
        gap = float(
            np.max(np.abs(models["numpy"].predict(x) - models["compiled"].predict(x)))
        )
        assert gap == 0.0, f"backend predictions differ by {gap}"
        print("  identical predictions from both backends")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=2000)
    parser.add_argument("--p", type=int, default=20)
    parser.add_argument("--rounds", type=int, default=100)
    parser.add_argument("--depth", type=int, default=2)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = available_backends()
    print(f"active backend: {BACKEND}; available: {sorted(backends)}")
    bench_split(args.n, args.p, backends, args.repeats)
    bench_fit(args.n, args.p, args.rounds, args.depth, backends, args.repeats)


if __name__ == "__main__":
    main()
