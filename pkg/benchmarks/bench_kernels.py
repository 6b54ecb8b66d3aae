"""Benchmark the compiled kernels against the pure-numpy fallback.

The backend is chosen at import time, so each backend runs in its own
subprocess (the pure one with MCIS_PURE=1). Usage::

    python3 benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import json
import os
import subprocess
import sys
import time

_CASES = ("mean_pool", "scatter_mean_grad", "lattice_weighted_f1")


def _bench_one(name, repeats):
    import numpy as np

    from mcis import kernels

    rng = np.random.default_rng(0)
    n_utts, max_len, dim = 4000, 24, 32
    lengths = rng.integers(2, max_len, n_utts)
    offsets = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
    table = rng.standard_normal((500, dim))
    ids = rng.integers(0, 500, offsets[-1]).astype(np.int64)

    if name == "mean_pool":
        args = (table, ids, offsets)
        fn = kernels.mean_pool
    elif name == "scatter_mean_grad":
        grad = rng.standard_normal((n_utts, dim))
        args = (grad, ids, offsets, 500)
        fn = kernels.scatter_mean_grad
    else:
        n = 20000
        factual = rng.uniform(-2, 2, n)
        label_cf = np.full(n, rng.uniform(-1, 1))
        context_cf = rng.uniform(-1, 1, n)
        gold = np.round(rng.uniform(-3, 3, n))
        grid = np.round(np.arange(-2.0, 2.01, 0.1), 9)
        lam_hat, lam_tilde = (a.ravel() for a in np.meshgrid(grid, grid))
        args = (factual, label_cf, context_cf, gold, lam_hat, lam_tilde, True)
        fn = kernels.lattice_weighted_f1

    fn(*args)  # warm up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return {"backend": kernels.backend_name(), "kernel": name,
            "best_seconds": best}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--worker", help=argparse.SUPPRESS)
    args = parser.parse_args(argv)

    if args.worker:
        print(json.dumps(_bench_one(args.worker, args.repeats)))
        return 0

    rows = []
    for backend in ("cython", "pure"):
        env = dict(os.environ)
        env.pop("MCIS_PURE", None)
        if backend == "pure":
            env["MCIS_PURE"] = "1"
        for case in _CASES:
            out = subprocess.run(
                [sys.executable, __file__, "--worker", case,
                 "--repeats", str(args.repeats)],
                env=env, capture_output=True, text=True, check=True)
            rows.append(json.loads(out.stdout))

    print(f"{'kernel':<22}{'backend':<10}{'best (ms)':>12}")
    timings = {(r["kernel"], r["backend"]): r["best_seconds"] for r in rows}
    for r in rows:
        print(f"{r['kernel']:<22}{r['backend']:<10}{r['best_seconds'] * 1e3:>12.3f}")
    print()
    for case in _CASES:
        if (case, "cython") in timings and (case, "pure") in timings:
            speedup = timings[(case, "pure")] / timings[(case, "cython")]
            print(f"{case}: compiled is {speedup:.1f}x the pure fallback")
    return 0


if __name__ == "__main__":
    sys.exit(main())
