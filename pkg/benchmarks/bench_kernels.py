"""Time the off-grid trigonometric kernels: numba vs the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each case builds the target points of a drift flow e^{tB} x on a grid,
times ``evaluate`` and ``spread`` with both backends (best of ``repeat``,
after one warm-up call so numba compilation is excluded) and checks that
the two agree.  Without numba only the numpy column is printed.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from oulab import _kernels
from oulab.field import GridSpec
from oulab.linops import matrix_exponential

CASES = [
    (1, 16.0, 1024, [[1.0]]),
    (2, 12.0, 64, [[0.0, 1.0], [-1.0, 0.0]]),
    (2, 12.0, 128, [[1.0, 1.0], [0.0, -1.0]]),
    (3, 8.0, 16, np.diag([0.5, -0.5, 0.2]).tolist()),
]


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def run_case(n, L, M, B, repeat, rng):
    spec = GridSpec(n, L, M)
    y = spec.points_array() @ matrix_exponential(B, 0.3).T - spec.axis()[0]
    xi = spec.frequencies()
    a = np.fft.fftn(rng.standard_normal(spec.shape)) / spec.size
    w = rng.standard_normal(spec.size)
    row = {"case": f"N={n} M={M}", "points": spec.size}
    ref_e = _kernels.evaluate_numpy(a, y, xi)
    ref_s = _kernels.spread_numpy(w, y, xi, n)
    row["eval_numpy"] = best_of(lambda: _kernels.evaluate_numpy(a, y, xi), repeat)
    row["spread_numpy"] = best_of(lambda: _kernels.spread_numpy(w, y, xi, n), repeat)
    if _kernels.HAVE_NUMBA:
        row["eval_numba"] = best_of(lambda: _kernels.evaluate_numba(a, y, xi), repeat)
        row["spread_numba"] = best_of(lambda: _kernels.spread_numba(w, y, xi, n), repeat)
        de = np.max(np.abs(_kernels.evaluate_numba(a, y, xi) - ref_e)) / np.max(np.abs(ref_e))
        ds = np.max(np.abs(_kernels.spread_numba(w, y, xi, n) - ref_s)) / np.max(np.abs(ref_s))
        row["max_rel_diff"] = max(de, ds)
    return row


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    print(f"default backend: {_kernels.BACKEND}")
    head = f"{'case':<12}{'points':>8}{'eval np':>11}{'eval nb':>11}{'spread np':>11}{'spread nb':>11}{'speedup':>9}{'rel diff':>10}"
    print(head)
    for case in CASES:
        r = run_case(*case, args.repeat, rng)
        nb_e, nb_s = r.get("eval_numba"), r.get("spread_numba")
        speed = (r["eval_numpy"] + r["spread_numpy"]) / (nb_e + nb_s) if nb_e else float("nan")
        cell = lambda v: f"{v * 1e3:9.2f}ms" if v is not None else f"{'-':>11}"  # noqa: E731
        diff = f"{r['max_rel_diff']:10.1e}" if "max_rel_diff" in r else f"{'-':>10}"
        print(f"{r['case']:<12}{r['points']:>8}{cell(r['eval_numpy'])}{cell(nb_e)}"
              f"{cell(r['spread_numpy'])}{cell(nb_s)}{speed:9.2f}{diff}")


if __name__ == "__main__":
    main()
