"""Time the compiled and pure-Python kernels on production-sized inputs.

Usage: ``python3 benchmarks/bench_backends.py [--repeat N]``
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from roadspread import _backend


def _tridiag_case(n: int):
    rng = np.random.default_rng(0)
    off = -np.ones(n)
    diag = 2.0 + rng.uniform(0.01, 1.0, n)
    return off, diag, off, rng.normal(size=n)


def _euler_case(nx: int, ny: int):
    rng = np.random.default_rng(1)
    u = rng.uniform(0, 1, nx)
    v = rng.uniform(0, 1, (ny, nx))
    src = rng.uniform(0, 1, ny)
    sink = rng.uniform(0, 1, ny)
    gather = 0.1 * sink
    return u, v, np.empty_like(u), np.empty_like(v), src, sink, gather, 0.25, 0.1, 1e-3, 5.0, 1.0, 1.0, 1.0


def bench(repeat: int) -> list[tuple[str, str, float]]:
    rows = []
    cases = {
        "tridiag_solve n=6145": ("tridiag_solve", _tridiag_case(6145)),
        "euler_step 1200x201": ("euler_step", _euler_case(1200, 201)),
    }
    for label, (fn, args) in cases.items():
        for name, mod in sorted(_backend.available_backends().items()):
            f = getattr(mod, fn)
            n = 20
            best = min(timeit.repeat(lambda: f(*args), number=n, repeat=repeat)) / n
            rows.append((label, name, best))
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rows = bench(args.repeat)
    print(f"{'kernel':<24}{'backend':<10}{'time per call':>16}")
    for label, name, t in rows:
        print(f"{label:<24}{name:<10}{t * 1e3:>13.3f} ms")
    by_label: dict[str, dict[str, float]] = {}
    for label, name, t in rows:
        by_label.setdefault(label, {})[name] = t
    for label, times in by_label.items():
        if {"compiled", "python"} <= set(times):
            print(f"{label}: compiled is {times['python'] / times['compiled']:.1f}x faster")


if __name__ == "__main__":
    main()
