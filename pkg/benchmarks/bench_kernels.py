"""Compare the compiled and numpy order kernels on verification-sized inputs.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from fieldconc._kernels import backends
from fieldconc.lattice import Rectangle


def cases():
    rng = np.random.default_rng(0)
    a = rng.integers(0, 2**20, size=(200_000, 3), dtype=np.int64)
    b = rng.integers(0, 2**20, size=(200_000, 3), dtype=np.int64)
    W = Rectangle.cube(8, 3).array()
    t = np.array([5, 3, 6], dtype=np.int64)
    return {
        "kappa_many 200k d=3": lambda m: m.kappa_many(a, b),
        "compare_many 200k d=3": lambda m: m.compare_many(a, b),
        "compare_to 200k d=3": lambda m: m.compare_to(a, t),
        "compare_matrix [8]^3": lambda m: m.compare_matrix(W),
        "separation_scan k=5 d=3": lambda m: m.separation_scan(np.array([37, 41, 50], dtype=np.int64), 5),
    }


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    mods = backends()
    print(f"backends available: {', '.join(mods)}")
    print(f"{'case':30s}" + "".join(f"{name:>14s}" for name in mods) + ("  speedup" if len(mods) == 2 else ""))
    for label, fn in cases().items():
        times = {}
        for name, mod in mods.items():
            fn(mod)
            times[name] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        line = f"{label:30s}" + "".join(f"{times[n] * 1e3:12.2f}ms" for n in mods)
        if len(mods) == 2:
            line += f"  {times['python'] / times['cython']:6.1f}x"
        print(line)


if __name__ == "__main__":
    main()
