"""Compare the compiled and pure-Python kernel backends.

Run ``python benchmarks/bench_kernels.py``; prints one line per kernel with the
median time of each backend and the speed-up.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from permconc import _pykernels
from permconc.permcore import symmetric_group
from permconc.transport import distance_table

try:
    from permconc import _kernels
except ImportError:  # extension not built
    _kernels = None


def cases(n: int, seed: int):
    rng = np.random.default_rng(seed)
    G = symmetric_group(n)
    D = np.array(distance_table(G, "hamming"), dtype=np.float64)
    N = len(G)
    a = rng.dirichlet(np.ones(N))
    b = rng.dirichlet(np.ones(N))
    phi = rng.normal(size=N)
    return {
        "hamming_matrix": lambda k: k.hamming_matrix(G.images),
        "two_point_scan": lambda k: k.two_point_scan(D[0], phi, 0.125),
        "transport_simplex": lambda k: k.transport_simplex(a, b, D),
    }


def run(n: int = 4, repeat: int = 5, seed: int = 0) -> list[dict]:
    rows = []
    for name, fn in cases(n, seed).items():
        row = {"kernel": name, "n": n}
        for label, mod in (("python", _pykernels), ("cython", _kernels)):
            if mod is None:
                row[label] = None
                continue
            number = max(1, int(0.2 / max(timeit.timeit(lambda: fn(mod), number=1), 1e-6)))
            row[label] = min(timeit.repeat(lambda: fn(mod), number=number, repeat=repeat)) / number
        rows.append(row)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[4, 5])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"{'kernel':<20}{'n':>3}{'python [ms]':>14}{'cython [ms]':>14}{'speed-up':>10}")
    for n in args.n:
        for r in run(n, args.repeat):
            py, cy = r["python"] * 1e3, r["cython"]
            if cy is None:
                print(f"{r['kernel']:<20}{n:>3}{py:>14.3f}{'n/a':>14}{'n/a':>10}")
            else:
                print(f"{r['kernel']:<20}{n:>3}{py:>14.3f}{cy * 1e3:>14.3f}{py / (cy * 1e3):>10.1f}")


if __name__ == "__main__":
    main()
