"""Compiled versus numpy kernels: batch reduction and test-family evaluation.

    python3 benchmarks/bench_reduce.py [--N 200000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from horoflow import _kernels
from horoflow import flow_experiments as fx
from horoflow.curves import polynomial
from horoflow.lattice_quotient import reduce_batch
from horoflow.lie_core import identity


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _kernels.compiled_backend is None:
        raise SystemExit("compiled extension not available; build with pip install -e .")
    backends = (_kernels.python_backend, _kernels.compiled_backend)
    print(f"N = {args.N}, best of {args.repeat}")
    print(f"{'kernel':<22}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}{'max diff':>12}")
    for n in (2, 3):
        # evolved horocycle samples: long reduction words at t = 10
        c = polynomial([[0.0], [1.0]]) if n == 2 else polynomial([[0, 0], [1, 0], [0, 0.5]])
        h = fx.curve_matrices(c, identity(n), 10.0, fx.midpoints(c.domain, args.N))
        h = h.real if n == 2 else h
        res = [best_of(lambda b=b: reduce_batch(h, n, backend=b), args.repeat) for b in backends]
        diff = float(np.abs(res[0][1] - res[1][1]).max())
        print(f"{f'reduce n={n}':<22}{res[0][0]:>12.3f}{res[1][0]:>12.3f}"
              f"{res[0][0] / res[1][0]:>10.1f}{diff:>12.1e}")

        lam = fx.measure_from_matrices(h, n)
        fam = fx.standard_family(n)
        res = [best_of(lambda b=b: fam.values(lam, backend=b), args.repeat) for b in backends]
        diff = float(np.abs(res[0][1] - res[1][1]).max())
        print(f"{f'family n={n} ({fam.size})':<22}{res[0][0]:>12.3f}{res[1][0]:>12.3f}"
              f"{res[0][0] / res[1][0]:>10.1f}{diff:>12.1e}")


if __name__ == "__main__":
    main()
