"""Compare the compiled and numpy kernels.

    python3 benchmarks/bench_kernels.py [--repeat 20]

Times the batched tridiagonal solve (the per-mode wall-normal solves of
the flow steppers, 65 rows for each of 65 x-modes) and the director
renormalization on a 128 x 65 and a 64 x 64 x 33 grid.
"""

import argparse
import timeit

import numpy as np

from chevron import _kernels_py

try:
    from chevron import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def _systems(batch, n, rng):
    lower = rng.standard_normal((batch, n)) + 0j
    upper = rng.standard_normal((batch, n)) + 0j
    diag = 4.0 + np.abs(lower) + np.abs(upper) + 1j * rng.standard_normal((batch, n))
    rhs = rng.standard_normal((batch, n)) + 1j * rng.standard_normal((batch, n))
    return lower, diag, upper, rhs


def bench(impl, repeat, rng):
    out = {}
    for batch, n in ((65, 65), (64 * 33, 65)):
        lower, diag, upper, rhs = _systems(batch, n, rng)
        cp, inv = impl.tridiag_factor(lower, diag, upper)
        t = min(timeit.repeat(lambda: impl.tridiag_solve(lower, cp, inv, rhs), number=10, repeat=repeat)) / 10
        out[f"tridiag_solve {batch}x{n}"] = t
    for shape in ((128, 65), (64, 64, 33)):
        n = rng.standard_normal((3,) + shape)
        flat = n.reshape(3, -1)

        def run():
            impl.renormalize(flat.copy())

        out[f"renormalize {'x'.join(map(str, shape))}"] = min(timeit.repeat(run, number=10, repeat=repeat)) / 10
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    py = bench(_kernels_py, args.repeat, np.random.default_rng(0))
    cy = bench(_compiled, args.repeat, np.random.default_rng(0)) if _compiled else {}
    print(f"{'kernel':34s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, t in py.items():
        if name in cy:
            print(f"{name:34s} {t * 1e3:12.4f} {cy[name] * 1e3:12.4f} {t / cy[name]:8.2f}")
        else:
            print(f"{name:34s} {t * 1e3:12.4f} {'n/a':>12s} {'':>8s}")


if __name__ == "__main__":
    main()
