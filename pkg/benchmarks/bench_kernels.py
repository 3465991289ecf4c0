"""Time the numba and numpy variants of the hot kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--n 4000] [--k 5] [--epochs 2000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from metacomb import kernels
from metacomb._accel import HAVE_NUMBA
from metacomb.thresholds import make_grid


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=4000)
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--epochs", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    rng = np.random.Generator(np.random.PCG64(0))
    X = rng.random((args.n, args.k))
    y = (X.mean(axis=1) + rng.normal(0, 0.15, args.n) > 0.5).astype(float)
    s = rng.random(args.n)
    g = rng.random(args.n) < 0.2
    grid = make_grid(0.01, 0.99, 0.01)

    cases = {
        "fit_logistic": (
            lambda: kernels.fit_logistic_numpy(X, y, 0.1, args.epochs, 1e-12, 1e-6),
            lambda: kernels.fit_logistic_numba(X, y, 0.1, args.epochs, 1e-12, 1e-6),
        ),
        "grid_counts": (
            lambda: kernels.grid_counts_numpy(s, g, grid),
            lambda: kernels.grid_counts_numba(s, g, grid),
        ),
    }
    if not HAVE_NUMBA:
        print("numba unavailable or disabled; the numba column runs the same loops uncompiled")
    print(f"n={args.n} K={args.k} epochs={args.epochs} (best of {args.repeat})")
    print(f"{'kernel':<14}{'numpy s':>12}{'numba s':>12}{'speedup':>10}  agree")
    for name, (np_fn, nb_fn) in cases.items():
        nb_fn()  # compile outside the timed region
        t_np, out_np = best_of(np_fn, args.repeat)
        t_nb, out_nb = best_of(nb_fn, args.repeat)
        if name == "fit_logistic":
            agree = np.allclose(out_np[0], out_nb[0], rtol=1e-6, atol=1e-8)
        else:
            agree = all(np.array_equal(a, b) for a, b in zip(out_np, out_nb))
        print(f"{name:<14}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x  {agree}")


if __name__ == "__main__":
    main()
