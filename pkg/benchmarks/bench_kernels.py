"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--size 1200]

The first call of each numba kernel compiles it; that cost is reported
separately and excluded from the steady-state timings.
"""

import argparse
import time
import timeit

import numpy as np

from conecalc import _kernels as K


def cases(size, rng):
    r = np.linspace(0.0, 40.0, size)
    h = float(r[1] - r[0])
    g = K.hardy_conjugated_np(r, 0.25, h)
    xs = rng.random((size, 200))
    m = 8
    q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    e = 0.99 * q
    f = rng.standard_normal((4 * size, m))
    return {
        "pairwise_sum": ((rng.standard_normal(size * 1000),), {}),
        "hardy_conjugated": ((r, 0.25, h), {}),
        "lp_ratios": ((g, xs, 1.5), {}),
        "expmid_march": ((e, e, f, 1e-3), {}),
        "mode_stencil": ((r, h, 3.0, -4.0), {}),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=1200)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'compile s':>11}{'numba ms':>11}{'numpy ms':>11}{'speedup':>9}")
    for name, (a, kw) in cases(args.size, rng).items():
        nb, npf = getattr(K, name + "_nb"), getattr(K, name + "_np")
        t0 = time.perf_counter()
        nb(*a, **kw)
        compile_s = time.perf_counter() - t0
        t_nb = min(timeit.repeat(lambda: nb(*a, **kw), number=1, repeat=args.repeat))
        t_np = min(timeit.repeat(lambda: npf(*a, **kw), number=1, repeat=args.repeat))
        print(f"{name:<18}{compile_s:>11.2f}{t_nb * 1e3:>11.2f}{t_np * 1e3:>11.2f}{t_np / t_nb:>9.2f}")


if __name__ == "__main__":
    main()
