"""Time the numpy and numba versions of each hot loop on the same inputs.

    python benchmarks/bench_backends.py [--n 6400] [--repeat 20]

Both paths are called through ``coalkin._hot.IMPLS`` so the result does not
depend on ``COALKIN_BACKEND``.  Outputs are compared before timing.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from coalkin import _hot
from coalkin.kernels import G


def best_of(fn, repeat: int) -> float:
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(n: int):
    rng = np.random.default_rng(0)
    dx = 0.2
    k = G(1, 1, 2)
    offs, vals = k.taps(dx)
    pad = int(offs[-1])
    ext = rng.random(n + 2 * pad)
    yield "conv", (ext, offs, vals, n, pad, dx)

    moffs, mvals = G(0.05, 1, 2).midpoint_taps(dx)
    mpad = int(moffs[-1])
    yield "midpoint_gain", (rng.random(n + 2 * mpad), moffs, mvals, n, mpad, dx)

    m = min(n, 800)
    a1 = G(0.02, 0.2)
    pieces = _hot.logmass_pieces(0, a1.lam, a1.sigma, a1.h, a1.support_radius())
    rho = rng.random(m)
    yield "logmass_gain", (rho, -1.0, 0.025, 0, a1.lam, a1.sigma, a1.h, *pieces)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--n", type=int, default=6400, help="grid nodes for conv and midpoint_gain")
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    if "numba" not in _hot.IMPLS:
        print("numba is not importable; only the numpy path can be timed")
    print(f"{'routine':<15}{'numpy [ms]':>12}{'numba [ms]':>12}{'speed-up':>10}")
    for name, inputs in cases(args.n):
        ref = _hot.IMPLS["numpy"][name](*inputs)
        t_np = best_of(lambda: _hot.IMPLS["numpy"][name](*inputs), args.repeat)
        if "numba" in _hot.IMPLS:
            got = _hot.IMPLS["numba"][name](*inputs)
            assert np.allclose(got, ref, rtol=1e-12, atol=1e-14), name
            t_nb = best_of(lambda: _hot.IMPLS["numba"][name](*inputs), args.repeat)
            print(f"{name:<15}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>10.1f}")
        else:
            print(f"{name:<15}{1e3 * t_np:>12.3f}{'-':>12}{'-':>10}")
        if name == "conv" and "numba" in _hot.IMPLS:
            # the dispatched conv is np.convolve on both paths; time the loop it replaced
            assert np.allclose(_hot.conv_numba(*inputs), ref, rtol=1e-12, atol=1e-14)
            t_loop = best_of(lambda: _hot.conv_numba(*inputs), args.repeat)
            print(f"{'conv (loop)':<15}{1e3 * t_np:>12.3f}{1e3 * t_loop:>12.3f}{t_np / t_loop:>10.1f}")


if __name__ == "__main__":
    main()
