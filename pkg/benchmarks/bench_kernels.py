"""Time the numba kernels against their numpy twins.

Usage::

    python3 benchmarks/bench_kernels.py [--n 256] [--m 36] [--repeat 3]

Both paths run on the same inputs; the script also reports their largest
absolute disagreement.
"""
import argparse
import time

import numpy as np

from radonalias import kernels
from radonalias.radon import p_axis


def best_of(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--m", type=int, default=36)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    n, m = args.n, args.m
    rng = np.random.default_rng(1)
    img = rng.standard_normal((n, n))
    ang = np.arange(m) * np.pi / m
    cosv, sinv = np.cos(ang), np.sin(ang)
    ps = p_axis(2 * n, np.sqrt(2.0))
    dt = 1.0 / n
    x = -1.0 + (np.arange(n) + 0.5) * 2.0 / n
    xs, ys = (a.ravel() for a in np.meshgrid(x, x))
    w = np.full(m, 2.0 * np.pi / m)

    # compile outside the timed region
    kernels.project_raster(img[:8, :8], 1.0, cosv[:1], sinv[:1], ps[:4], dt, use_numba=True)
    kernels.backproject(img[:2], ps[0], ps[1] - ps[0], cosv[:2], sinv[:2], w[:2], xs[:4], ys[:4],
                        use_numba=True)

    print(f"grid {n}x{n}, {m} angles, {len(ps)} offsets, best of {args.repeat}")
    print(f"{'kernel':<14}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max |diff|':>14}")
    rows = None
    for name, call in (
        ("project", lambda use: kernels.project_raster(img, 1.0, cosv, sinv, ps, dt, use_numba=use)),
        ("backproject", lambda use: kernels.backproject(rows, ps[0], ps[1] - ps[0], cosv, sinv, w,
                                                        xs, ys, use_numba=use)[0]),
    ):
        t_nb, a = best_of(lambda: call(True), args.repeat)
        t_np, b = best_of(lambda: call(False), args.repeat)
        if rows is None:
            rows = a
        print(f"{name:<14}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>10.1f}{np.max(np.abs(a - b)):>14.3g}")


if __name__ == "__main__":
    main()
