"""Compare the compiled and numpy interpolation kernels.

Usage: ``python3 benchmarks/bench_kernels.py [--points N] [--repeat R]``
"""
import argparse
import timeit

import numpy as np

from tensortomo import _kernels, samples
from tensortomo.ray_transform import Ray, batch_momentum


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--points", type=int, default=200_000)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()

    f = samples.sample_field(2, num=65, seed=0)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-0.5, 0.5, (args.points, 3))
    flat = f.data.reshape(-1, f.ncomp)
    backends = ["python"] + (["compiled"] if _kernels.HAVE_COMPILED else [])
    if not _kernels.HAVE_COMPILED:
        print("compiled kernel not built; timing the numpy fallback only")

    print(f"multilinear interpolation, {args.points} points, {f.ncomp} components, best of {args.repeat}")
    best = {}
    for b in backends:
        run = lambda b=b: _kernels.interp_points(flat, f.dims, f.origin, f.spacing, pts, backend=b)
        best[b] = min(timeit.repeat(run, number=1, repeat=args.repeat))
        print(f"  {b:9s} {best[b] * 1e3:9.2f} ms")
    if len(best) == 2:
        ref = _kernels.interp_points(flat, f.dims, f.origin, f.spacing, pts, backend="python")
        got = _kernels.interp_points(flat, f.dims, f.origin, f.spacing, pts, backend="compiled")
        print(f"  speedup   {best['python'] / best['compiled']:9.1f}x  (max difference {np.abs(ref - got).max():.1e})")

    # end-to-end: a batch of momentum transforms goes through the same kernel
    rays = [Ray(rng.uniform(-0.2, 0.2, 3), rng.normal(size=3)) for _ in range(200)]
    ks = [int(k) for k in rng.integers(0, 4, len(rays))]
    saved = _kernels.HAVE_COMPILED
    print("batch of 200 momentum transforms")
    try:
        for b in backends:
            _kernels.HAVE_COMPILED = b == "compiled"
            t = min(timeit.repeat(lambda: batch_momentum(f, rays, ks), number=1, repeat=args.repeat))
            print(f"  {b:9s} {t * 1e3:9.2f} ms")
    finally:
        _kernels.HAVE_COMPILED = saved


if __name__ == "__main__":
    main()
