"""Time the compiled kernels against the numpy fallback on 480 x 480 inputs.

    python benchmarks/bench_kernels.py [--repeat N] [--size S]

Prints one row per kernel with the best-of-N time of each backend, the
speed-up and the maximum absolute difference between their outputs.
"""
import argparse
import sys
import timeit

import numpy as np

from fringelab import _kernels
from fringelab.pattern import make_pattern


def cases(n, rng):
    u = rng.uniform(-20.0, 20.0, (n, n))
    vx, vy = rng.normal(0.0, 2.0, (2, n, n))
    tile = make_pattern(6)._tile
    pos = (np.arange(n, dtype=float)[None, :] + 0.5 + rng.normal(0.0, 3.0, (n, n))) * (tile.size / 6)
    phase = np.cumsum(rng.normal(0.0, 0.2, (n, n)), axis=1)
    return {
        "wrap": (u,),
        "wrap_vector": (vx, vy),
        "bilinear_periodic": (tile, pos),
        "wrapped_gradient": (phase,),
    }


def max_diff(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return max(float(np.max(np.abs(np.asarray(x) - np.asarray(y)))) for x, y in zip(a, b))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=20)
    p.add_argument("--size", type=int, default=480)
    args = p.parse_args(argv)
    if _kernels.compiled is None:
        print("compiled kernels not built; only the fallback is available", file=sys.stderr)
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':<20}{'cython ms':>11}{'python ms':>11}{'speed-up':>10}{'max diff':>11}")
    for name, inputs in cases(args.size, rng).items():
        fast = getattr(_kernels.compiled, name)
        slow = getattr(_kernels.fallback, name)
        t_fast = min(timeit.repeat(lambda: fast(*inputs), number=1, repeat=args.repeat)) * 1e3
        t_slow = min(timeit.repeat(lambda: slow(*inputs), number=1, repeat=args.repeat)) * 1e3
        diff = max_diff(fast(*inputs), slow(*inputs))
        print(f"{name:<20}{t_fast:>11.2f}{t_slow:>11.2f}{t_slow / t_fast:>9.1f}x{diff:>11.1e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
