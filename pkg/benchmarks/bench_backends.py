"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_backends.py --steps 20000 --N 10000

Both backends get identically seeded generators; the script also checks
that their outputs agree bit for bit.
"""
import argparse
import time

import numpy as np

from qladder import _kernels
from qladder._accel import HAVE_NUMBA
from qladder.brw import make_rng


def timed(fn, *args, repeat=3):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def trajectory_args(mode, param, steps, seed):
    return (np.ones(1), np.int64(0), 0.25, 1.0, np.int64(mode), float(param), np.int64(steps),
            make_rng(seed), np.int64(0))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--N", type=int, default=10_000)
    ap.add_argument("--L", type=int, default=15)
    ap.add_argument("--cutoff-steps", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    # warm up the JIT so compile time is not measured
    _kernels.run_nb(*trajectory_args(0, 10.0, 10, 0))
    _kernels.cutoff_advance_nb(np.ones(1), np.int64(0), 0.25, 1.0, 1e-4, 10)

    cases = [
        (f"N-BRW N={args.N}", _kernels.MODE_TOP_N, args.N),
        (f"L-BRW L={args.L}", _kernels.MODE_WINDOW, args.L),
    ]
    print(f"{'case':<22}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}  identical")
    for name, mode, param in cases:
        t_np, out_np = timed(lambda: _kernels.run_np(*trajectory_args(mode, param, args.steps, args.seed)), repeat=1)
        t_nb, out_nb = timed(lambda: _kernels.run_nb(*trajectory_args(mode, param, args.steps, args.seed)))
        same = all(np.array_equal(np.asarray(a), np.asarray(b)) for a, b in zip(out_np, out_nb))
        print(f"{name:<22}{t_np:>12.3f}{t_nb:>12.3f}{t_np / t_nb:>10.1f}  {same}")

    h0 = np.ones(1)
    t_np, a = timed(lambda: _kernels.cutoff_advance_np(h0, np.int64(0), 0.25, 1.0, 1e-8, args.cutoff_steps), repeat=1)
    t_nb, b = timed(lambda: _kernels.cutoff_advance_nb(h0, np.int64(0), 0.25, 1.0, 1e-8, args.cutoff_steps))
    same = all(np.array_equal(np.asarray(x), np.asarray(y)) for x, y in zip(a, b))
    print(f"{'cutoff front N=1e8':<22}{t_np:>12.3f}{t_nb:>12.3f}{t_np / t_nb:>10.1f}  {same}")


if __name__ == "__main__":
    main()
