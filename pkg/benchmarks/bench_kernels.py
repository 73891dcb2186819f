"""Compare the curve-kernel paths: compiled, vectorized numpy, scalar Python.

Times batch encode/decode of n random cells at one level through each
available implementation. The compiled rows appear only when numba imported
(run with SHOAL_NO_NUMBA=1 to see the fallback-only picture). Compilation is
triggered once before timing so jit cost is not charged to the first row.
"""

import argparse
import time

import numpy as np

from shoal import _kernels as k


def bench(label, fn, repeat):
    best = min(timed(fn) for _ in range(repeat))
    print("  %-22s %8.3f s   %8.1f k ops/s" % (label, best, n_ops / best / 1e3))
    return best


def timed(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def scalar_encode(xs, ys, level):
    enc = k._encode_cell_py
    for x, y in zip(xs.tolist(), ys.tolist()):
        enc(x, y, level)


def scalar_decode(ds, level):
    dec = k._decode_cell_py
    for d in ds.tolist():
        dec(d, level)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=1_000_000, help="cells per run")
    ap.add_argument("--level", type=int, default=16)
    ap.add_argument("--repeat", type=int, default=3, help="runs per row; best is kept")
    ap.add_argument("--scalar", action="store_true",
                    help="include the per-cell Python loop (slow at large --n)")
    args = ap.parse_args()

    n_ops = args.n
    side = 1 << args.level
    rng = np.random.default_rng(1)
    xs = rng.integers(0, side, args.n, dtype=np.int64)
    ys = rng.integers(0, side, args.n, dtype=np.int64)
    ds = rng.integers(0, side * side, args.n, dtype=np.int64)

    print("n=%d level=%d numba=%s" % (args.n, args.level, k.NUMBA_ENABLED))
    print("encode:")
    if k.NUMBA_ENABLED:
        k.encode_cells(xs[:8], ys[:8], args.level)  # compile outside the clock
        bench("compiled batch", lambda: k.encode_cells(xs, ys, args.level), args.repeat)
    bench("numpy batch", lambda: k._encode_cells_np(xs, ys, args.level), args.repeat)
    if args.scalar:
        bench("python scalar loop", lambda: scalar_encode(xs, ys, args.level), args.repeat)

    print("decode:")
    if k.NUMBA_ENABLED:
        k.decode_cells(ds[:8], args.level)
        bench("compiled batch", lambda: k.decode_cells(ds, args.level), args.repeat)
    bench("numpy batch", lambda: k._decode_cells_np(ds, args.level), args.repeat)
    if args.scalar:
        bench("python scalar loop", lambda: scalar_decode(ds, args.level), args.repeat)
