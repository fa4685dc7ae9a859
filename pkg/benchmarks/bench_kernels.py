"""Compare the compiled and numpy kernels on random data.

    python benchmarks/bench_kernels.py --sizes 500 1000 2000

Both backends must produce bit-identical distances and merges; the script
checks that before reporting timings.
"""
import argparse
import time

import numpy as np

from partstd.cluster import _pykernels
from partstd.cluster.core import METHODS

try:
    from partstd.cluster import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[500, 1000, 2000])
    ap.add_argument("--dims", type=int, default=45, help="encoded width (the angle layout gives ~45)")
    ap.add_argument("--method", choices=sorted(METHODS), default="ward")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if _ckernels is None:
        raise SystemExit("compiled kernels are not built; reinstall with a C compiler available")
    code = METHODS[args.method]
    rng = np.random.default_rng(args.seed)
    print(f"{'m':>6} {'kernel':>8} {'python s':>10} {'cython s':>10} {'speedup':>8}")
    for m in args.sizes:
        X = rng.normal(size=(m, args.dims))
        w = np.ones(args.dims)
        tp, dp = best_of(lambda: _pykernels.pdist(X, w), args.repeats)
        tc, dc = best_of(lambda: np.asarray(_ckernels.pdist(X, w)), args.repeats)
        assert np.array_equal(dp, dc), "pdist backends disagree"
        print(f"{m:>6} {'pdist':>8} {tp:>10.4f} {tc:>10.4f} {tp / tc:>7.1f}x")

        d = dp * dp if args.method == "ward" else dp
        sizes = np.ones(m)
        tp, rp = best_of(lambda: _pykernels.nn_chain(d.copy(), sizes, code), args.repeats)
        tc, rc = best_of(lambda: _ckernels.nn_chain(d.copy(), sizes, code), args.repeats)
        assert all(np.array_equal(np.asarray(a), np.asarray(b)) for a, b in zip(rp, rc)), "nn_chain backends disagree"
        print(f"{m:>6} {'linkage':>8} {tp:>10.4f} {tc:>10.4f} {tp / tc:>7.1f}x")


if __name__ == "__main__":
    main()
