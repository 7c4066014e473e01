"""Compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Times both backends on the workloads the package runs: the double-difference
form of the master equation (K=16, M=32 field on N=64 nodes) and the Holder
band maxima on an R-sized point cloud (128x63 lattice).
"""

import argparse
import timeit

import numpy as np

from fracpar import _kernels_py

try:
    from fracpar import _ckernels
except ImportError:
    _ckernels = None


def workloads(rng):
    N, M = 64, 32
    W = rng.random((N, N))
    W = 0.5 * (W + W.T)
    w = np.full(N, np.pi / (N + 1))
    a, b = rng.standard_normal((M, N)), rng.standard_normal((M, N))
    P = 65 * 33  # K region of the fine interior lattice
    pts = np.column_stack([rng.random(P) * 0.5, rng.random(P) * 0.8])
    u = rng.standard_normal(P)
    edges = 0.02 * 2.0 ** (np.arange(12) / 2)
    return {
        "double_difference_form": ((W, w, a, b), {}),
        "holder_quotients": ((pts, u, 0.8, edges), {}),
    }


def main():
    ap = argparse.ArgumentParser(description="compiled vs pure kernels")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    backends = {"python": _kernels_py}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    else:
        print("compiled kernels not built; timing the fallback only")
    for name, (pos, kw) in workloads(rng).items():
        times = {}
        for bname, mod in backends.items():
            fn = getattr(mod, name)
            n, _ = timeit.Timer(lambda: fn(*pos, **kw)).autorange()
            best = min(timeit.repeat(lambda: fn(*pos, **kw), number=n, repeat=args.repeat)) / n
            times[bname] = best
        line = "  ".join(f"{b} {t * 1e3:9.3f} ms" for b, t in times.items())
        speed = f"  speedup {times['python'] / times['cython']:.1f}x" if "cython" in times else ""
        print(f"{name:24s} {line}{speed}")
        if _ckernels is not None:
            ref = getattr(_kernels_py, name)(*pos, **kw)
            got = getattr(_ckernels, name)(*pos, **kw)
            print(f"{'':24s} max |difference| {float(np.max(np.abs(np.asarray(got) - np.asarray(ref)))):.2e}")


if __name__ == "__main__":
    main()
