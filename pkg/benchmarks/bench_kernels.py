"""Compare the compiled and pure-Python kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeat 3]

Times the LMG Dormand-Prince integrator (plain and variational) and the
sparse Dicke-basis Liouvillian assembly with both backends, and checks that
they agree.
"""
import argparse
import time

import numpy as np

from permadyn import _backend, _pykernels

PARAMS = (3.0, 0.5, 2.0, 1.0)


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def cases():
    y0 = np.array([0.3, 0.0, 0.8])
    yv = np.concatenate([y0, np.eye(3).ravel()])
    return {
        "dp45_lmg t=200": lambda k: k.dp45_lmg(y0, 0.0, 200.0, *PARAMS, rtol=1e-10, atol=1e-12),
        "dp45_lmg variational t=20": lambda k: k.dp45_lmg(yv, 0.0, 20.0, *PARAMS, rtol=1e-10,
                                                           atol=1e-12, variational=True),
        "liouvillian N=40": lambda k: k.dicke_liouvillian_coo(40, *PARAMS),
        "liouvillian N=80": lambda k: k.dicke_liouvillian_coo(80, *PARAMS),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    ck = _backend.compiled_kernels
    if ck is None:
        print("compiled kernels unavailable; build with `pip install -e . --no-build-isolation`")
    print(f"{'kernel':28s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s}  agreement")
    for name, fn in cases().items():
        tp, op = best_of(lambda: fn(_pykernels), args.repeat)
        if ck is None:
            print(f"{name:28s} {tp:11.4f} {'-':>11s} {'-':>8s}")
            continue
        tc, oc = best_of(lambda: fn(ck), args.repeat)
        if name.startswith("dp45"):
            diff = float(np.max(np.abs(op[1][-1] - oc[1][-1])))
        else:
            import scipy.sparse as sp
            n = int(max(op[0].max(), op[1].max())) + 1
            a = sp.csr_matrix((op[2], (op[0], op[1])), shape=(n, n))
            b = sp.csr_matrix((oc[2], (oc[0], oc[1])), shape=(n, n))
            diff = float(abs(a - b).max())
        print(f"{name:28s} {tp:11.4f} {tc:11.4f} {tp / tc:8.1f}  max|diff|={diff:.1e}")


if __name__ == "__main__":
    main()
