"""Time the Metropolis kernels with and without numba.

    python benchmarks/bench_kernels.py [--N 6] [--sweeps 2000] [--repeat 3]

Both paths consume the same random streams, so the script also reports
whether they produced identical chains.
"""

import argparse
import time

import numpy as np

from borchers import _kernels
from borchers._jit import HAVE_NUMBA

COEFFS = np.array([0.0, 0.0, -0.5, 0.0, -0.05])


def hermitian_case(N, sweeps, use_numba):
    updates = N * (N + 1) // 2
    rng = np.random.default_rng(0)
    normals = rng.standard_normal((sweeps, updates, 2))
    uniforms = rng.random((sweeps, updates))
    M = np.zeros((N, N), dtype=complex)
    out = np.empty((sweeps, N, N), dtype=complex)
    acc = _kernels.hermitian_sweeps(M, COEFFS, N, 0.4, normals, uniforms, out, use_numba)
    return acc, out


def eigenvalue_case(N, sweeps, use_numba):
    rng = np.random.default_rng(0)
    normals = rng.standard_normal((sweeps, N))
    uniforms = rng.random((sweeps, N))
    x = np.linspace(-1, 1, N)
    out = np.empty((sweeps, N))
    acc = _kernels.eigenvalue_sweeps(x, COEFFS, N, 0.3, normals, uniforms, out, use_numba)
    return acc, out


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=6)
    ap.add_argument("--sweeps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    print(f"N={args.N} sweeps={args.sweeps} (best of {args.repeat})")
    print(f"{'kernel':<12}{'python s':>12}{'numba s':>12}{'speedup':>10}  identical")
    for name, case in (("hermitian", hermitian_case), ("eigenvalue", eigenvalue_case)):
        case(args.N, 2, True)  # compile outside the timed region
        t_py, (acc_py, out_py) = best_of(lambda: case(args.N, args.sweeps, False), args.repeat)
        t_nb, (acc_nb, out_nb) = best_of(lambda: case(args.N, args.sweeps, True), args.repeat)
        same = acc_py == acc_nb and np.allclose(out_py, out_nb, rtol=0, atol=1e-12)
        print(f"{name:<12}{t_py:>12.4f}{t_nb:>12.4f}{t_py / t_nb:>10.1f}  {same}")


if __name__ == "__main__":
    main()
