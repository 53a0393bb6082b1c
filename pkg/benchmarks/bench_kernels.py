"""Compare the compiled and numpy propagation kernels.

    python benchmarks/bench_kernels.py [--atoms 3 6 10] [--steps 4000] [--repeat 3]

Both backends run the same midpoint-exponential steps on the same inputs;
the script reports the best wall time of each and checks they agree.
"""
import argparse
import time
from dataclasses import replace

import numpy as np

from ahs_crosstalk import _pykernels
from ahs_crosstalk.hamiltonian import diagonal_parts, vdw_table
from ahs_crosstalk.program import Position, Register, reference_program

try:
    from ahs_crosstalk import _ckernels
except ImportError:
    _ckernels = None


def chain_program(n):
    """``n`` atoms on a 6 um zig-zag, driven like the control triangle."""
    base = reference_program((0.0, 0.0), shifted=False)
    sites = tuple(Position(5.0 + 6.0 * (k // 2), 5.0 + 5.0 * (k % 2)) for k in range(n))
    return replace(base, register=Register(sites))


def inputs(n, steps):
    program = reference_program((10.0, 10.0)) if n == 3 else chain_program(n)
    parts = diagonal_parts(program, vdw_table(program.register))
    h = program.duration / steps
    mids = (np.arange(steps) + 0.5) * h
    d = program.drive
    dl = program.shift.delta_local.sample(mids) if program.shift else np.zeros(steps)
    fields = [np.ascontiguousarray(w.sample(mids), dtype=np.float64) for w in (d.omega, d.phi, d.delta_global)]
    return parts, fields, np.ascontiguousarray(dl, dtype=np.float64), h


def best_time(kernel, n, steps, repeat):
    parts, (om, ph, dg), dl, h = inputs(n, steps)
    best, psi = float("inf"), None
    for _ in range(repeat):
        psi = np.zeros(1 << n, dtype=np.complex128)
        psi[0] = 1.0
        t0 = time.perf_counter()
        kernel.propagate(psi, parts.vdw, parts.rydberg_number, parts.shift_weight,
                         om, ph, dg, dl, h, 1e-12, 200)
        best = min(best, time.perf_counter() - t0)
    return best, psi


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--atoms", type=int, nargs="+", default=[3, 6, 10])
    ap.add_argument("--steps", type=int, default=4000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels unavailable; build the extension first")
    print(f"{'atoms':>5} {'steps':>6} {'numpy s':>10} {'cython s':>10} {'speedup':>8} {'max diff':>9}")
    for n in args.atoms:
        t_py, psi_py = best_time(_pykernels, n, args.steps, args.repeat)
        if _ckernels is None:
            print(f"{n:>5} {args.steps:>6} {t_py:>10.4f} {'-':>10} {'-':>8} {'-':>9}")
            continue
        t_c, psi_c = best_time(_ckernels, n, args.steps, args.repeat)
        diff = np.abs(psi_py - psi_c).max()
        print(f"{n:>5} {args.steps:>6} {t_py:>10.4f} {t_c:>10.4f} {t_py / t_c:>7.1f}x {diff:>9.1e}")


if __name__ == "__main__":
    main()
