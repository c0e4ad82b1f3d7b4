"""Time the numba kernels against their numpy twins.

Usage: python benchmarks/bench_kernels.py [--n 32] [--repeat 5]

The kernel table calls both implementations directly.  The flow-step line
re-runs this script with CRYAMABE_NUMBA=0 and =1 to time a full RK4 step
under each backend selection.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from cryamabe import kernels
from cryamabe.calculus import FD2, extend_eta
from cryamabe.sphere import build_grid, random_points


def _best(fn, repeat):
    fn()  # warm-up (JIT compile)
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_table(n, repeat):
    grid = build_grid(n, n, n)
    rng = np.random.default_rng(0)
    f = rng.standard_normal(grid.shape)
    ext4 = extend_eta(f, 4)
    ext2 = extend_eta(f, 2)
    pts = np.array([p.as_c2() for p in random_points(rng, 2000)])
    eta = np.arctan2(np.abs(pts[:, 1]), np.abs(pts[:, 0]))
    xi1 = np.mod(np.angle(pts[:, 0]), 2 * np.pi)
    xi2 = np.mod(np.angle(pts[:, 1]), 2 * np.pi)
    snap_t = np.linspace(0.05, 0.2, 4)
    snaps = np.stack([ext2] * 4)
    z0 = pts[0]
    controls = rng.standard_normal((64, 8, 2))
    cases = {
        "eta_stencil": ((ext4, FD2[8]), kernels.eta_stencil_numpy, kernels.eta_stencil_numba),
        "interp_periodic": ((ext2, 2, grid.h_eta, eta, xi1, xi2),
                            kernels.interp_periodic_numpy, kernels.interp_periodic_numba),
        "propagate_paths": ((z0, controls, 0.05, 0.15 / 8, 4, snap_t, snaps, 2, grid.h_eta),
                            kernels.propagate_paths_numpy, kernels.propagate_paths_numba),
    }
    print(f"grid {n}^3, best of {repeat}")
    print(f"{'kernel':18s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speed-up':>9s} {'max diff':>9s}")
    for name, (args, np_fn, nb_fn) in cases.items():
        a, b = np_fn(*args), nb_fn(*args)
        diff = max(float(np.max(np.abs(np.asarray(x) - np.asarray(y))))
                   for x, y in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)))
        t_np = _best(lambda: np_fn(*args), repeat)
        t_nb = _best(lambda: nb_fn(*args), repeat)
        print(f"{name:18s} {1e3 * t_np:11.2f} {1e3 * t_nb:11.2f} {t_np / t_nb:9.1f} {diff:9.1e}")


def step_time(n, repeat):
    from cryamabe.calculus import FrameCalculus
    from cryamabe.flow import step
    from cryamabe.initial_data import TorsionFreeParams, torsion_free_lambda
    from cryamabe.transform import PseudohermitianState
    grid = build_grid(n, n, n)
    s = PseudohermitianState(FrameCalculus(grid), torsion_free_lambda(TorsionFreeParams(0.1, 0.05, 1.0), grid))
    return _best(lambda: step(s, 1e-4), repeat)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--step-only", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.step_only:
        print(step_time(args.n, args.repeat))
        return
    kernel_table(args.n, args.repeat)
    times = {}
    for flag in ("0", "1"):
        env = dict(os.environ, CRYAMABE_NUMBA=flag)
        out = subprocess.run([sys.executable, __file__, "--n", str(args.n), "--repeat",
                              str(args.repeat), "--step-only"], env=env, check=True,
                             capture_output=True, text=True).stdout
        times[flag] = float(out.strip().splitlines()[-1])
    print(f"RK4 flow step: numpy {1e3 * times['0']:.1f} ms, numba {1e3 * times['1']:.1f} ms "
          f"({times['0'] / times['1']:.1f}x)")


if __name__ == "__main__":
    main()
