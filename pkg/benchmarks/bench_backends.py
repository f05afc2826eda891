"""Compare the numba and numpy backends on the hot kernels.

Usage: python3 benchmarks/bench_backends.py [--sizes 1000 10000 100000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from optorouter import _accel
from optorouter.config import Scenario, shipped_config
from optorouter.oracle import assemble, solve_system
from optorouter.response import compute_spectrum, default_grid
from optorouter.steady_state import operating_point
from optorouter.units import Scaled


def best_of(fn, repeat):
    fn()  # warm-up (jit compile or cache load)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1000, 10000, 100000])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=0, help="numba threads, 0 = all cores")
    args = ap.parse_args()

    if not _accel.HAS_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    print(f"numba threads: {_accel.set_threads(args.threads)}")

    p = Scenario.from_file(shipped_config("fig2.conf")).params
    ss = operating_point(p)
    s = Scaled.build(p, ss)
    kernels = {
        "solve_batched": lambda grid, be: solve_system(assemble(p, ss, grid), backend=be),
        "closed_form": lambda grid, be: _accel.closed_form(
            grid / s.w_unit, s.kappa, s.delta, s.w2, s.mu2, s.gamma1, s.gamma2, s.G, s.Lam, backend=be),
        "compute_spectrum": lambda grid, be: compute_spectrum(p, ss, grid, backend=be),
    }

    print(f"{'kernel':<18}{'points':>9}{'numpy [ms]':>13}{'numba [ms]':>13}{'speedup':>9}")
    for name, kernel in kernels.items():
        for n in args.sizes:
            grid = default_grid(p, n)
            t_np = best_of(lambda: kernel(grid, "numpy"), args.repeat)
            t_nb = best_of(lambda: kernel(grid, "numba"), args.repeat)
            print(f"{name:<18}{n:>9}{1e3 * t_np:>13.3f}{1e3 * t_nb:>13.3f}{t_np / t_nb:>9.2f}")

    # results must agree before timings mean anything
    grid = default_grid(p, 4001)
    a = compute_spectrum(p, ss, grid, backend="numpy")
    b = compute_spectrum(p, ss, grid, backend="numba")
    print(f"max |dT| between backends: {np.max(np.abs(a.T - b.T)):.2e}")


if __name__ == "__main__":
    main()
