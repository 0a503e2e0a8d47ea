"""Compare the compiled and pure-Python kernel backends.

Usage: python benchmarks/bench_kernels.py [--ells 50 200 400] [--repeat 5]
"""
import argparse
import math
import timeit

import numpy as np

from spherewaves import _kernels_py, nodal
from spherewaves.rng import RngStream
from spherewaves.sphere_field import sample_coefficients

try:
    from spherewaves import _ckernels
except ImportError:
    _ckernels = None


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ells", type=int, nargs="+", default=[50, 200, 400])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = {"python": _kernels_py}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    else:
        print("compiled extension not built; timing the python backend only")

    print(f"{'kernel':<16}{'ell':>6}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}{'max|diff|':>12}")
    for ell in args.ells:
        theta = np.linspace(1e-3, math.pi - 1e-3, 2 * ell + 1)
        times, outs = [], []
        for mod in backends.values():
            times.append(_best(lambda: mod.order_table(ell, theta), args.repeat))
            outs.append(mod.order_table(ell, theta)[0])
        _row("order_table", ell, times, outs)

        grid = nodal.contour_grid(ell).populated(sample_coefficients(ell, RngStream.for_replication(0, "bench", ell)))
        signs, _ = nodal._saddle_centers(grid, grid.values)
        times, outs = [], []
        for mod in backends.values():
            fn = lambda: mod.contour_length(grid.values, grid.theta, grid.dphi, signs, 1.0, False)
            times.append(_best(fn, args.repeat))
            outs.append(np.array([fn()[0]]))
        _row("contour_length", ell, times, outs)


def _row(name, ell, times, outs):
    speed = times[0] / times[-1] if len(times) > 1 else float("nan")
    diff = float(np.max(np.abs(outs[0] - outs[-1]))) if len(outs) > 1 else 0.0
    print(f"{name:<16}{ell:>6}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times) + f"{speed:>9.1f}x{diff:>12.2e}")


if __name__ == "__main__":
    main()
