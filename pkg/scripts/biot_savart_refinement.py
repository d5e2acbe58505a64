"""Grid and quadrature refinement of the Biot-Savart velocity on the
Schwartz-class test field, against its closed-form velocity."""
import argparse
import math
import time

import numpy as np

from axieuler.biot_savart import KernelQuadrature, velocity_general
from axieuler.core_fields import Grid2D, make_dimension_params
from axieuler.presets import get_preset, vorticity_field

PROBES = np.array([(r, z) for r in (0.3, 0.7, 1.0, 1.4, 2.0) for z in (-1.3, -0.4, 0.2, 0.8, 1.5)])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=4)
    ap.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128])
    ap.add_argument("--n-cell", type=int, nargs="+", default=[1, 2])
    args = ap.parse_args()

    dims = make_dimension_params(args.d)
    preset = get_preset("schwartz-example")
    ur, uz = preset.velocity(PROBES[:, 0], PROBES[:, 1], dims)
    scale = np.hypot(ur, uz).max()
    print(f"d={args.d}  n_cell  nr     rel.err    order  seconds")
    for nc in args.n_cell:
        prev = None
        for n in args.sizes:
            g = Grid2D(n, 2 * n, 6.0, 6.0)
            t0 = time.perf_counter()
            u = velocity_general(vorticity_field("schwartz-example", g, dims), dims, PROBES,
                                 KernelQuadrature(n_cell=nc))
            el = time.perf_counter() - t0
            err = np.hypot(u[:, 0] - ur, u[:, 1] - uz).max() / scale
            order = "" if prev is None else f"{math.log2(prev / err):5.2f}"
            print(f"      {nc:6d}  {n:5d}  {err:.3e}  {order:>5}  {el:7.2f}")
            prev = err


if __name__ == "__main__":
    main()
