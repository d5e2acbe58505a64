"""Refinement study for the stream solve and the epsilon-formulation residual."""
import argparse
import math

import numpy as np

from axieuler.core_fields import Grid2D, make_dimension_params
from axieuler.euler_rz import velocity_from_vorticity
from axieuler.perturbation import formulation_residual
from axieuler.presets import get_preset, vorticity_field


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=int, nargs="+", default=[3, 4, 6, 10])
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    args = ap.parse_args()

    preset = get_preset("schwartz-example")
    for d in args.dims:
        dims = make_dimension_params(d)
        prev = None
        print(f"d={d}")
        for n in args.sizes:
            g = Grid2D(n, 2 * n, 6.0, 6.0)
            w = vorticity_field("schwartz-example", g, dims)
            R, Z = g.mesh()
            ur, uz = preset.velocity(R, Z, dims)
            u = velocity_from_vorticity(w, dims)
            err = max(np.abs(u.u_r.values - ur).max(), np.abs(u.u_z.values - uz).max()) / np.hypot(ur, uz).max()
            res = formulation_residual(w, dims)
            orders = "" if prev is None else f"  orders {math.log2(prev[0] / err):.2f} {math.log2(prev[1] / res):.2f}"
            print(f"  {n:5d}x{2 * n:<5d} velocity err {err:.3e}  residual {res:.3e}{orders}")
            prev = (err, res)


if __name__ == "__main__":
    main()
