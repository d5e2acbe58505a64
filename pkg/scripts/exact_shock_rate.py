"""Shock formation in the exact infinite-dimensional solution: sup|d_z phi|
against 1/(T - t), with a power-law fit of the approach."""
import argparse

import numpy as np

from axieuler.diagnostics import fit_power_law
from axieuler.exact_infinite import blowup_time, eval_dz_phi, eval_omega, potential_preset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="bkm-counterexample")
    ap.add_argument("--n", type=int, default=257)
    args = ap.parse_args()

    sol = blowup_time(potential_preset(args.preset))
    hint = tuple(float(x) for x in sol.argmin_hint) if sol.argmin_hint else None
    print(f"T_max = {sol.t_max!r}  argmin = {hint}")
    if not np.isfinite(sol.t_max):
        return
    R, Z = np.meshgrid(np.linspace(0, 3, args.n), np.linspace(-3, 3, 4 * args.n - 3), indexing="ij")
    gaps = np.geomspace(0.5, 1e-4, 13) * sol.t_max
    ts, ys = [], []
    print("      T-t     sup|d_z phi|  (T-t)*sup   sup|omega|")
    for gap in gaps:
        t = sol.t_max - gap
        s = float(np.abs(eval_dz_phi(sol, R, Z, t)).max())
        w = float(np.abs(eval_omega(sol, R, Z, t)).max())
        ts.append(t)
        ys.append(s)
        print(f"  {gap:9.2e}  {s:12.5e}  {gap * s:9.6f}  {w:10.6f}")
    T, p = fit_power_law(ts, ys, window=len(ts))
    print(f"fit: T = {T:.8f}, p = {p:.6f}")


if __name__ == "__main__":
    main()
