"""Run the z-odd, upper-half-positive data forward and watch sup|omega|.

Reports whether the run hit the numerical blowup threshold and, if the
tail is monotone, a power-law rate fit.  Nothing is asserted.
"""
import argparse
import json
from pathlib import Path

from axieuler.core_fields import Grid2D, make_dimension_params
from axieuler.diagnostics import FitRejected, blowup_rate_fit, write_series_csv
from axieuler.euler_rz import SimulationConfig, run_simulation


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=4)
    ap.add_argument("--n", type=int, default=96, help="radial cells; z uses 2n")
    ap.add_argument("--box", type=float, default=6.0)
    ap.add_argument("--t-end", type=float, default=4.0)
    ap.add_argument("--cfl", type=float, default=0.5)
    ap.add_argument("--preset", default="odd-positive-regular")
    ap.add_argument("--blowup-factor", type=float, default=1e6)
    ap.add_argument("--out", default="out/conjecture")
    args = ap.parse_args()

    cfg = SimulationConfig(make_dimension_params(args.d), Grid2D(args.n, 2 * args.n, args.box, args.box),
                           args.t_end, args.preset, cfl=args.cfl, blowup_factor=args.blowup_factor)
    res = run_simulation(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_series_csv(res.series, out / "series.csv")

    s0 = res.series[0].sup_omega
    for rec in res.series[:: max(1, len(res.series) // 12)]:
        print(f"t={rec.t:8.4f}  sup|omega|/sup|omega0|={rec.sup_omega / s0:10.4f}  R(t)={rec.support_radius:.3f}")
    summary = {"status": res.status, "t_final": res.series[-1].t,
               "growth": res.series[-1].sup_omega / s0}
    try:
        T, p = blowup_rate_fit(res.series)
        summary["fit"] = {"t_max": T, "p": p}
    except FitRejected as exc:
        summary["fit"] = {"rejected": str(exc)}
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
