"""Command-line scenario runner.

Exit codes: 0 finished, 2 declared numerical blowup, 1 error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import diagnostics, exact_infinite, perturbation, presets
from .biot_savart import KernelQuadrature, cd_constant, velocity_general, velocity_odd
from .core_fields import Grid2D, make_dimension_params, read_field_csv, write_field_csv
from .euler_rz import SimulationConfig, run_simulation

EXIT_OK, EXIT_ERROR, EXIT_BLOWUP = 0, 1, 2

_INT_KEYS = {"d", "nr", "nz", "output_stride"}
_FLOAT_KEYS = {"r_max", "z_max", "dt", "cfl", "t_end", "blowup_factor", "stream_solver_tol"}
_STR_KEYS = {"preset", "out_dir"}
SIM_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS
SIM_REQUIRED = ("d", "nr", "nz", "r_max", "z_max", "t_end", "preset")
GRID_KEYS = {"d", "nr", "nz", "r_max", "z_max", "preset", "stream_solver_tol"}


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _read_pairs(path) -> tuple[dict, list]:
    pairs, errors = {}, []
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {n}: expected key=value")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if key in pairs:
            errors.append(f"line {n}: duplicate key {key!r}")
        pairs[key] = value
    return pairs, errors


def _convert(pairs: dict, allowed: set, errors: list) -> dict:
    out = {}
    for key, value in pairs.items():
        if key not in allowed:
            errors.append(f"unknown key {key!r}")
            continue
        try:
            if key in _INT_KEYS:
                out[key] = int(value)
            elif key in _FLOAT_KEYS:
                out[key] = float(value)
            else:
                out[key] = value
        except ValueError:
            errors.append(f"{key}: cannot parse {value!r}")
    return out


def _grid_and_dims(vals: dict, errors: list):
    dims = grid = None
    if "d" in vals:
        if vals["d"] < 3:
            errors.append(f"d: must be >= 3, got {vals['d']}")
        else:
            dims = make_dimension_params(vals["d"])
    for key in ("nr", "nz"):
        if key in vals and vals[key] < 3:
            errors.append(f"{key}: must be >= 3")
    if "nz" in vals and vals["nz"] % 2:
        errors.append("nz: must be even so the z grid is symmetric about 0")
    for key in ("r_max", "z_max"):
        if key in vals and not vals[key] > 0:
            errors.append(f"{key}: must be positive")
    if "preset" in vals and vals["preset"] not in presets.PRESETS:
        errors.append(f"preset: unknown {vals['preset']!r}")
    if not errors and all(k in vals for k in ("nr", "nz", "r_max", "z_max")):
        grid = Grid2D(vals["nr"], vals["nz"], vals["r_max"], vals["z_max"])
    return dims, grid


def parse_config(path) -> SimulationConfig:
    """Validated simulation config, or ConfigError listing every problem."""
    pairs, errors = _read_pairs(path)
    vals = _convert(pairs, SIM_KEYS, errors)
    for key in SIM_REQUIRED:
        if key not in vals:
            errors.append(f"missing required key {key!r}")
    if ("dt" in vals) == ("cfl" in vals):
        errors.append("exactly one of dt and cfl must be given")
    dims, grid = _grid_and_dims(vals, errors)
    if errors:
        raise ConfigError(errors)
    kw = {k: vals[k] for k in ("dt", "cfl", "output_stride", "stream_solver_tol",
                               "blowup_factor", "out_dir") if k in vals}
    try:
        return SimulationConfig(dims=dims, grid=grid, t_end=vals["t_end"], preset=vals["preset"], **kw)
    except ValueError as exc:
        raise ConfigError(str(exc).split("; ")) from None


def parse_grid_config(path) -> dict:
    """Grid-only subset used by perturbation-check."""
    pairs, errors = _read_pairs(path)
    pairs = {k: v for k, v in pairs.items() if k in GRID_KEYS or k in SIM_KEYS}
    vals = _convert(pairs, SIM_KEYS, errors)
    for key in ("d", "nr", "nz", "r_max", "z_max"):
        if key not in vals:
            errors.append(f"missing required key {key!r}")
    dims, grid = _grid_and_dims(vals, errors)
    if errors:
        raise ConfigError(errors)
    return {"dims": dims, "grid": grid, "preset": vals.get("preset", "schwartz-example"),
            "tol": vals.get("stream_solver_tol", 1e-10)}


def write_config(config: SimulationConfig, path=None) -> str:
    g = config.grid
    lines = [f"d={config.dims.d}", f"nr={g.nr}", f"nz={g.nz}", f"r_max={g.r_max!r}",
             f"z_max={g.z_max!r}"]
    lines.append(f"dt={config.dt!r}" if config.dt is not None else f"cfl={config.cfl!r}")
    lines += [f"t_end={config.t_end!r}", f"preset={config.preset}",
              f"output_stride={config.output_stride}",
              f"stream_solver_tol={config.stream_solver_tol!r}",
              f"blowup_factor={config.blowup_factor!r}"]
    if config.out_dir is not None:
        lines.append(f"out_dir={config.out_dir}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def _json_num(x: float):
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return str(x)
    return x


def _dump(obj) -> str:
    def clean(o):
        if isinstance(o, dict):
            return {str(k): clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        if isinstance(o, (float, np.floating)):
            return _json_num(o)
        if isinstance(o, np.integer):
            return int(o)
        return o
    return json.dumps(clean(obj), sort_keys=True)


# -- scenarios ---------------------------------------------------------------

def _series_summary(series, window: int = 20) -> dict:
    last = series[-1]
    names = sorted({n for r in series for n in r.margins})
    mins = {}
    for n in names:
        vals = [r.margins[n] for r in series if n in r.margins and not math.isnan(r.margins[n])]
        mins[n] = min(vals) if vals else math.nan
    try:
        T, p = diagnostics.blowup_rate_fit(series, window)
        fit = {"t_max": T, "p": p}
    except diagnostics.FitRejected as exc:
        fit = {"rejected": str(exc)}
    return {"bounds": dict(last.bound_values), "margins": mins, "fit": fit}


def scenario_simulate(config: SimulationConfig, out_dir=None) -> int:
    out = Path(out_dir or config.out_dir or "out")
    out.mkdir(parents=True, exist_ok=True)
    result = run_simulation(config)
    diagnostics.write_series_csv(result.series, out / "series.csv")
    write_field_csv(result.snapshots[0][1], out / "omega_initial.csv")
    write_field_csv(result.snapshots[-1][1], out / "omega_final.csv")
    report = _series_summary(result.series)
    report.update(status=result.status, t_final=result.series[-1].t, d=config.dims.d,
                  preset=config.preset, records=len(result.series))
    (out / "diagnostics.json").write_text(_dump(report) + "\n")
    print(_dump(report))
    return EXIT_BLOWUP if result.status == "blowup" else EXIT_OK


def scenario_exact(preset: str, times, grid_shape=(512, 1024), box=None, fit_window=20) -> dict:
    spec = presets.get_preset(preset)
    if spec.potential is None:
        raise ValueError(f"preset {preset!r} has no closed-form potential")
    pot = spec.potential()
    sol = exact_infinite.blowup_time(pot, box)
    r_max, z_max = box or pot.search_box
    nr, nz = grid_shape
    R, Z = np.meshgrid(np.linspace(0, r_max, nr), np.linspace(-z_max, z_max, nz), indexing="ij")
    report = {"preset": preset, "t_max": sol.t_max, "inf_dz_phi0": sol.inf_dz_phi0,
              "argmin": list(sol.argmin_hint) if sol.argmin_hint else None,
              "times": [], "sup_omega": [], "sup_dz_phi": [], "bkm_lower_bound": []}
    w0 = float(pot.omega0(*sol.argmin_hint)) if sol.argmin_hint else 0.0
    for t in times:
        if t >= sol.t_max:
            continue
        report["times"].append(t)
        report["sup_omega"].append(float(np.max(np.abs(exact_infinite.eval_omega(sol, R, Z, t)))))
        report["sup_dz_phi"].append(float(np.max(np.abs(exact_infinite.eval_dz_phi(sol, R, Z, t)))))
        if math.isfinite(sol.t_max):
            report["bkm_lower_bound"].append(exact_infinite.bkm_lower_bound(w0, sol.t_max, t))
    try:
        T, p = diagnostics.fit_power_law(report["times"], report["sup_dz_phi"], fit_window)
        report["shock_fit"] = {"t_max": T, "p": p}
    except diagnostics.FitRejected as exc:
        report["shock_fit"] = {"rejected": str(exc)}
    return report


def scenario_perturbation(path) -> dict:
    cfg = parse_grid_config(path)
    omega = presets.vorticity_field(cfg["preset"], cfg["grid"], cfg["dims"])
    res = perturbation.formulation_residual(omega, cfg["dims"], cfg["tol"])
    g = cfg["grid"]
    return {"d": cfg["dims"].d, "eps": cfg["dims"].epsilon, "residual": res,
            "grid": {"nr": g.nr, "nz": g.nz, "r_max": g.r_max, "z_max": g.z_max}}


def run_scenario(name: str, config, **kw) -> int:
    """Run one named scenario; returns the process exit code."""
    if name == "simulate":
        return scenario_simulate(config, kw.get("out_dir"))
    if name == "exact":
        print(_dump(scenario_exact(config, kw.get("times", (0.5, 0.9, 0.99, 0.999)))))
        return EXIT_OK
    if name == "perturbation-check":
        print(_dump(scenario_perturbation(config)))
        return EXIT_OK
    raise ValueError(f"unknown scenario {name!r}")


# -- entry point -------------------------------------------------------------

def _floats(text: str):
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="axieuler", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="time-step a preset and write series/snapshots")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir")

    p = sub.add_parser("exact", help="exact infinite-dimensional solution of a potential preset")
    p.add_argument("--preset", default="bkm-counterexample")
    p.add_argument("--times", type=_floats, default=[0.5, 0.9, 0.99, 0.999])
    p.add_argument("--nr", type=int, default=512)
    p.add_argument("--nz", type=int, default=1024)
    p.add_argument("--box", type=_floats, help="r_max,z_max of the probe box")
    p.add_argument("--out")

    p = sub.add_parser("biot-savart", help="velocity at points from a vorticity CSV")
    p.add_argument("--field", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--points", required=True, help="CSV with header r,z")
    p.add_argument("--odd", action="store_true", help="field is the upper half of z-odd data")
    p.add_argument("--n-tau", type=int, default=16)
    p.add_argument("--n-cell", type=int, default=1)
    p.add_argument("--out")

    p = sub.add_parser("diagnose", help="bounds, margins and rate fit of a series CSV")
    p.add_argument("--series", required=True)
    p.add_argument("--window", type=int, default=20)

    p = sub.add_parser("perturbation-check", help="epsilon-formulation residual on a preset")
    p.add_argument("--config", required=True)

    p = sub.add_parser("constants", help="dimension constants")
    p.add_argument("--d", type=int, nargs="+", default=[3, 4, 5, 6])

    sub.add_parser("presets", help="list presets")
    return ap


def _emit(text: str, out=None):
    if out:
        Path(out).write_text(text + ("" if text.endswith("\n") else "\n"))
    else:
        print(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return scenario_simulate(parse_config(args.config), args.out_dir)
        if args.command == "exact":
            box = tuple(args.box) if args.box else None
            _emit(_dump(scenario_exact(args.preset, args.times, (args.nr, args.nz), box)), args.out)
        elif args.command == "biot-savart":
            field = read_field_csv(args.field)
            dims = make_dimension_params(args.d)
            pts = np.loadtxt(args.points, delimiter=",", skiprows=1, ndmin=2)
            quad = KernelQuadrature(n_tau=args.n_tau, n_cell=args.n_cell)
            fn = velocity_odd if args.odd else velocity_general
            u = fn(field, dims, pts, quad)
            rows = ["r,z,u_r,u_z"] + [",".join(repr(float(x)) for x in (p[0], p[1], v[0], v[1]))
                                       for p, v in zip(pts, u)]
            _emit("\n".join(rows), args.out)
        elif args.command == "diagnose":
            series = diagnostics.read_series_csv(args.series)
            _emit(_dump(_series_summary(series, args.window)))
        elif args.command == "perturbation-check":
            _emit(_dump(scenario_perturbation(args.config)))
        elif args.command == "constants":
            rows = []
            for d in args.d:
                dims = make_dimension_params(d)
                rows.append({"d": d, "k": dims.k, "epsilon": dims.epsilon, "alpha_d": dims.alpha_d,
                             "m_dm2": dims.m_dm2, "m_dm3": dims.m_dm3, "c_d": cd_constant(dims)})
            _emit(_dump(rows))
        elif args.command == "presets":
            for p in presets.list_presets():
                print(f"{p.name}\t{p.kind}\t{p.description}")
        return EXIT_OK
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # surfaced as exit 1 with the message
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
