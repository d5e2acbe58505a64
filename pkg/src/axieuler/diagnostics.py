"""Growth bounds, regularity lower bounds, support-radius envelopes and
blowup-rate fits, evaluated against simulation series."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .biot_savart import cd_constant
from .core_fields import (
    DimensionParams,
    ScalarField2D,
    cylinder_mask,
    lorentz_norm_d1,
    support_measure,
    support_radius,
)

SERIES_HEADER = ["t", "sup_omega", "lorentz_d1", "sup_xi", "support_radius",
                 "bound_3reg", "bound_local", "margin"]
PROBE_FACTORS = (0.25, 0.5, 1.0, 2.0, 4.0)
SUPPORT_THRESHOLD = 1e-6


class BoundExpired(ValueError):
    """The estimate carries no information at the requested time."""


class FitRejected(ValueError):
    pass


@dataclass
class DiagnosticsRecord:
    t: float
    sup_omega: float
    lorentz_d1_omega: float
    sup_xi: float
    lorentz_d1_xi: float
    support_radius: float
    bound_values: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        finite = [m for m in self.margins.values() if not math.isnan(m)]
        return min(finite) if finite else math.inf


@dataclass(frozen=True)
class InitialDataStats:
    radii: tuple
    sup_omega0_outside_R: tuple
    sup_xi0_inside_R: tuple
    lorentz_omega0_outside_R: tuple
    lorentz_xi0_inside_R: tuple
    lorentz_xi0_global: float
    support_measure: float
    r0: float
    sup_xi0: float

    def __post_init__(self):
        vals = (self.sup_omega0_outside_R + self.sup_xi0_inside_R + self.lorentz_omega0_outside_R
                + self.lorentz_xi0_inside_R + (self.lorentz_xi0_global, self.support_measure,
                                                self.r0, self.sup_xi0))
        if any(v < 0 for v in vals):
            raise ValueError("initial-data statistics must be non-negative")

    def split(self, R: float) -> tuple[float, float, float, float]:
        """(sup omega0 outside C_R, sup xi0 inside, L^{d,1} omega0 outside, L^{d,1} xi0 inside)."""
        for i, Ri in enumerate(self.radii):
            if math.isclose(Ri, R, rel_tol=1e-12):
                return (self.sup_omega0_outside_R[i], self.sup_xi0_inside_R[i],
                        self.lorentz_omega0_outside_R[i], self.lorentz_xi0_inside_R[i])
        raise KeyError(f"no statistics recorded for R = {R}")

    @classmethod
    def single(cls, R, sup_out, sup_in, lor_out, lor_in, lorentz_xi0_global=0.0,
               support_measure=0.0, r0=0.0, sup_xi0=None):
        return cls((R,), (sup_out,), (sup_in,), (lor_out,), (lor_in,), lorentz_xi0_global,
                   support_measure, r0, sup_in if sup_xi0 is None else sup_xi0)


def initial_data_stats(omega0: ScalarField2D, dims: DimensionParams,
                       radii=None, threshold_rel: float = SUPPORT_THRESHOLD) -> InitialDataStats:
    g = omega0.grid
    xi0 = omega0.with_values(omega0.values / g.r_nodes[:, None] ** dims.k)
    sup_xi = xi0.sup()
    thr = threshold_rel * sup_xi
    r0 = support_radius(xi0, thr)
    if radii is None:
        base = r0 if r0 > 0 else g.r_max / 2
        radii = tuple(f * base for f in PROBE_FACTORS)
    cols = [[], [], [], []]
    a = np.abs(omega0.values)
    b = np.abs(xi0.values)
    for R in radii:
        inside = cylinder_mask(g, R)
        cols[0].append(float(a[~inside].max()) if (~inside).any() else 0.0)
        cols[1].append(float(b[inside].max()) if inside.any() else 0.0)
        cols[2].append(lorentz_norm_d1(omega0, dims, ~inside))
        cols[3].append(lorentz_norm_d1(xi0, dims, inside))
    return InitialDataStats(
        radii=tuple(float(R) for R in radii),
        sup_omega0_outside_R=tuple(cols[0]),
        sup_xi0_inside_R=tuple(cols[1]),
        lorentz_omega0_outside_R=tuple(cols[2]),
        lorentz_xi0_inside_R=tuple(cols[3]),
        lorentz_xi0_global=lorentz_norm_d1(xi0, dims),
        support_measure=support_measure(xi0, dims, thr),
        r0=r0,
        sup_xi0=sup_xi,
    )


# -- bounds ------------------------------------------------------------------

def _max_term(dims, stats, R):
    sup_out, sup_in, _, _ = stats.split(R)
    return max(sup_out, R**dims.k * sup_in)


def _mu(dims, stats, R):
    _, _, lor_out, lor_in = stats.split(R)
    return cd_constant(dims) / R * (lor_out + R**dims.k * lor_in)


def growth_bound(dims: DimensionParams, stats: InitialDataStats, R: float, u_time_integral: float) -> float:
    """max(|omega0|_{C_R^c}, R^k |xi0|_{C_R}) * (1 + (1/R) int |u|_inf)^k.

    Passing the time integral of sup u_r^+ instead gives the sharper variant.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    if u_time_integral < 0:
        raise ValueError("time integral must be non-negative")
    return _max_term(dims, stats, R) * (1 + u_time_integral / R) ** dims.k


def local_existence_bound(dims: DimensionParams, stats: InitialDataStats, R: float, t: float):
    """(bound on sup|omega(t)|, guaranteed existence time t_star).

    For d >= 4 the bound is max-term / (1 - (d-3) mu t)^((d-2)/(d-3)) and
    expires at t_star = 1 / ((d-3) mu).  For d = 3 it is max-term * exp(mu t)
    and never expires.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    if t < 0:
        raise ValueError("t must be non-negative")
    M = _max_term(dims, stats, R)
    mu = _mu(dims, stats, R)
    if dims.d == 3:
        return M * math.exp(mu * t), math.inf
    t_star = math.inf if mu == 0 else 1.0 / ((dims.d - 3) * mu)
    if t >= t_star:
        raise BoundExpired(f"t = {t} is past t_star = {t_star}")
    den = (1 - (dims.d - 3) * mu * t) ** ((dims.d - 2) / (dims.d - 3))
    return M / den, t_star


def criterion_lower_bound(dims: DimensionParams, lorentz_xi0_global: float, t_max: float, t: float) -> float:
    """Minimal L^{d,1} size of omega(t) if the solution blows up at t_max."""
    d, k = dims.d, dims.k
    if d < 4:
        raise ValueError("the lower bound needs d >= 4")
    if not 0 <= t < t_max:
        raise ValueError("t must lie in [0, t_max)")
    pref = 1.0 / (k ** (k / (k - 1)) * (d - 3) ** (1 / (d - 3)) * cd_constant(dims) ** ((d - 2) / (d - 3)))
    return pref * lorentz_xi0_global ** (-1 / (d - 3)) * (t_max - t) ** (-(d - 2) / (d - 3))


def support_rate(dims: DimensionParams, stats: InitialDataStats) -> float:
    return dims.d * cd_constant(dims) * stats.support_measure ** (1 / dims.d) * stats.sup_xi0


def support_ode_bound(dims: DimensionParams, stats: InitialDataStats, t: float, a: float | None = None) -> float:
    """Envelope for the support radius from R' <= a R^k, R(0) = r0."""
    a = support_rate(dims, stats) if a is None else a
    R0, k = stats.r0, dims.k
    if t < 0:
        raise ValueError("t must be non-negative")
    if a == 0 or t == 0:
        return R0
    if k == 1:
        return R0 * math.exp(a * t)
    base = 1 - (k - 1) * a * R0 ** (k - 1) * t
    if base <= 0:
        raise BoundExpired("support envelope is past its singular time")
    return R0 * base ** (-1 / (k - 1))


# -- per-step recording ------------------------------------------------------

class SeriesRecorder:
    """Builds DiagnosticsRecords along a run, accumulating int |u|_inf dt by
    the trapezoid rule over the recorded calls."""

    def __init__(self, omega0: ScalarField2D, dims: DimensionParams, radii=None):
        self.dims = dims
        self.stats = initial_data_stats(omega0, dims, radii)
        self.threshold = SUPPORT_THRESHOLD * self.stats.sup_xi0
        self._last = None
        self.u_integral = 0.0
        self.ur_plus_integral = 0.0

    def _tightest(self, fn):
        vals = []
        for R in self.stats.radii:
            try:
                vals.append(fn(R))
            except BoundExpired:
                vals.append(math.inf)
        return min(vals) if vals else math.inf

    def __call__(self, t, omega, xi, u) -> DiagnosticsRecord:
        dims = self.dims
        usup = u.sup()
        urp = float(max(np.max(u.u_r.values), 0.0))
        if self._last is not None:
            t0, u0, p0 = self._last
            self.u_integral += 0.5 * (t - t0) * (usup + u0)
            self.ur_plus_integral += 0.5 * (t - t0) * (urp + p0)
        self._last = (t, usup, urp)

        sup_w = omega.sup()
        rec = DiagnosticsRecord(
            t=t,
            sup_omega=sup_w,
            lorentz_d1_omega=lorentz_norm_d1(omega, dims),
            sup_xi=xi.sup(),
            lorentz_d1_xi=lorentz_norm_d1(xi, dims),
            support_radius=support_radius(xi, self.threshold),
        )
        radii = [R for R in self.stats.radii if R > 0]
        b = rec.bound_values
        if dims.d == 3:
            b["bound_3reg"] = self._tightest(lambda R: local_existence_bound(dims, self.stats, R, t)[0])
            b["bound_local"] = math.nan
        else:
            b["bound_3reg"] = math.nan
            b["bound_local"] = self._tightest(lambda R: local_existence_bound(dims, self.stats, R, t)[0])
        b["growth"] = min(growth_bound(dims, self.stats, R, self.u_integral) for R in radii)
        b["growth_ur_plus"] = min(growth_bound(dims, self.stats, R, self.ur_plus_integral) for R in radii)
        try:
            b["support_envelope"] = support_ode_bound(dims, self.stats, t)
        except BoundExpired:
            b["support_envelope"] = math.inf
        for name in ("bound_3reg", "bound_local", "growth", "growth_ur_plus"):
            rec.margins[name] = b[name] - sup_w
        rec.margins["support_envelope"] = b["support_envelope"] - rec.support_radius
        rec.extras = {"u_sup": usup, "ur_plus_sup": urp, "u_time_integral": self.u_integral,
                      "f": {R: 1 + self.u_integral / R for R in radii},
                      "mu": {R: _mu(dims, self.stats, R) for R in radii}}
        return rec


# -- series I/O --------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def write_series_csv(series, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_HEADER)
        for r in series:
            w.writerow([_fmt(v) for v in (r.t, r.sup_omega, r.lorentz_d1_omega, r.sup_xi,
                                          r.support_radius, r.bound_values.get("bound_3reg", math.nan),
                                          r.bound_values.get("bound_local", math.nan), r.margin)])


def read_series_csv(path) -> list[DiagnosticsRecord]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SERIES_HEADER:
            raise ValueError(f"unexpected series header {reader.fieldnames}")
        for row in reader:
            v = {k: float(x) for k, x in row.items()}
            rec = DiagnosticsRecord(v["t"], v["sup_omega"], v["lorentz_d1"], v["sup_xi"], math.nan,
                                    v["support_radius"],
                                    {"bound_3reg": v["bound_3reg"], "bound_local": v["bound_local"]})
            for name in ("bound_3reg", "bound_local"):
                rec.margins[name] = rec.bound_values[name] - rec.sup_omega
            rec.extras["margin"] = v["margin"]
            out.append(rec)
    return out


# -- blowup rate -------------------------------------------------------------

def _fit_power(t, y, T):
    x = np.log(T - t)
    ly = np.log(y)
    A = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - A @ coef
    return float(res @ res), -float(coef[1])


def fit_power_law(t, y, window: int = 20) -> tuple[float, float]:
    """Fit y ~ A (T - t)^(-p); returns (T, p)."""
    t = np.asarray(t, dtype=float)[-window:]
    y = np.asarray(y, dtype=float)[-window:]
    if len(t) < 4:
        raise FitRejected("need at least 4 samples")
    if not np.all(np.isfinite(y)) or np.any(y <= 0):
        raise FitRejected("samples must be finite and positive")
    if not np.all(np.diff(y) > 0):
        raise FitRejected("tail is not strictly increasing")
    span = t[-1] - t[0]
    if span <= 0:
        raise FitRejected("times must increase")
    # scan the gap T - t_last on a log scale, then refine by golden section
    gaps = np.geomspace(1e-9 * span, 1e3 * span, 241)
    rss = np.array([_fit_power(t, y, t[-1] + g)[0] for g in gaps])
    i = int(np.argmin(rss))
    if i == len(gaps) - 1:
        raise FitRejected("no finite blowup time fits the tail")
    lo = math.log(gaps[max(i - 1, 0)])
    hi = math.log(gaps[min(i + 1, len(gaps) - 1)])
    invphi = (math.sqrt(5) - 1) / 2
    f = lambda lg: _fit_power(t, y, t[-1] + math.exp(lg))[0]
    c, d = hi - invphi * (hi - lo), lo + invphi * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(80):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = f(d)
    T = t[-1] + math.exp(0.5 * (lo + hi))
    _, p = _fit_power(t, y, T)
    if p <= 0:
        raise FitRejected("fitted exponent is not positive")
    return float(T), float(p)


def blowup_rate_fit(series, window: int = 20) -> tuple[float, float]:
    """(T, p) for sup|omega| ~ A (T - t)^(-p) over the last `window` records."""
    t = [r.t for r in series]
    y = [r.sup_omega for r in series]
    return fit_power_law(t, y, window)
