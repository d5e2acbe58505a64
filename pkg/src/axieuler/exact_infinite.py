"""Exact solution of the infinite-dimensional vorticity model.

With ``phi = -int_r^inf omega`` the model is Burgers' equation in z at each
fixed r, so characteristics give everything in closed form once the
back-to-labels map ``h = g^{-1}``, ``g(y) = y + t phi0(r, y)``, is inverted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .core_fields import ScalarField2D


class BlowupExceeded(ValueError):
    """Requested time is at or beyond the blowup time of the exact solution."""


class NumericalError(RuntimeError):
    pass


Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    phi0: Evaluator
    dz_phi0: Evaluator
    omega0: Evaluator
    label: str = "custom"
    search_box: tuple[float, float] = (8.0, 8.0)


@dataclass(frozen=True, eq=False)
class ExactSolution:
    spec: PotentialSpec
    t_max: float
    argmin_hint: tuple[float, float] | None = None
    inf_dz_phi0: float = 0.0


# -- presets -----------------------------------------------------------------

def bkm_counterexample() -> PotentialSpec:
    """phi0 = -z exp(-r^2 - z^2): bounded vorticity, blowup at t = 1."""
    return PotentialSpec(
        phi0=lambda r, z: -z * np.exp(-r * r - z * z),
        dz_phi0=lambda r, z: -(1 - 2 * z * z) * np.exp(-r * r - z * z),
        omega0=lambda r, z: 2 * r * z * np.exp(-r * r - z * z),
        label="bkm-counterexample",
    )


def global_monotone(amplitude: float = 0.1) -> PotentialSpec:
    """phi0 = a tanh(z) exp(-r^2): increasing in z, so no shock forms."""
    return PotentialSpec(
        phi0=lambda r, z: amplitude * np.tanh(z) * np.exp(-r * r),
        dz_phi0=lambda r, z: amplitude * np.exp(-r * r) / np.cosh(z) ** 2,
        omega0=lambda r, z: -2 * amplitude * r * np.tanh(z) * np.exp(-r * r),
        label="global-monotone",
    )


def zero_potential() -> PotentialSpec:
    zero = lambda r, z: np.zeros(np.broadcast(r, z).shape)
    return PotentialSpec(zero, zero, zero, label="zero")


POTENTIAL_PRESETS = {
    "bkm-counterexample": bkm_counterexample,
    "global-monotone": global_monotone,
    "zero": zero_potential,
}


def potential_preset(name: str) -> PotentialSpec:
    try:
        return POTENTIAL_PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown potential preset {name!r}; known: {sorted(POTENTIAL_PRESETS)}") from None


# -- blowup time -------------------------------------------------------------

def _golden(f, a, b, iters=40):
    invphi = (math.sqrt(5) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2


def blowup_time(spec: PotentialSpec, search_box: tuple[float, float] | None = None,
                refine_tol: float = 1e-12, n_scan: int = 512) -> ExactSolution:
    """Locate inf d_z phi0 on [0, r_max] x [-z_max, z_max]; T_max = -1 / inf."""
    r_max, z_max = search_box or spec.search_box
    r = np.linspace(0.0, r_max, n_scan)
    z = np.linspace(-z_max, z_max, n_scan)
    R, Z = np.meshgrid(r, z, indexing="ij")
    vals = np.asarray(spec.dz_phi0(R, Z), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("dz_phi0 evaluator returned non-finite values")
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    best = float(vals[i, j])
    if best >= -1e-14:
        return ExactSolution(spec, math.inf, None, best)
    hr, hz = r[1] - r[0], z[1] - z[0]
    r0, z0 = float(r[i]), float(z[j])
    f = lambda a, b: float(spec.dz_phi0(np.float64(a), np.float64(b)))
    lo_r, hi_r = max(r0 - hr, 0.0), min(r0 + hr, r_max)
    lo_z, hi_z = z0 - hz, z0 + hz
    for _ in range(8):
        r1 = _golden(lambda x: f(x, z0), lo_r, hi_r)
        z1 = _golden(lambda y: f(r1, y), lo_z, hi_z)
        moved = abs(r1 - r0) + abs(z1 - z0)
        r0, z0 = r1, z1
        lo_r, hi_r = max(r0 - hr / 4, 0.0), min(r0 + hr / 4, r_max)
        lo_z, hi_z = z0 - hz / 4, z0 + hz / 4
        if moved < refine_tol:
            break
    # golden section cannot land exactly on a bracket end such as the axis
    for cand in ((0.0, z0), (r0, 0.0), (0.0, 0.0)):
        if f(*cand) < f(r0, z0):
            r0, z0 = cand
    inf_val = min(f(r0, z0), best)
    return ExactSolution(spec, -1.0 / inf_val, (r0, z0), inf_val)


@lru_cache(maxsize=64)
def _cached_solution(spec: PotentialSpec) -> ExactSolution:
    return blowup_time(spec)


@lru_cache(maxsize=64)
def _sup_phi0(spec: PotentialSpec) -> float:
    r_max, z_max = spec.search_box
    R, Z = np.meshgrid(np.linspace(0, r_max, 257), np.linspace(-z_max, z_max, 513), indexing="ij")
    return float(np.max(np.abs(spec.phi0(R, Z))))


def _as_solution(obj) -> ExactSolution:
    return obj if isinstance(obj, ExactSolution) else _cached_solution(obj)


# -- characteristics ---------------------------------------------------------

def invert_back_to_labels(spec, r, z, t, t_max: float | None = None, max_iter: int = 100):
    """Label y with z = y + t phi0(r, y), by bracketed Newton with bisection fallback.

    Accepts scalars or broadcastable arrays; ``spec`` may be a PotentialSpec or
    an ExactSolution (whose t_max is then used).
    """
    sol = _as_solution(spec)
    ps = sol.spec
    T = sol.t_max if t_max is None else t_max
    if t < 0:
        raise ValueError("t must be non-negative")
    if t >= T:
        raise BlowupExceeded(f"t = {t} is not below T_max = {T}")
    scalar = np.ndim(r) == 0 and np.ndim(z) == 0
    r, z = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(z, dtype=float))
    r, z = r.copy(), z.copy()
    if t == 0:
        return float(z) if scalar else z
    M = _sup_phi0(ps) * 1.01 + 1e-300
    lo = z - t * M
    hi = z + t * M
    g = lambda y: y + t * ps.phi0(r, y) - z
    # widen if the scan underestimated sup|phi0|
    for _ in range(60):
        bad = (g(lo) > 0) | (g(hi) < 0)
        if not bad.any():
            break
        span = hi - lo
        lo = np.where(bad, lo - span, lo)
        hi = np.where(bad, hi + span, hi)
    y = np.clip(z - t * ps.phi0(r, z), lo, hi)
    tol = 1e-13 * (1 + np.abs(z))
    for _ in range(max_iter):
        res = g(y)
        done = np.abs(res) <= tol
        pos = res > 0
        hi = np.where(pos, np.minimum(hi, y), hi)
        lo = np.where(~pos, np.maximum(lo, y), lo)
        if done.all():
            break
        gp = 1 + t * ps.dz_phi0(r, y)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = y - res / gp
        ok = (step > lo) & (step < hi) & np.isfinite(step)
        y = np.where(done, y, np.where(ok, step, 0.5 * (lo + hi)))
    else:
        if not (np.abs(g(y)) <= 1e-12 * (1 + np.abs(z))).all():
            raise NumericalError("back-to-labels inversion did not converge")
    return float(y) if scalar else y


def eval_phi(sol, r, z, t):
    sol = _as_solution(sol)
    y = invert_back_to_labels(sol, r, z, t)
    out = sol.spec.phi0(np.asarray(r, dtype=float), y)
    return float(out) if np.ndim(out) == 0 else out


def _denominator(sol, r, y, t):
    den = 1 + t * sol.spec.dz_phi0(np.asarray(r, dtype=float), y)
    if np.any(den <= 0):
        raise BlowupExceeded("characteristic Jacobian is non-positive; t is past blowup")
    return den


def eval_omega(sol, r, z, t):
    """omega0(r, h) / (1 + t d_y phi0(r, h))."""
    sol = _as_solution(sol)
    y = invert_back_to_labels(sol, r, z, t)
    out = sol.spec.omega0(np.asarray(r, dtype=float), y) / _denominator(sol, r, y, t)
    return float(out) if np.ndim(out) == 0 else out


def eval_dz_phi(sol, r, z, t):
    """d_y phi0(r, h) / (1 + t d_y phi0(r, h)), the shock-forming gradient."""
    sol = _as_solution(sol)
    y = invert_back_to_labels(sol, r, z, t)
    dz = sol.spec.dz_phi0(np.asarray(r, dtype=float), y)
    out = dz / _denominator(sol, r, y, t)
    return float(out) if np.ndim(out) == 0 else out


def exact_vorticity_field(sol, grid, t) -> ScalarField2D:
    R, Z = grid.mesh()
    return ScalarField2D(grid, eval_omega(sol, R, Z, t))


# -- gridded potential -------------------------------------------------------

def potential_from_vorticity(omega: ScalarField2D) -> ScalarField2D:
    """phi = -int_r^{r_max} omega d rho by the trapezoid rule, inward from r_max."""
    g = omega.grid
    w = omega.values
    dr = g.dr
    phi = np.empty_like(w)
    # half cell from the last node out to r_max, then node-to-node trapezoids
    phi[-1] = -0.5 * dr * w[-1]
    steps = 0.5 * dr * (w[:-1] + w[1:])
    phi[:-1] = phi[-1] - np.cumsum(steps[::-1], axis=0)[::-1]
    peak = np.max(np.abs(w)) if w.size else 0.0
    flags = ()
    if peak > 0 and np.max(np.abs(w[-1])) > 1e-8 * peak:
        flags = ("outer-decay-violated",)
    return ScalarField2D(g, phi, flags=flags)


def bkm_lower_bound(omega0_at_argmin: float, t_max: float, t: float) -> float:
    """|omega0(r0, z0)| / (1 - t / T_max), a lower bound on sup|omega(t)|."""
    if not math.isfinite(t_max) or t_max <= 0:
        raise ValueError("lower bound needs a finite positive t_max")
    if t < 0 or t >= t_max:
        raise ValueError("t must lie in [0, t_max)")
    return abs(omega0_at_argmin) / (1 - t / t_max)
