"""Finite-d axisymmetric Euler on the (r, z) half-plane.

The advected scalar ``xi = omega / r^k`` is carried by a semi-Lagrangian
step; the velocity comes from the stream function solving

    (-d_zz - d_rr - (k/r) d_r + k/r^2) psi = omega

with ``u_r = d_z psi`` and ``u_z = -d_r psi - k psi / r``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.fft import dst, idst

from .core_fields import (
    DimensionParams,
    Grid2D,
    ScalarField2D,
    VelocityField2D,
    _same_grid,
    d_dr,
    d_dz,
)


class SolverError(RuntimeError):
    """Elliptic solve failed to reach the requested residual."""


class CFLViolation(ValueError):
    """Time step too large for the semi-Lagrangian departure trace."""


# -- elliptic solve ----------------------------------------------------------

@lru_cache(maxsize=16)
def _radial_operator(nr: int, dr: float, k: float):
    """Tridiagonal radial part of L_k as (sub, diag, sup).

    The centred stencil is applied to g = psi / r, for which L_k becomes
    r * (-g_rr - ((k+2)/r) g_r); the odd ghost psi(-dr/2) = -psi(dr/2) is an
    even ghost for g, and the stencil is exact on quadratics in g at the axis.
    A zero ghost closes the outer boundary.
    """
    r = (np.arange(nr) + 0.5) * dr
    rm = r - dr
    rp = r + dr
    inv2 = 1.0 / dr**2
    c = (k + 2) / (2 * r * dr)
    sub = (r / rm) * (-inv2 + c)
    sup = (r / rp) * (-inv2 - c)
    diag = np.full(nr, 2 * inv2)
    diag[0] -= sub[0]
    sub[0] = 0.0
    sup[-1] = 0.0
    return sub, diag, sup


@lru_cache(maxsize=16)
def _z_eigenvalues(nz: int, dz: float):
    m = np.arange(1, nz + 1)
    return (2.0 - 2.0 * np.cos(np.pi * m / (nz + 1))) / dz**2


def apply_stream_operator(psi: np.ndarray, grid: Grid2D, k: float) -> np.ndarray:
    """The discrete L_k applied to nodal values (same boundary closure as the solver)."""
    sub, diag, sup = _radial_operator(grid.nr, grid.dr, float(k))
    p = np.asarray(psi, dtype=float)
    out = diag[:, None] * p
    out[1:] += sub[1:, None] * p[:-1]
    out[:-1] += sup[:-1, None] * p[1:]
    pad = np.pad(p, ((0, 0), (1, 1)))
    out += (2 * p - pad[:, :-2] - pad[:, 2:]) / grid.dz**2
    return out


def _thomas(sub, diag, sup, rhs):
    """Batched tridiagonal solve; diag is (nr, nmodes), rhs likewise."""
    n = rhs.shape[0]
    c = np.empty_like(rhs)
    d = np.empty_like(rhs)
    beta = diag[0]
    c[0] = sup[0] / beta
    d[0] = rhs[0] / beta
    for i in range(1, n):
        beta = diag[i] - sub[i] * c[i - 1]
        c[i] = sup[i] / beta
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / beta
    x = np.empty_like(rhs)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def solve_stream_values(rhs: np.ndarray, grid: Grid2D, k: float, tol: float = 1e-10) -> np.ndarray:
    """Solve L_k psi = rhs on nodal arrays by a sine transform in z and a
    tridiagonal sweep per mode in r."""
    rhs = np.asarray(rhs, dtype=float)
    if not np.any(rhs):
        return np.zeros_like(rhs)
    sub, diag, sup = _radial_operator(grid.nr, grid.dr, float(k))
    lam = _z_eigenvalues(grid.nz, grid.dz)
    rhat = dst(rhs, type=1, axis=1)
    full_diag = diag[:, None] + lam[None, :]
    sub_b = np.broadcast_to(sub[:, None], rhat.shape)
    sup_b = np.broadcast_to(sup[:, None], rhat.shape)
    psi_hat = _thomas(sub_b, full_diag, sup_b, rhat)
    psi = idst(psi_hat, type=1, axis=1)
    resid = np.linalg.norm(apply_stream_operator(psi, grid, k) - rhs)
    if not resid <= tol * np.linalg.norm(rhs):
        raise SolverError(f"stream solve residual {resid:.3e} exceeds {tol:.1e} * |rhs|")
    return psi


def solve_stream(omega: ScalarField2D, dims: DimensionParams, tol: float = 1e-10) -> ScalarField2D:
    if omega.grid.upper:
        raise ValueError("stream solve needs a full-plane grid")
    return omega.with_values(solve_stream_values(omega.values, omega.grid, dims.k, tol))


def velocity_from_stream(psi: ScalarField2D, dims: DimensionParams) -> VelocityField2D:
    g = psi.grid
    p = psi.values
    r = g.r_nodes[:, None]
    u_r = d_dz(p, g.dz)
    u_z = -d_dr(p, g.dr, axis_parity=-1) - dims.k * p / r
    return VelocityField2D(ScalarField2D(g, u_r), ScalarField2D(g, u_z))


def velocity_from_vorticity(omega: ScalarField2D, dims: DimensionParams, tol: float = 1e-10) -> VelocityField2D:
    return velocity_from_stream(solve_stream(omega, dims, tol), dims)


# -- interpolation -----------------------------------------------------------

def _catmull_rom_weights(t):
    t2 = t * t
    t3 = t2 * t
    return (
        0.5 * (-t3 + 2 * t2 - t),
        0.5 * (3 * t3 - 5 * t2 + 2),
        0.5 * (-3 * t3 + 4 * t2 + t),
        0.5 * (t3 - t2),
    )


def _pad_field(values: np.ndarray, axis_parity: int, outside: str) -> np.ndarray:
    """Two ghost layers per side: mirrored across the axis with the given parity,
    zero or edge-replicated elsewhere."""
    f = np.asarray(values, dtype=float)
    mode = "constant" if outside == "zero" else "edge"
    padded = np.pad(f, ((0, 2), (2, 2)), mode=mode)
    mirror = axis_parity * padded[1::-1]
    return np.concatenate([mirror, padded], axis=0)


def interpolate(values: np.ndarray, grid: Grid2D, r, z, axis_parity: int = 1,
                outside: str = "zero", limit: bool = False) -> np.ndarray:
    """Bicubic Catmull-Rom interpolation of nodal data at (r, z).

    Points with r < 0 use the mirror image; ``limit`` clamps each result to
    the range of its four surrounding nodes, which keeps extrema from growing.
    """
    r = np.asarray(r, dtype=float)
    z = np.asarray(z, dtype=float)
    sign = np.where(r < 0, axis_parity, 1.0)
    r = np.abs(r)
    pad = _pad_field(values, axis_parity, outside)
    x = r / grid.dr - 0.5 + 2.0
    y = (z - grid.z_min) / grid.dz - 0.5 + 2.0
    nx, ny = pad.shape
    x = np.clip(x, 1.0, nx - 3.0 - 1e-12)
    y = np.clip(y, 1.0, ny - 3.0 - 1e-12)
    i = np.floor(x).astype(int)
    j = np.floor(y).astype(int)
    wx = _catmull_rom_weights(x - i)
    wy = _catmull_rom_weights(y - j)
    out = np.zeros(np.broadcast(x, y).shape)
    for a in range(4):
        row = np.zeros_like(out)
        for b in range(4):
            row += wy[b] * pad[i - 1 + a, j - 1 + b]
        out += wx[a] * row
    if limit:
        c = (pad[i, j], pad[i + 1, j], pad[i, j + 1], pad[i + 1, j + 1])
        lo = np.minimum(np.minimum(c[0], c[1]), np.minimum(c[2], c[3]))
        hi = np.maximum(np.maximum(c[0], c[1]), np.maximum(c[2], c[3]))
        out = np.clip(out, lo, hi)
    outside_mask = (r > grid.r_max) | (z < grid.z_min) | (z > grid.z_max)
    if outside == "zero":
        out = np.where(outside_mask, 0.0, out)
    return sign * out


def interpolate_velocity(u: VelocityField2D, r, z) -> tuple[np.ndarray, np.ndarray]:
    g = u.grid
    ur = interpolate(u.u_r.values, g, r, z, axis_parity=-1, outside="edge")
    uz = interpolate(u.u_z.values, g, r, z, axis_parity=1, outside="edge")
    return ur, uz


# -- transport ---------------------------------------------------------------

def cfl_number(u: VelocityField2D, dt: float) -> float:
    g = u.grid
    return dt * max(np.max(np.abs(u.u_r.values)) / g.dr, np.max(np.abs(u.u_z.values)) / g.dz)


def advect_xi(xi: ScalarField2D, u: VelocityField2D, dt: float) -> ScalarField2D:
    """One semi-Lagrangian step of d_t xi + u . grad xi = 0 with frozen velocity."""
    g = _same_grid(xi, u.u_r)
    if dt < 0:
        raise ValueError("dt must be non-negative")
    cfl = cfl_number(u, dt)
    if cfl > 1.0:
        raise CFLViolation(f"CFL number {cfl:.3f} exceeds 1")
    if dt == 0 or not (np.any(u.u_r.values) or np.any(u.u_z.values)):
        return xi.with_values(xi.values)
    R, Z = g.mesh()
    ur, uz = u.u_r.values, u.u_z.values
    # RK2 midpoint departure trace
    rm = R - 0.5 * dt * ur
    zm = Z - 0.5 * dt * uz
    urm, uzm = interpolate_velocity(u, rm, zm)
    rd = R - dt * urm
    zd = Z - dt * uzm
    new = interpolate(xi.values, g, rd, zd, axis_parity=1, outside="zero", limit=True)
    return xi.with_values(new)


def xi_from_omega(omega: ScalarField2D, dims: DimensionParams) -> ScalarField2D:
    return omega.with_values(omega.values / omega.grid.r_nodes[:, None] ** dims.k)


def omega_from_xi(xi: ScalarField2D, dims: DimensionParams) -> ScalarField2D:
    return xi.with_values(xi.values * xi.grid.r_nodes[:, None] ** dims.k)


# -- configuration and simulation loop ---------------------------------------

@dataclass(frozen=True)
class SimulationConfig:
    dims: DimensionParams
    grid: Grid2D
    t_end: float
    preset: str
    dt: float | None = None
    cfl: float | None = None
    output_stride: int = 1
    stream_solver_tol: float = 1e-10
    blowup_factor: float = 1e6
    out_dir: str | None = None

    def __post_init__(self):
        errors = []
        if (self.dt is None) == (self.cfl is None):
            errors.append("exactly one of dt and cfl must be set")
        if self.dt is not None and not self.dt > 0:
            errors.append("dt must be positive")
        if self.cfl is not None and not 0 < self.cfl <= 1:
            errors.append("cfl must lie in (0, 1]")
        if not self.t_end > 0:
            errors.append("t_end must be positive")
        if not 0 < self.stream_solver_tol <= 1e-4:
            errors.append("stream_solver_tol must lie in (0, 1e-4]")
        if self.output_stride < 1:
            errors.append("output_stride must be >= 1")
        if not self.blowup_factor > 1:
            errors.append("blowup_factor must exceed 1")
        if errors:
            raise ValueError("; ".join(errors))


@dataclass
class SimulationResult:
    series: list
    snapshots: list  # (t, omega) pairs at recorded steps
    status: str  # "finished" or "blowup"
    velocity_history: list = field(default_factory=list)  # (t, VelocityField2D) every step
    omega0: ScalarField2D | None = None

    def __iter__(self):
        yield self.series
        yield self.snapshots


def run_simulation(config: SimulationConfig, omega0: ScalarField2D | None = None,
                   keep_velocity: bool = False,
                   recorder: Callable | None = None) -> SimulationResult:
    """Time-step the xi form from t = 0 to t_end.

    ``recorder(t, omega, xi, u)`` builds one series entry; by default the
    diagnostics module's record builder is used with initial-data statistics.
    """
    from . import diagnostics, presets

    dims, grid = config.dims, config.grid
    if omega0 is None:
        omega0 = presets.vorticity_field(config.preset, grid, dims)
    if recorder is None:
        recorder = diagnostics.SeriesRecorder(omega0, dims)
    xi = xi_from_omega(omega0, dims)
    omega = omega0
    sup0 = omega0.sup()
    t = 0.0
    tol = config.stream_solver_tol
    u = velocity_from_vorticity(omega, dims, tol)
    series = [recorder(t, omega, xi, u)]
    snapshots = [(t, omega)]
    history = [(t, u)] if keep_velocity else []
    u_prev = None
    dt_prev = None
    step = 0
    status = "finished"
    while t < config.t_end * (1 - 1e-12):
        umax = max(np.max(np.abs(u.u_r.values)) / grid.dr, np.max(np.abs(u.u_z.values)) / grid.dz)
        if config.dt is not None:
            dt = config.dt
            while umax * dt > 1.0:
                dt *= 0.5  # CFL halving
        else:
            dt = config.cfl / umax if umax > 0 else config.t_end
        dt = min(dt, config.t_end - t)
        if u_prev is None:
            # predictor: half step with u^n, then midpoint velocity
            xi_half = advect_xi(xi, u, 0.5 * dt)
            u_mid = velocity_from_vorticity(omega_from_xi(xi_half, dims), dims, tol)
        else:
            a = 0.5 * dt / dt_prev
            u_mid = VelocityField2D(
                u.u_r * (1 + a) - u_prev.u_r * a,
                u.u_z * (1 + a) - u_prev.u_z * a,
            )
        if cfl_number(u_mid, dt) > 1.0:
            u_mid = u
        xi = advect_xi(xi, u_mid, dt)
        t += dt
        step += 1
        omega = omega_from_xi(xi, dims)
        u_prev, dt_prev = u, dt
        u = velocity_from_vorticity(omega, dims, tol)
        if keep_velocity:
            history.append((t, u))
        blown = omega.sup() > config.blowup_factor * sup0 if sup0 > 0 else False
        done = t >= config.t_end * (1 - 1e-12)
        if step % config.output_stride == 0 or blown or done:
            series.append(recorder(t, omega, xi, u))
            snapshots.append((t, omega))
        if blown:
            status = "blowup"
            break
    return SimulationResult(series, snapshots, status, history, omega0)


# -- trajectories ------------------------------------------------------------

@dataclass
class TrajectorySet:
    labels: np.ndarray  # (n, 2)
    times: np.ndarray
    positions: np.ndarray  # (n_times, n, 2)
    xi_at_labels: np.ndarray
    exited: np.ndarray  # per label: left the grid (positions frozen afterwards)

    def scaling_defect(self, omega: ScalarField2D, dims: DimensionParams, time_index: int = -1) -> np.ndarray:
        """omega(X, t) / X_r^k - xi0(label) per trajectory, at a recorded time."""
        X = self.positions[time_index]
        om = interpolate(omega.values, omega.grid, X[:, 0], X[:, 1], axis_parity=-1)
        return om / X[:, 0] ** dims.k - self.xi_at_labels


def trace_flow_map(velocity_history, labels, xi0: ScalarField2D | None = None,
                   substeps: int = 1) -> TrajectorySet:
    """RK4 trajectories through a velocity history interpolated linearly in time."""
    labels = np.atleast_2d(np.asarray(labels, dtype=float))
    times = np.array([t for t, _ in velocity_history])
    grid = velocity_history[0][1].grid
    X = labels.copy()
    exited = np.zeros(len(labels), dtype=bool)
    positions = [X.copy()]

    def vel(n, theta, P):
        ua = interpolate_velocity(velocity_history[n][1], P[:, 0], P[:, 1])
        if theta == 0.0:
            return np.stack(ua, axis=1)
        ub = interpolate_velocity(velocity_history[n + 1][1], P[:, 0], P[:, 1])
        return np.stack([(1 - theta) * ua[c] + theta * ub[c] for c in range(2)], axis=1)

    for n in range(len(times) - 1):
        h = (times[n + 1] - times[n]) / substeps
        for m in range(substeps):
            th0 = m / substeps
            th1 = (m + 1) / substeps
            thm = 0.5 * (th0 + th1)
            k1 = vel(n, th0, X)
            k2 = vel(n, thm, X + 0.5 * h * k1)
            k3 = vel(n, thm, X + 0.5 * h * k2)
            k4 = vel(n, th1, X + h * k3)
            Xn = X + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            Xn[:, 0] = np.abs(Xn[:, 0])
            out = ~grid.contains(Xn[:, 0], Xn[:, 1])
            exited |= out
            X = np.where(exited[:, None], X, Xn)
        positions.append(X.copy())
    if xi0 is not None:
        xi_lab = interpolate(xi0.values, xi0.grid, labels[:, 0], labels[:, 1])
    else:
        xi_lab = np.full(len(labels), np.nan)
    return TrajectorySet(labels, times, np.array(positions), xi_lab, exited)
