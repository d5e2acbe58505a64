"""The epsilon = 1/(d-2) form of the vorticity equation.

Writing the finite-d dynamics as the infinite-dimensional model plus an
epsilon-correction, with ``phi = -int_r^inf omega`` and an auxiliary
potential sigma solving

    -Delta_eps sigma = -(d_rr + d_zz)(r phi),
    -Delta_eps = -eps (d_rr + d_zz) - (1/r) d_r + 1/r^2,

so that ``k psi = -r phi + eps sigma`` is the stream function.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_fields import DimensionParams, ScalarField2D, _same_grid, d_dr, d_dz
from .euler_rz import solve_stream, solve_stream_values, velocity_from_stream
from .exact_infinite import potential_from_vorticity


@dataclass(frozen=True)
class EpsilonFormulation:
    dims: DimensionParams
    phi: ScalarField2D
    sigma: ScalarField2D
    q_field: ScalarField2D
    solver_tol: float


def laplacian_rz(values: np.ndarray, grid, axis_parity: int = -1) -> np.ndarray:
    """5-point d_rr + d_zz with a mirrored axis ghost and zero ghosts outside."""
    f = np.asarray(values, dtype=float)
    pr = np.concatenate([axis_parity * f[:1], f, np.zeros_like(f[:1])], axis=0)
    pz = np.pad(f, ((0, 0), (1, 1)))
    return ((pr[2:] - 2 * f + pr[:-2]) / grid.dr**2
            + (pz[:, 2:] - 2 * f + pz[:, :-2]) / grid.dz**2)


def minus_delta_eps(values: np.ndarray, grid, dims: DimensionParams) -> np.ndarray:
    """-Delta_eps applied with the same closure as the stream operator (= L_k / k)."""
    from .euler_rz import apply_stream_operator

    return apply_stream_operator(values, grid, dims.k) / dims.k


def solve_sigma(phi: ScalarField2D, dims: DimensionParams, tol: float = 1e-10) -> ScalarField2D:
    """sigma from -Delta_eps sigma = -(d_rr + d_zz)(r phi).

    Since k * (-Delta_eps) is the stream operator, the solve reuses it; r phi
    is odd across the axis.
    """
    g = phi.grid
    rphi = g.r_nodes[:, None] * phi.values
    rhs = -laplacian_rz(rphi, g, axis_parity=-1)
    if not np.any(rhs):
        return phi.with_values(np.zeros(g.shape))
    return phi.with_values(solve_stream_values(dims.k * rhs, g, dims.k, tol))


def q_epsilon_apply(omega: ScalarField2D, phi: ScalarField2D, sigma: ScalarField2D,
                    dims: DimensionParams) -> ScalarField2D:
    """(-r phi_z + eps sigma_z) omega_r + (phi + r omega - sigma/r - eps sigma_r) omega_z
    - (sigma_z / r) omega."""
    g = _same_grid(omega, phi, sigma)
    eps = dims.epsilon
    r = g.r_nodes[:, None]
    w, p, s = omega.values, phi.values, sigma.values
    w_r = d_dr(w, g.dr, axis_parity=-1)
    w_z = d_dz(w, g.dz)
    p_z = d_dz(p, g.dz)
    s_r = d_dr(s, g.dr, axis_parity=-1)
    s_z = d_dz(s, g.dz)
    q = (-r * p_z + eps * s_z) * w_r + (p + r * w - s / r - eps * s_r) * w_z - (s_z / r) * w
    return ScalarField2D(g, q)


def formulate(omega: ScalarField2D, dims: DimensionParams, tol: float = 1e-10) -> EpsilonFormulation:
    phi = potential_from_vorticity(omega)
    sigma = solve_sigma(phi, dims, tol)
    return EpsilonFormulation(dims, phi, sigma, q_epsilon_apply(omega, phi, sigma, dims), tol)


def epsilon_velocity(form: EpsilonFormulation):
    """(u_r, u_z) from phi and sigma directly."""
    g = form.phi.grid
    eps = form.dims.epsilon
    r = g.r_nodes[:, None]
    p, s = form.phi.values, form.sigma.values
    u_r = -eps * r * d_dz(p, g.dz) + eps**2 * d_dz(s, g.dz)
    u_z = (eps * r * d_dr(p, g.dr, axis_parity=1) - eps**2 * d_dr(s, g.dr, axis_parity=-1)
           - eps * s / r + (1 + eps) * p)
    return u_r, u_z


def dt_omega_direct(omega: ScalarField2D, dims: DimensionParams, tol: float = 1e-10) -> np.ndarray:
    """-(u . grad) omega + k (u_r / r) omega with u from the stream function."""
    g = omega.grid
    u = velocity_from_stream(solve_stream(omega, dims, tol), dims)
    w = omega.values
    r = g.r_nodes[:, None]
    ur, uz = u.u_r.values, u.u_z.values
    return -ur * d_dr(w, g.dr, axis_parity=-1) - uz * d_dz(w, g.dz) + dims.k * ur / r * w


def dt_omega_epsilon(omega: ScalarField2D, dims: DimensionParams, tol: float = 1e-10) -> np.ndarray:
    """-phi omega_z - omega phi_z - eps Q_eps[omega]."""
    g = omega.grid
    form = formulate(omega, dims, tol)
    w, p = omega.values, form.phi.values
    return -p * d_dz(w, g.dz) - w * d_dz(p, g.dz) - dims.epsilon * form.q_field.values


def formulation_residual(omega: ScalarField2D, dims: DimensionParams, tol: float = 1e-10) -> float:
    """sup|a - b| / sup|a| for the two evaluations of d_t omega."""
    a = dt_omega_direct(omega, dims, tol)
    b = dt_omega_epsilon(omega, dims, tol)
    scale = np.max(np.abs(a))
    if scale == 0:
        return float(np.max(np.abs(b)))
    return float(np.max(np.abs(a - b)) / scale)
