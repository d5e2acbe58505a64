"""Velocity from vorticity by direct quadrature of the reduced Biot-Savart law.

For a source point (rho, s) and target (r, z) the angular integral over the
(d-2)-sphere collapses to a tau-integral on [-1, 1] with weight
``(1 - tau^2)^((d-4)/2)``.  With ``a = z - s`` we evaluate

    K_r = a * int tau w(tau) / D(tau)^(d/2) dtau
    K_z = int (r tau - rho) w(tau) / D(tau)^(d/2) dtau,
    D(tau) = r^2 + rho^2 - 2 r rho tau + a^2,

and assemble ``u_r = -c int rho^(d-2) omega K_r``, ``u_z = c int rho^(d-2) omega K_z``
with ``c = alpha_d * m_{d-3}``.

The tau-integral is folded onto [0, 1] and written in ``v = 1 - tau`` so that
the near-diagonal peak ``D = delta^2 + 2 r rho v`` is resolved by a
geometrically graded composite rule without cancellation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.special import roots_jacobi, roots_legendre

from .core_fields import ContractError, DimensionParams, Grid2D, ScalarField2D, ball_volume


class SingularKernelError(ValueError):
    """Raised when the kernel is requested at (or at the image of) the target."""


@dataclass(frozen=True)
class KernelQuadrature:
    n_tau: int = 16
    n_cell: int = 1
    self_exclusion_radius: float = 2.0
    n_patch: int = 12
    grading_threshold: float = 0.25

    def __post_init__(self):
        if self.n_tau < 8:
            raise ValueError("n_tau must be at least 8")
        if self.n_cell not in (1, 2, 3):
            raise ValueError("n_cell must be 1, 2 or 3")
        if self.self_exclusion_radius < 0:
            raise ValueError("self_exclusion_radius must be non-negative")
        if self.n_patch < 2:
            raise ValueError("n_patch must be at least 2")


def cd_constant(dims: DimensionParams) -> float:
    """sqrt(2) * alpha_d * ||y|^{1-d}|_{weak L^{d/(d-1)}} = sqrt(2) alpha_d v_d^{(d-1)/d}."""
    d = dims.d
    return math.sqrt(2.0) * dims.alpha_d * ball_volume(d) ** ((d - 1) / d)


def prefactor(dims: DimensionParams) -> float:
    return dims.alpha_d * dims.m_dm3


def tau_weight_exponent(dims: DimensionParams) -> float:
    return (dims.d - 4) / 2.0


def tau_rule(dims: DimensionParams, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Jacobi rule on [-1, 1] for the weight (1 - tau^2)^((d-4)/2)."""
    b = tau_weight_exponent(dims)
    return roots_jacobi(n, b, b)


@lru_cache(maxsize=None)
def _endpoint_rule(beta: float, n: int):
    """Nodes/weights for int_0^1 v^beta f(v) dv."""
    x, w = roots_jacobi(n, 0.0, beta)  # weight (1+x)^beta
    return (x + 1) / 2, w * 2.0 ** (-beta - 1)


@lru_cache(maxsize=None)
def _plain_rule(n: int):
    x, w = roots_legendre(n)
    return (x + 1) / 2, w / 2


def _integrand(v, r, rho, a, dims):
    """Folded integrand pair as functions of v = 1 - tau, weight excluded."""
    half_d = dims.d / 2.0
    tau = 1.0 - v
    B = 2.0 * r * rho
    dm = (r - rho) ** 2 + a * a + B * v
    dp = (r + rho) ** 2 + a * a - B * v
    im = dm ** -half_d
    ip = dp ** -half_d
    f_r = tau * (im - ip)
    # r*tau - rho written through v to keep the near-diagonal cancellation exact
    f_z = ((r - rho) - r * v) * im - (r * tau + rho) * ip
    return f_r, f_z


def _tau_integrals(r, rho, a, dims: DimensionParams, quad: KernelQuadrature):
    """Vectorized (K_r, K_z) for flat arrays of pairs."""
    r, rho, a = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (r, rho, a)))
    shape = r.shape
    r, rho, a = r.ravel(), rho.ravel(), a.ravel()
    beta = tau_weight_exponent(dims)
    n = quad.n_tau
    kr = np.empty(r.size)
    kz = np.empty(r.size)

    B = 2.0 * r * rho
    delta2 = (r - rho) ** 2 + a * a
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(B > 0, delta2 / np.where(B > 0, B, 1.0), np.inf)
    graded = q < quad.grading_threshold

    # regular pairs: one Gauss-Jacobi panel over v in [0, 1]
    idx = np.nonzero(~graded)[0]
    if idx.size:
        v, w = _endpoint_rule(beta, n)
        w = w * (2.0 - v) ** beta
        f_r, f_z = _integrand(v[None, :], r[idx, None], rho[idx, None], a[idx, None], dims)
        kr[idx] = f_r @ w
        kz[idx] = f_z @ w

    # peaked pairs: panels [0, q], [q, 4q], [4q, 16q], ... up to 1
    idx = np.nonzero(graded)[0]
    if idx.size:
        levels = np.ceil(np.log(1.0 / np.maximum(q[idx], 1e-300)) / np.log(4.0)).astype(int)
        levels = np.maximum(levels, 1)
        ve, we = _endpoint_rule(beta, n)
        vp, wp = _plain_rule(n)
        for L in np.unique(levels):
            sel = idx[levels == L]
            qs = q[sel][:, None]
            hi0 = np.minimum(qs, 1.0)
            # first panel carries the v^beta endpoint weight exactly
            v0 = hi0 * ve[None, :]
            w0 = hi0 ** (beta + 1) * we[None, :] * (2.0 - v0) ** beta
            js = np.arange(L)[None, :]
            lo = np.minimum(qs * 4.0 ** js, 1.0)
            hi = np.minimum(qs * 4.0 ** (js + 1), 1.0)
            width = (hi - lo)[:, :, None]
            v1 = lo[:, :, None] + width * vp[None, None, :]
            w1 = width * wp[None, None, :] * v1 ** beta * (2.0 - v1) ** beta
            v_all = np.concatenate([v0, v1.reshape(len(sel), -1)], axis=1)
            w_all = np.concatenate([w0, w1.reshape(len(sel), -1)], axis=1)
            f_r, f_z = _integrand(v_all, r[sel, None], rho[sel, None], a[sel, None], dims)
            kr[sel] = np.sum(f_r * w_all, axis=1)
            kz[sel] = np.sum(f_z * w_all, axis=1)

    return (a * kr).reshape(shape), kz.reshape(shape)


def kernel_general(dims: DimensionParams, r, z, rho, s, quad: KernelQuadrature | None = None):
    """The two tau-integrals of the coordinate Biot-Savart law at one pair."""
    quad = quad or KernelQuadrature()
    if r < 0 or rho < 0:
        raise ValueError("radial coordinates must be non-negative")
    if r == rho and z == s:
        raise SingularKernelError("kernel is singular at coincident points")
    kr, kz = _tau_integrals(r, rho, z - s, dims, quad)
    return float(kr), float(kz)


def _kernel_odd_terms(r, z, rho, s, dims, quad):
    kr_d, kz_d = _tau_integrals(r, rho, np.subtract(z, s), dims, quad)
    kr_i, kz_i = _tau_integrals(r, rho, np.add(z, s), dims, quad)
    return kr_d, kz_d, kr_i, kz_i


def kernel_odd(dims: DimensionParams, r, z, rho, s, quad: KernelQuadrature | None = None):
    """(H, G) kernels for z-odd vorticity supported on the upper half-plane."""
    quad = quad or KernelQuadrature()
    if rho < 0 or s < 0 or r < 0:
        raise ValueError("odd kernels take r, rho, s >= 0")
    if r == rho and abs(z) == s:
        raise SingularKernelError("kernel is singular at the target or its mirror image")
    kr_d, kz_d, kr_i, kz_i = _kernel_odd_terms(r, z, rho, s, dims, quad)
    return float(kr_i - kr_d), float(kz_i - kz_d)


# -- field integration -------------------------------------------------------

def _odd_extension_spline(grid: Grid2D, values: np.ndarray) -> RectBivariateSpline:
    """Cubic interpolant of omega extended oddly across the axis (and across z=0
    for an upper grid)."""
    r = grid.r_nodes
    z = grid.z_nodes
    v = np.asarray(values)
    r_ext = np.concatenate([-r[::-1], r])
    v = np.concatenate([-v[::-1, :], v], axis=0)
    if grid.upper:
        z = np.concatenate([-z[::-1], z])
        v = np.concatenate([-v[:, ::-1], v], axis=1)
    return RectBivariateSpline(r_ext, z, v, kx=3, ky=3, s=0)


def _patch_box(grid: Grid2D, r, z, radius):
    """Rectangle of whole cells within `radius` cells of the target, clipped to the
    full-plane domain, as (i0, i1, j0, j1) index bounds of the full grid."""
    full = grid.full()
    i_c = r / full.dr - 0.5
    j_c = (z + full.z_max) / full.dz - 0.5
    i0 = max(int(math.ceil(i_c - radius)), 0)
    i1 = min(int(math.floor(i_c + radius)), full.nr - 1)
    j0 = max(int(math.ceil(j_c - radius)), 0)
    j1 = min(int(math.floor(j_c + radius)), full.nz - 1)
    return i0, i1, j0, j1


def _polar_patch(px, py, x0, x1, y0, y1, n):
    """Quadrature in polar coordinates about (px, py) over a rectangle containing it.

    Returns points and weights for int f dx dy; the Jacobian delta cancels
    the 1/delta singularity of the reduced kernel.
    """
    xg, wg = _plain_rule(n)
    pts_x, pts_y, wts = [], [], []
    corners = [(x1, y0), (x1, y1), (x0, y1), (x0, y0)]
    for e in range(4):
        (ax, ay), (bx, by) = corners[e], corners[(e + 1) % 4]
        ex, ey = bx - ax, by - ay
        length = math.hypot(ex, ey)
        nx, ny = ey / length, -ex / length  # outward normal for counter-clockwise order
        h = (ax - px) * nx + (ay - py) * ny
        if h <= 1e-14 * length:
            continue
        phi_a = math.atan2((ax - px) * (-ny) + (ay - py) * nx, h)
        phi_b = math.atan2((bx - px) * (-ny) + (by - py) * nx, h)
        phi = phi_a + (phi_b - phi_a) * xg
        wphi = (phi_b - phi_a) * wg
        L = h / np.cos(phi)
        theta = np.arctan2(ny, nx) + phi
        dl = L[:, None] * xg[None, :]
        wd = L[:, None] * wg[None, :]
        pts_x.append(px + dl * np.cos(theta)[:, None])
        pts_y.append(py + dl * np.sin(theta)[:, None])
        wts.append(wphi[:, None] * wd * dl)
    if not wts:
        return np.empty(0), np.empty(0), np.empty(0)
    return (np.concatenate([p.ravel() for p in pts_x]),
            np.concatenate([p.ravel() for p in pts_y]),
            np.concatenate([w.ravel() for w in wts]))


def _cell_points(grid: Grid2D, n_cell: int):
    """Per-cell Gauss-Legendre points (offsets along r and z, weights)."""
    x, w = _plain_rule(n_cell)
    if n_cell == 1:
        x, w = np.array([0.5]), np.array([1.0])
    return (x - 0.5) * grid.dr, (x - 0.5) * grid.dz, w


def _check_points(grid: Grid2D, points):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be a sequence of (r, z) pairs")
    full = grid.full()
    if not np.all(full.contains(pts[:, 0], pts[:, 1])):
        raise ValueError("evaluation point outside the grid hull")
    return pts


def _far_sources(grid: Grid2D, values, spline, dims, quad):
    """Flattened far-field quadrature sources on `grid`: rho, s, rho^{d-2} omega * area."""
    R, Z = grid.mesh()
    if quad.n_cell == 1:
        return R, Z, R ** (dims.d - 2) * values * grid.dr * grid.dz
    xr, xz, w = _cell_points(grid, quad.n_cell)
    rho = R[:, :, None, None] + xr[None, None, :, None]
    s = Z[:, :, None, None] + xz[None, None, None, :]
    rho, s = np.broadcast_arrays(rho, s)
    om = spline.ev(rho.ravel(), s.ravel()).reshape(rho.shape)
    wt = (w[:, None] * w[None, :]) * grid.dr * grid.dz
    return rho, s, rho ** (dims.d - 2) * om * wt


def velocity_general(omega: ScalarField2D, dims: DimensionParams, points,
                     quad: KernelQuadrature | None = None) -> np.ndarray:
    """Velocity (u_r, u_z) at each point from omega on a full (r, z) grid."""
    quad = quad or KernelQuadrature()
    grid = omega.grid
    if grid.upper:
        raise ContractError("velocity_general needs a full-plane field")
    pts = _check_points(grid, points)
    out = np.zeros((len(pts), 2))
    if not np.any(omega.values):
        return out
    spline = _odd_extension_spline(grid, omega.values)
    rho, s, src = _far_sources(grid, omega.values, spline, dims, quad)
    c = prefactor(dims)
    for p, (r, z) in enumerate(pts):
        i0, i1, j0, j1 = _patch_box(grid, r, z, quad.self_exclusion_radius)
        m = np.ones(grid.shape, dtype=bool)
        m[i0:i1 + 1, j0:j1 + 1] = False
        kr, kz = _tau_integrals(r, rho[m], z - s[m], dims, quad)
        ur = -np.sum(kr * src[m])
        uz = np.sum(kz * src[m])
        pr, ps, pw = _polar_patch(r, z, i0 * grid.dr, (i1 + 1) * grid.dr,
                                  -grid.z_max + j0 * grid.dz, -grid.z_max + (j1 + 1) * grid.dz,
                                  quad.n_patch)
        if pw.size:
            wsrc = pw * pr ** (dims.d - 2) * spline.ev(pr, ps)
            kr, kz = _tau_integrals(r, pr, z - ps, dims, quad)
            ur -= np.sum(kr * wsrc)
            uz += np.sum(kz * wsrc)
        out[p] = c * ur, c * uz
    return out


def velocity_odd(omega_upper: ScalarField2D, dims: DimensionParams, points,
                 quad: KernelQuadrature | None = None) -> np.ndarray:
    """Velocity from z-odd vorticity given on the upper half-plane, via H and G."""
    quad = quad or KernelQuadrature()
    grid = omega_upper.grid
    if not grid.upper:
        raise ContractError("velocity_odd needs an upper-half-plane field")
    pts = _check_points(grid, points)
    out = np.zeros((len(pts), 2))
    if not np.any(omega_upper.values):
        return out
    full = grid.full()
    spline = _odd_extension_spline(grid, omega_upper.values)
    rho, s, src = _far_sources(grid, omega_upper.values, spline, dims, quad)
    c = prefactor(dims)
    half = grid.nz
    for p, (r, z) in enumerate(pts):
        i0, i1, j0, j1 = _patch_box(full, r, z, quad.self_exclusion_radius)
        # directly patched upper cells, and upper cells whose mirror is patched
        direct = np.ones(grid.shape, dtype=bool)
        image = np.ones(grid.shape, dtype=bool)
        lo, hi = max(j0 - half, 0), j1 - half
        if hi >= lo:
            direct[i0:i1 + 1, lo:hi + 1] = False
        lo, hi = max(half - 1 - j1, 0), half - 1 - j0
        if hi >= lo:
            image[i0:i1 + 1, lo:hi + 1] = False
        kr_d, kz_d, kr_i, kz_i = _kernel_odd_terms(r, z, rho, s, dims, quad)
        extra = (1,) * (rho.ndim - 2)
        direct = direct.reshape(grid.shape + extra)
        image = image.reshape(grid.shape + extra)
        H = np.where(image, kr_i, 0.0) - np.where(direct, kr_d, 0.0)
        G = np.where(image, kz_i, 0.0) - np.where(direct, kz_d, 0.0)
        ur = np.sum(H * src)
        uz = -np.sum(G * src)
        pr, ps, pw = _polar_patch(r, z, i0 * full.dr, (i1 + 1) * full.dr,
                                  -full.z_max + j0 * full.dz, -full.z_max + (j1 + 1) * full.dz,
                                  quad.n_patch)
        if pw.size:
            # lower-half patch points are images of upper sources with omega -> -omega
            wsrc = pw * pr ** (dims.d - 2) * spline.ev(pr, ps)
            kr, kz = _tau_integrals(r, pr, z - ps, dims, quad)
            ur -= np.sum(kr * wsrc)
            uz += np.sum(kz * wsrc)
        out[p] = c * ur, c * uz
    return out
