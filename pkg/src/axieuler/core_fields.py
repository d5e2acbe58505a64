"""Dimension constants, the staggered (r, z) half-plane grid, fields on it,
and the measure-weighted norms used throughout the package.

All norms use the ambient measure ``m_{d-2} r^{d-2} dr dz`` so that a field on
the half-plane has the same norm as its axisymmetric lift to R^d.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np


class ContractError(ValueError):
    """Raised when fields that must share a grid do not."""


def sphere_area(n: int) -> float:
    """Surface area of the unit n-sphere embedded in R^{n+1}."""
    if n < 0:
        raise ValueError(f"sphere dimension must be >= 0, got {n}")
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


def ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


@dataclass(frozen=True)
class DimensionParams:
    d: int
    k: int
    epsilon: float
    alpha_d: float
    m_dm2: float
    m_dm3: float
    c_d: float

    @property
    def biot_savart_prefactor(self) -> float:
        """alpha_d * m_{d-2} * m_{d-3}, the constant in front of both reduced kernels."""
        return self.alpha_d * self.m_dm2 * self.m_dm3


def make_dimension_params(d: int) -> DimensionParams:
    if int(d) != d or d < 3:
        raise ValueError(f"dimension must be an integer >= 3, got {d}")
    d = int(d)
    k = d - 2
    alpha = (d - 2) * math.gamma(d / 2 - 1) / (4.0 * math.pi ** (d / 2))
    dims = DimensionParams(
        d=d,
        k=k,
        epsilon=1.0 / k,
        alpha_d=alpha,
        m_dm2=sphere_area(d - 2),
        m_dm3=sphere_area(d - 3),
        c_d=math.nan,
    )
    from .biot_savart import cd_constant

    return replace(dims, c_d=cd_constant(dims))


@dataclass(frozen=True)
class Grid2D:
    """Cell-centred grid on the (r, z) half-plane.

    Nodes sit at ``r_i = (i + 1/2) dr`` so no node lies on the axis; ``z``
    nodes are cell centres of ``[-z_max, z_max]`` (or ``[0, z_max]`` for an
    ``upper`` grid used by the odd-symmetry routines).
    """

    nr: int
    nz: int
    r_max: float
    z_max: float
    upper: bool = False

    def __post_init__(self):
        if self.nr < 1 or self.nz < 1:
            raise ValueError("grid needs at least one node per axis")
        if self.r_max <= 0 or self.z_max <= 0:
            raise ValueError("grid extents must be positive")

    @property
    def dr(self) -> float:
        return self.r_max / self.nr

    @property
    def dz(self) -> float:
        span = self.z_max if self.upper else 2.0 * self.z_max
        return span / self.nz

    @property
    def z_min(self) -> float:
        return 0.0 if self.upper else -self.z_max

    @property
    def r_nodes(self) -> np.ndarray:
        return (np.arange(self.nr) + 0.5) * self.dr

    @property
    def z_nodes(self) -> np.ndarray:
        z = self.z_min + (np.arange(self.nz) + 0.5) * self.dz
        if not self.upper:
            # exact antisymmetry, independent of rounding in the affine map
            z = 0.5 * (z - z[::-1])
        return z

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nr, self.nz)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.r_nodes, self.z_nodes, indexing="ij")

    def cell_measures(self, dims: DimensionParams) -> np.ndarray:
        """Exact ambient measure of every cell, m_{d-2} * int r^{d-2} dr * dz."""
        edges = np.arange(self.nr + 1) * self.dr
        p = dims.d - 1
        radial = dims.m_dm2 * (edges[1:] ** p - edges[:-1] ** p) / p
        return np.repeat(radial[:, None] * self.dz, self.nz, axis=1)

    def upper_half(self) -> "Grid2D":
        if self.upper or self.nz % 2:
            raise ValueError("upper half needs a full grid with even nz")
        return Grid2D(self.nr, self.nz // 2, self.r_max, self.z_max, upper=True)

    def full(self) -> "Grid2D":
        if not self.upper:
            return self
        return Grid2D(self.nr, 2 * self.nz, self.r_max, self.z_max)

    def contains(self, r, z) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        z = np.asarray(z, dtype=float)
        return (r >= 0) & (r <= self.r_max) & (z >= self.z_min) & (z <= self.z_max)


@dataclass(frozen=True, eq=False)
class ScalarField2D:
    grid: Grid2D
    values: np.ndarray
    post_blowup: bool = False
    flags: tuple = field(default=())

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ContractError(f"values shape {vals.shape} != grid shape {self.grid.shape}")
        if not self.post_blowup and not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite values")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: Grid2D, fn) -> "ScalarField2D":
        R, Z = grid.mesh()
        return cls(grid, np.broadcast_to(fn(R, Z), grid.shape))

    def with_values(self, values, **kw) -> "ScalarField2D":
        return ScalarField2D(self.grid, values, **kw)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def __add__(self, other):
        _same_grid(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        _same_grid(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c):
        return self.with_values(self.values * c)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class VelocityField2D:
    u_r: ScalarField2D
    u_z: ScalarField2D

    def __post_init__(self):
        _same_grid(self.u_r, self.u_z)

    @property
    def grid(self) -> Grid2D:
        return self.u_r.grid

    def sup(self) -> float:
        return float(np.max(np.hypot(self.u_r.values, self.u_z.values)))


def _same_grid(*fields) -> Grid2D:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise ContractError("fields live on different grids")
    return g


# -- finite differences ------------------------------------------------------

def _diff0(f: np.ndarray, h: float, parity: int | None, order: int) -> np.ndarray:
    """Centred derivative along axis 0; one-sided at ends without a mirror ghost."""
    out = np.empty_like(f)
    if order == 2:
        out[1:-1] = (f[2:] - f[:-2]) / (2 * h)
        if parity is None:
            out[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
        else:
            out[0] = (f[1] - parity * f[0]) / (2 * h)
        out[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
        return out
    if order != 4:
        raise ValueError("order must be 2 or 4")
    out[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    if parity is None:
        out[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
        out[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    else:
        g0, g1 = parity * f[1], parity * f[0]  # values at -3h/2 and -h/2
        out[0] = (g0 - 8 * g1 + 8 * f[1] - f[2]) / (12 * h)
        out[1] = (g1 - 8 * f[0] + 8 * f[2] - f[3]) / (12 * h)
    out[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    out[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    return out


def d_dr(values: np.ndarray, dr: float, axis_parity: int | None = None, order: int = 2) -> np.ndarray:
    """Centred radial derivative, one-sided at the outer boundary.

    With ``axis_parity`` = +1/-1 the first nodes use mirror ghosts
    ``f(-r) = parity * f(r)`` instead of a one-sided stencil.
    """
    f = np.asarray(values, dtype=float)
    return _diff0(f, dr, axis_parity, order)


def d_dz(values: np.ndarray, dz: float, order: int = 2) -> np.ndarray:
    f = np.asarray(values, dtype=float)
    return _diff0(f.T, dz, None, order).T


def _check_resolution(grid: Grid2D):
    if grid.nr < 3 or grid.nz < 3:
        raise ValueError("finite differences need at least 3 nodes per axis")


def _order_for(grid: Grid2D, order: int) -> int:
    return 2 if min(grid.nr, grid.nz) < 5 else order


def coordinate_divergence(u: VelocityField2D, dims: DimensionParams, order: int = 4) -> ScalarField2D:
    """d_r u_r + k u_r / r + d_z u_z, the divergence of the lifted field.

    Fourth-order differences by default (second order below 5 nodes per axis).
    """
    g = _same_grid(u.u_r, u.u_z)
    _check_resolution(g)
    o = _order_for(g, order)
    ur, uz = u.u_r.values, u.u_z.values
    r = g.r_nodes[:, None]
    div = d_dr(ur, g.dr, order=o) + dims.k * ur / r + d_dz(uz, g.dz, order=o)
    return ScalarField2D(g, div)


def scalar_vorticity(u: VelocityField2D, order: int = 4) -> ScalarField2D:
    """d_r u_z - d_z u_r."""
    g = _same_grid(u.u_r, u.u_z)
    _check_resolution(g)
    o = _order_for(g, order)
    return ScalarField2D(g, d_dr(u.u_z.values, g.dr, order=o) - d_dz(u.u_r.values, g.dz, order=o))


# -- norms -------------------------------------------------------------------

def lorentz_norm_d1(f: ScalarField2D, dims: DimensionParams, mask: np.ndarray | None = None) -> float:
    """L^{d,1} norm ``d * int_0^inf lambda(a)^{1/d} da`` of a piecewise-constant field.

    The distribution function of a cellwise-constant field is a step
    function, so the layer-cake integral is a finite sum after sorting.
    ``mask`` restricts the field to a subset of cells (zero elsewhere).
    """
    a = np.abs(f.values)
    mu = f.grid.cell_measures(dims)
    if mask is not None:
        a = a[mask]
        mu = mu[mask]
    a = a.ravel()
    mu = mu.ravel()
    keep = a > 0
    a, mu = a[keep], mu[keep]
    if a.size == 0:
        return 0.0
    order = np.argsort(-a, kind="stable")
    a, mu = a[order], mu[order]
    cum = np.cumsum(mu)
    steps = a - np.append(a[1:], 0.0)
    return float(dims.d * np.sum(steps * cum ** (1.0 / dims.d)))


def weak_norm(values: np.ndarray, measures: np.ndarray, p: float) -> float:
    """Weak L^{p,inf} quasinorm (sup_a a^p lambda(a))^{1/p} of a step function."""
    a = np.abs(np.ravel(values))
    mu = np.ravel(measures)
    order = np.argsort(-a, kind="stable")
    a, mu = a[order], mu[order]
    cum = np.cumsum(mu)
    # lambda is left-continuous at each level; sup is approached from below a_j
    lam_before = cum
    return float(np.max(a ** p * lam_before) ** (1.0 / p))


def support_radius(f: ScalarField2D, threshold: float) -> float:
    """Largest r node carrying a value with |f| > threshold (0 if none)."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    hit = np.any(np.abs(f.values) > threshold, axis=1)
    if not hit.any():
        return 0.0
    return float(f.grid.r_nodes[np.nonzero(hit)[0][-1]])


def support_measure(f: ScalarField2D, dims: DimensionParams, threshold: float) -> float:
    mu = f.grid.cell_measures(dims)
    return float(mu[np.abs(f.values) > threshold].sum())


def cylinder_mask(grid: Grid2D, R: float) -> np.ndarray:
    """Cells whose centre lies inside the cylinder r < R."""
    return np.broadcast_to((grid.r_nodes < R)[:, None], grid.shape)


# -- snapshots ---------------------------------------------------------------

def write_field_csv(f: ScalarField2D, path) -> None:
    R, Z = f.grid.mesh()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "z", "value"])
        for r, z, v in zip(R.ravel(), Z.ravel(), f.values.ravel()):
            w.writerow([repr(float(r)), repr(float(z)), repr(float(v))])


def read_field_csv(path) -> ScalarField2D:
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    r = np.unique(data[:, 0])
    z = np.unique(data[:, 1])
    nr, nz = r.size, z.size
    if nr * nz != data.shape[0]:
        raise ValueError("field CSV is not a full tensor-product grid")
    dr = r[1] - r[0] if nr > 1 else 2 * r[0]
    grid_r_max = nr * dr
    if not math.isclose(r[0], dr / 2, rel_tol=1e-9):
        raise ValueError("field CSV radial nodes must be staggered off the axis")
    dz = z[1] - z[0] if nz > 1 else 2 * abs(z[0])
    if math.isclose(z[0], dz / 2, rel_tol=1e-9):
        grid = Grid2D(nr, nz, grid_r_max, nz * dz, upper=True)
    else:
        grid = Grid2D(nr, nz, grid_r_max, nz * dz / 2)
    if not (np.allclose(grid.r_nodes, r, rtol=1e-12, atol=1e-12 * grid_r_max)
            and np.allclose(grid.z_nodes, z, rtol=1e-12, atol=1e-12 * grid.z_max)):
        raise ValueError("field CSV nodes are not a uniform staggered grid")
    return ScalarField2D(grid, data[:, 2].reshape(nr, nz))
