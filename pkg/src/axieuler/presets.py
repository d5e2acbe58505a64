"""Named initial data: closed-form velocity fields, vorticities and potentials."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import exact_infinite
from .core_fields import DimensionParams, Grid2D, ScalarField2D


@dataclass(frozen=True)
class Preset:
    name: str
    kind: str  # "velocity-field", "vorticity-field" or "potential-spec"
    description: str
    omega: Callable  # (r, z, dims) -> omega0
    velocity: Callable | None = None  # (r, z, dims) -> (u_r, u_z)
    potential: Callable | None = None  # () -> PotentialSpec
    defaults: dict = field(default_factory=dict)
    odd_in_z: bool = False


def _odd_power(k: int) -> int:
    """Smallest odd power >= k: r^n is smooth across the axis and omega / r^k stays bounded."""
    return k if k % 2 else k + 1


def _schwartz_velocity(r, z, dims):
    E = np.exp(-r * r - z * z)
    return r * (1 - 2 * z * z) * E, -z * (dims.k + 1 - 2 * r * r) * E


def _schwartz_omega(r, z, dims):
    return r * z * (2 * dims.k + 12 - 4 * r * r - 4 * z * z) * np.exp(-r * r - z * z)


def _gaussian_odd(r, z, dims):
    return r * z * np.exp(-r * r - z * z)


def _regular_odd(r, z, dims):
    return r ** _odd_power(dims.k) * z * np.exp(-r * r - z * z)


def _compact_bump(r, z, dims, radius=2.0):
    s = np.clip(1 - (r * r + z * z) / radius**2, 0.0, None)
    return r ** _odd_power(dims.k) * z * s**4


def _zero(r, z, dims):
    return np.zeros(np.broadcast(r, z).shape)


def _from_potential(factory):
    return lambda r, z, dims: factory().omega0(r, z)


_GRID = {"nr": 128, "nz": 256, "r_max": 6.0, "z_max": 6.0}

PRESETS: dict[str, Preset] = {
    p.name: p
    for p in (
        Preset("zero", "vorticity-field", "identically zero vorticity", _zero,
               potential=exact_infinite.zero_potential, defaults=dict(_GRID, d=4), odd_in_z=True),
        Preset("schwartz-example", "velocity-field",
               "u_r = r(1-2z^2)E, u_z = -z(k+1-2r^2)E with E = exp(-r^2-z^2)",
               _schwartz_omega, velocity=_schwartz_velocity, defaults=dict(_GRID, d=3), odd_in_z=True),
        Preset("bkm-counterexample", "potential-spec",
               "phi0 = -z exp(-r^2-z^2), omega0 = 2rz exp(-r^2-z^2)",
               _from_potential(exact_infinite.bkm_counterexample),
               potential=exact_infinite.bkm_counterexample, defaults=dict(_GRID, d=4), odd_in_z=True),
        Preset("global-monotone", "potential-spec", "phi0 = 0.1 tanh(z) exp(-r^2)",
               _from_potential(exact_infinite.global_monotone),
               potential=exact_infinite.global_monotone, defaults=dict(_GRID, d=4), odd_in_z=True),
        Preset("odd-positive-gaussian", "vorticity-field",
               "omega0 = rz exp(-r^2-z^2): z-odd, positive for z > 0",
               _gaussian_odd, defaults=dict(_GRID, d=4), odd_in_z=True),
        Preset("odd-positive-regular", "vorticity-field",
               "omega0 = r^n z exp(-r^2-z^2), n the smallest odd integer >= k, so omega0/r^k is bounded",
               _regular_odd, defaults=dict(_GRID, d=4), odd_in_z=True),
        Preset("compact-odd-bump", "vorticity-field",
               "omega0 = r^n z (1 - (r^2+z^2)/4)_+^4: compact support, z-odd, positive for z > 0",
               _compact_bump, defaults=dict(_GRID, d=4), odd_in_z=True),
    )
}


def list_presets() -> list[Preset]:
    return list(PRESETS.values())


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}") from None


def vorticity_field(name: str, grid: Grid2D, dims: DimensionParams) -> ScalarField2D:
    p = get_preset(name)
    R, Z = grid.mesh()
    return ScalarField2D(grid, np.broadcast_to(p.omega(R, Z, dims), grid.shape))
