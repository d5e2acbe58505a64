"""Numerical laboratory for axisymmetric, swirl-free Euler flow in d >= 3 dimensions."""
from .core_fields import (
    DimensionParams,
    Grid2D,
    ScalarField2D,
    VelocityField2D,
    coordinate_divergence,
    lorentz_norm_d1,
    make_dimension_params,
    scalar_vorticity,
    sphere_area,
    support_radius,
)

__all__ = [
    "DimensionParams",
    "Grid2D",
    "ScalarField2D",
    "VelocityField2D",
    "coordinate_divergence",
    "lorentz_norm_d1",
    "make_dimension_params",
    "scalar_vorticity",
    "sphere_area",
    "support_radius",
]
