import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from axieuler.core_fields import (
    ContractError,
    Grid2D,
    ScalarField2D,
    VelocityField2D,
    coordinate_divergence,
    cylinder_mask,
    lorentz_norm_d1,
    make_dimension_params,
    read_field_csv,
    scalar_vorticity,
    sphere_area,
    support_radius,
    write_field_csv,
)
from conftest import schwartz_velocity


def test_alpha_constants():
    assert make_dimension_params(3).alpha_d == pytest.approx(1 / (4 * math.pi), rel=1e-14)
    assert make_dimension_params(4).alpha_d == pytest.approx(1 / (2 * math.pi**2), rel=1e-14)


def test_k_and_epsilon():
    p = make_dimension_params(3)
    assert (p.k, p.epsilon) == (1, 1.0)
    for d in range(3, 12):
        p = make_dimension_params(d)
        assert p.k == d - 2 and p.epsilon * p.k == 1


def test_stored_sphere_areas_match_formula():
    for d in (3, 4, 7):
        p = make_dimension_params(d)
        assert p.m_dm2 == sphere_area(d - 2) and p.m_dm3 == sphere_area(d - 3)


def test_rejects_low_dimension():
    with pytest.raises(ValueError):
        make_dimension_params(2)


def test_sphere_area_values():
    assert sphere_area(0) == pytest.approx(2.0, rel=1e-15)
    assert sphere_area(1) == pytest.approx(2 * math.pi, rel=1e-15)
    assert sphere_area(2) == pytest.approx(4 * math.pi, rel=1e-15)
    assert sphere_area(3) == pytest.approx(2 * math.pi**2, rel=1e-15)
    with pytest.raises(ValueError):
        sphere_area(-1)


def test_grid_shape_and_symmetry():
    g = Grid2D(10, 8, 2.0, 3.0)
    assert g.r_nodes[0] == pytest.approx(g.dr / 2)
    assert np.all(g.r_nodes > 0)
    np.testing.assert_array_equal(g.z_nodes, -g.z_nodes[::-1])
    np.testing.assert_allclose(np.diff(g.r_nodes), g.dr, rtol=1e-12)
    np.testing.assert_allclose(np.diff(g.z_nodes), g.dz, rtol=1e-12)


def test_cell_measures_sum_to_cylinder_volume(dims4):
    g = Grid2D(20, 10, 2.0, 1.0)
    # ambient volume of {r < 2, |z| < 1} in R^4: v_3 * 2^3 * 2
    vol = 4 / 3 * math.pi * 8 * 2
    assert g.cell_measures(dims4).sum() == pytest.approx(vol, rel=1e-13)


def test_field_rejects_nonfinite(small_grid):
    bad = np.zeros(small_grid.shape)
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        ScalarField2D(small_grid, bad)
    ScalarField2D(small_grid, bad, post_blowup=True)


def test_lorentz_norm_zero(small_grid, dims4):
    assert lorentz_norm_d1(ScalarField2D(small_grid, np.zeros(small_grid.shape)), dims4) == 0


def test_lorentz_norm_indicator(dims4):
    g = Grid2D(40, 40, 2.0, 1.0)
    mu = g.cell_measures(dims4)
    f = np.zeros(g.shape)
    f[:20] = 1.0
    V = mu[:20].sum()
    norm = lorentz_norm_d1(ScalarField2D(g, f), dims4)
    assert norm == pytest.approx(4 * V**0.25, rel=1e-13)
    scale = (16 / V) ** (1 / 3)  # only r is stretched
    g2 = Grid2D(40, 40, 2.0 * scale, 1.0)
    f2 = ScalarField2D(g2, f)
    assert g2.cell_measures(dims4)[:20].sum() == pytest.approx(16.0, rel=1e-12)
    assert lorentz_norm_d1(f2, dims4) == pytest.approx(8.0, rel=1e-12)


@given(st.floats(-50, 50, allow_nan=False), st.integers(0, 2**31))
def test_lorentz_norm_homogeneous(c, seed):
    dims = make_dimension_params(4)
    g = Grid2D(8, 8, 1.0, 1.0)
    f = ScalarField2D(g, np.random.default_rng(seed).normal(size=g.shape))
    assert lorentz_norm_d1(f * c, dims) == pytest.approx(abs(c) * lorentz_norm_d1(f, dims), rel=1e-12, abs=1e-300)


@given(st.integers(0, 2**31))
def test_lorentz_norm_rearrangement_invariant(seed):
    dims = make_dimension_params(5)
    g = Grid2D(6, 16, 1.0, 1.0)
    rng = np.random.default_rng(seed)
    v = rng.normal(size=g.shape)
    # cells in one radial row share their measure; permute within rows
    w = np.array([rng.permutation(row) for row in v])
    a = lorentz_norm_d1(ScalarField2D(g, v), dims)
    b = lorentz_norm_d1(ScalarField2D(g, w), dims)
    assert a == pytest.approx(b, rel=1e-13)


def test_lorentz_norm_mask_splits_subadditively(dims4):
    g = Grid2D(16, 16, 2.0, 2.0)
    f = ScalarField2D.from_function(g, lambda r, z: np.exp(-r * r - z * z))
    m = cylinder_mask(g, 1.0)
    whole = lorentz_norm_d1(f, dims4)
    assert whole <= lorentz_norm_d1(f, dims4, m) + lorentz_norm_d1(f, dims4, ~m) + 1e-12


def test_divergence_zero_field(small_grid, dims4):
    z = ScalarField2D(small_grid, np.zeros(small_grid.shape))
    assert coordinate_divergence(VelocityField2D(z, z), dims4).sup() == 0


def test_divergence_linear_field_exact():
    for d in (3, 4, 7):
        dims = make_dimension_params(d)
        g = Grid2D(12, 12, 3.0, 3.0)
        R, Z = g.mesh()
        u = VelocityField2D(ScalarField2D(g, R), ScalarField2D(g, -(d - 1) * Z))
        assert coordinate_divergence(u, dims).sup() < 1e-12


def test_divergence_schwartz_second_order(dims4):
    errs = []
    for n in (64, 128):
        g = Grid2D(n, 2 * n, 6.0, 6.0)
        ur, uz = schwartz_velocity(*g.mesh(), dims4.k)
        u = VelocityField2D(ScalarField2D(g, ur), ScalarField2D(g, uz))
        errs.append(coordinate_divergence(u, dims4).sup())
    assert math.log2(errs[0] / errs[1]) > 1.9


def test_vorticity_of_gradient_vanishes(dims4):
    errs = []
    for n in (32, 64):
        g = Grid2D(n, 2 * n, 4.0, 4.0)
        R, Z = g.mesh()
        # f = sin(r) cos(z) exp(-r^2/4)
        E = np.exp(-R * R / 4)
        fr = (np.cos(R) - R / 2 * np.sin(R)) * np.cos(Z) * E
        fz = -np.sin(R) * np.sin(Z) * E
        u = VelocityField2D(ScalarField2D(g, fr), ScalarField2D(g, fz))
        errs.append(scalar_vorticity(u).sup())
    assert errs[1] < errs[0] / 3.5 and errs[1] < 1e-2


def test_vorticity_of_schwartz_field(dims4):
    g = Grid2D(128, 256, 6.0, 6.0)
    R, Z = g.mesh()
    ur, uz = schwartz_velocity(R, Z, 2)
    w = scalar_vorticity(VelocityField2D(ScalarField2D(g, ur), ScalarField2D(g, uz)))
    exact = R * Z * (16 - 4 * R * R - 4 * Z * Z) * np.exp(-R * R - Z * Z)
    assert np.abs(w.values - exact).max() / np.abs(exact).max() < 5e-3


def test_mismatched_grids_rejected(dims4):
    a = ScalarField2D(Grid2D(4, 4, 1.0, 1.0), np.zeros((4, 4)))
    b = ScalarField2D(Grid2D(4, 4, 2.0, 1.0), np.zeros((4, 4)))
    with pytest.raises(ContractError):
        VelocityField2D(a, b)


def test_support_radius_cases():
    g = Grid2D(40, 20, 4.0, 2.0)
    assert support_radius(ScalarField2D(g, np.zeros(g.shape)), 0.0) == 0.0
    R, Z = g.mesh()
    ind = ScalarField2D(g, (R < 2).astype(float))
    below = g.r_nodes[g.r_nodes < 2].max()
    assert support_radius(ind, 0.5) == below
    gauss = ScalarField2D(g, np.exp(-R * R))
    rr = support_radius(gauss, math.exp(-4))
    assert abs(rr - 2.0) <= g.dr
    with pytest.raises(ValueError):
        support_radius(gauss, -1.0)


def test_field_csv_round_trip(tmp_path):
    for g in (Grid2D(5, 6, 1.5, 2.0), Grid2D(4, 3, 1.0, 1.0, upper=True)):
        f = ScalarField2D(g, np.random.default_rng(1).normal(size=g.shape))
        p = tmp_path / "f.csv"
        write_field_csv(f, p)
        assert p.read_text().splitlines()[0] == "r,z,value"
        back = read_field_csv(p)
        assert back.grid.shape == g.shape and back.grid.upper == g.upper
        np.testing.assert_array_equal(back.values, f.values)
        np.testing.assert_allclose(back.grid.r_nodes, g.r_nodes, rtol=1e-14)


@pytest.mark.parametrize("order,deg", [(2, 2), (4, 4)])
def test_difference_stencils_exact_on_polynomials(order, deg):
    from axieuler.core_fields import d_dr, d_dz
    g = Grid2D(9, 10, 2.0, 2.0)
    R, Z = g.mesh()
    np.testing.assert_allclose(d_dr(R**deg + Z, g.dr, order=order), deg * R ** (deg - 1), atol=1e-10)
    np.testing.assert_allclose(d_dz(R + Z**deg, g.dz, order=order), deg * Z ** (deg - 1), atol=1e-10)
    if order == 4:
        # mirror ghosts: odd r^3 and even r^4 keep full accuracy at the axis nodes
        np.testing.assert_allclose(d_dr(R**3, g.dr, axis_parity=-1, order=4)[:2], 3 * R[:2] ** 2, atol=1e-10)
        np.testing.assert_allclose(d_dr(R**4, g.dr, axis_parity=1, order=4)[:2], 4 * R[:2] ** 3, atol=1e-10)
    with pytest.raises(ValueError):
        d_dr(R, g.dr, order=3)
