import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from axieuler.biot_savart import velocity_general
from axieuler.core_fields import (
    Grid2D,
    ScalarField2D,
    VelocityField2D,
    coordinate_divergence,
    make_dimension_params,
)
from axieuler.euler_rz import (
    CFLViolation,
    SimulationConfig,
    advect_xi,
    apply_stream_operator,
    interpolate,
    omega_from_xi,
    run_simulation,
    solve_stream,
    solve_stream_values,
    trace_flow_map,
    velocity_from_stream,
    velocity_from_vorticity,
    xi_from_omega,
)
from conftest import schwartz_omega, schwartz_velocity


def field(g, v):
    return ScalarField2D(g, np.broadcast_to(v, g.shape))


def uniform_velocity(g, ur, uz):
    return VelocityField2D(field(g, np.full(g.shape, ur)), field(g, np.full(g.shape, uz)))


def test_stream_of_zero_is_zero(dims4, small_grid):
    psi = solve_stream(field(small_grid, 0.0), dims4)
    assert np.all(psi.values == 0)
    u = velocity_from_stream(psi, dims4)
    assert u.sup() == 0


def test_stream_solution_converges_second_order(dims4):
    errs = []
    for n in (64, 128):
        g = Grid2D(n, 2 * n, 6.0, 6.0)
        R, Z = g.mesh()
        psi = solve_stream(schwartz_omega(g, 2), dims4)
        errs.append(np.abs(psi.values - R * Z * np.exp(-R * R - Z * Z)).max())
    assert errs[1] < 1e-3 and math.log2(errs[0] / errs[1]) > 1.9


def test_velocity_from_analytic_stream(dims4):
    g = Grid2D(128, 256, 6.0, 6.0)
    R, Z = g.mesh()
    u = velocity_from_stream(field(g, R * Z * np.exp(-R * R - Z * Z)), dims4)
    ur, uz = schwartz_velocity(R, Z, 2)
    assert np.abs(u.u_r.values - ur).max() < 2e-3
    assert np.abs(u.u_z.values - uz).max() < 2e-3


@pytest.mark.parametrize("d", [3, 4, 6])
def test_stream_velocity_divergence_small(d):
    dims = make_dimension_params(d)
    errs = []
    for n in (64, 128):
        g = Grid2D(n, 2 * n, 5.0, 5.0)
        R, Z = g.mesh()
        psi = field(g, R * np.sin(Z) * np.exp(-R * R - Z * Z))
        errs.append(coordinate_divergence(velocity_from_stream(psi, dims), dims, order=2).sup())
    assert errs[1] < 5e-3 and math.log2(errs[0] / errs[1]) > 1.9


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**31))
def test_stream_solve_is_linear(a, b, seed):
    g = Grid2D(12, 16, 2.0, 2.0)
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=g.shape), rng.normal(size=g.shape)
    lhs = solve_stream_values(a * x + b * y, g, 2.0, tol=1e-9)
    rhs = a * solve_stream_values(x, g, 2.0, tol=1e-9) + b * solve_stream_values(y, g, 2.0, tol=1e-9)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(rhs).max()))


def test_stream_residual_meets_tolerance(dims3):
    g = Grid2D(48, 96, 5.0, 5.0)
    w = schwartz_omega(g, 1)
    psi = solve_stream(w, dims3, tol=1e-11)
    res = np.linalg.norm(apply_stream_operator(psi.values, g, 1) - w.values)
    assert res <= 1e-11 * np.linalg.norm(w.values)


def test_stream_agrees_with_biot_savart(dims4):
    probes = np.array([(r, z) for r in (0.4, 0.9, 1.5) for z in (-1.0, 0.3, 1.2)])
    errs = []
    for n in (32, 64):
        g = Grid2D(n, 2 * n, 6.0, 6.0)
        w = schwartz_omega(g, 2)
        u = velocity_from_vorticity(w, dims4)
        ur = interpolate(u.u_r.values, g, probes[:, 0], probes[:, 1], axis_parity=-1)
        uz = interpolate(u.u_z.values, g, probes[:, 0], probes[:, 1])
        ub = velocity_general(w, dims4, probes)
        errs.append(max(np.abs(ur - ub[:, 0]).max(), np.abs(uz - ub[:, 1]).max()) / np.abs(ub).max())
    assert errs[1] < 1e-2 and errs[1] < errs[0]


def test_interpolation_exact_on_bilinear_and_symmetric():
    g = Grid2D(16, 16, 4.0, 4.0)
    R, Z = g.mesh()
    r = np.array([0.3, 1.7, 2.2])
    z = np.array([-1.1, 0.05, 1.9])
    np.testing.assert_allclose(interpolate(1 + 2 * R * R + Z, g, r, z), 1 + 2 * r * r + z, atol=1e-12)
    # odd parity reproduces r * z across the axis
    np.testing.assert_allclose(interpolate(R * Z, g, r / 10, z, axis_parity=-1), r / 10 * z, atol=1e-12)


def test_advect_zero_velocity_is_identity(small_grid):
    xi = field(small_grid, np.random.default_rng(0).normal(size=small_grid.shape))
    out = advect_xi(xi, uniform_velocity(small_grid, 0.0, 0.0), 0.1)
    np.testing.assert_array_equal(out.values, xi.values)


def test_advect_uniform_translation():
    c, dt = 0.8, 0.05
    errs = []
    for n in (32, 64):
        g = Grid2D(n, 4 * n, 4.0, 8.0)
        R, Z = g.mesh()
        xi = field(g, np.exp(-R * R - (Z - 1) ** 2))
        out = advect_xi(xi, uniform_velocity(g, 0.0, c), dt)
        errs.append(np.abs(out.values - np.exp(-R * R - (Z - c * dt - 1) ** 2)).max())
    assert errs[1] < 1e-3 and errs[1] < errs[0] / 3


def test_advect_straining_flow_keeps_range(dims4):
    g = Grid2D(32, 64, 4.0, 4.0)
    R, Z = g.mesh()
    xi = field(g, np.exp(-(R - 1) ** 2 - Z * Z) - 0.5 * np.exp(-R * R - (Z - 1) ** 2))
    u = VelocityField2D(field(g, R), field(g, -(dims4.d - 1) * Z))
    lo, hi = xi.values.min(), xi.values.max()
    for _ in range(10):
        xi = advect_xi(xi, u, 0.005)
    assert xi.values.max() <= hi + 1e-12 and xi.values.min() >= lo - 1e-12


def test_advect_rejects_cfl_violation(small_grid):
    xi = field(small_grid, 1.0)
    with pytest.raises(CFLViolation):
        advect_xi(xi, uniform_velocity(small_grid, 0.0, 10.0), 1.0)


def test_xi_omega_round_trip(dims4, small_grid):
    w = schwartz_omega(small_grid, 2)
    np.testing.assert_allclose(omega_from_xi(xi_from_omega(w, dims4), dims4).values, w.values, rtol=1e-14, atol=1e-300)


def test_config_validation(dims4, small_grid):
    with pytest.raises(ValueError):
        SimulationConfig(dims4, small_grid, 1.0, "zero")
    with pytest.raises(ValueError):
        SimulationConfig(dims4, small_grid, 1.0, "zero", dt=0.1, cfl=0.5)
    with pytest.raises(ValueError):
        SimulationConfig(dims4, small_grid, -1.0, "zero", dt=0.1)
    with pytest.raises(ValueError) as err:
        SimulationConfig(dims4, small_grid, 0.0, "zero", stream_solver_tol=1.0)
    assert "stream_solver_tol" in str(err.value) and "dt and cfl" in str(err.value)


def test_zero_initial_data_stays_zero(dims4, small_grid):
    res = run_simulation(SimulationConfig(dims4, small_grid, 0.5, "zero", dt=0.1))
    assert res.status == "finished"
    assert len(res.series) == 6
    for rec in res.series:
        assert rec.sup_omega == 0 and rec.sup_xi == 0 and rec.lorentz_d1_omega == 0
    assert res.series[-1].t == pytest.approx(0.5)


def test_fixed_dt_halves_on_cfl(dims4):
    g = Grid2D(32, 64, 5.0, 5.0)
    cfg = SimulationConfig(dims4, g, 4.0, "odd-positive-regular", dt=4.0)
    res = run_simulation(cfg)
    ts = [r.t for r in res.series]
    assert len(ts) > 2 and ts[-1] == pytest.approx(4.0)


@pytest.fixture(scope="module")
def short_run():
    dims = make_dimension_params(4)
    g = Grid2D(32, 64, 5.0, 5.0)
    cfg = SimulationConfig(dims, g, 0.4, "odd-positive-regular", cfl=0.5)
    return dims, run_simulation(cfg, keep_velocity=True)


def test_simulation_preserves_z_oddness(short_run):
    _, res = short_run
    for _, w in res.snapshots:
        v = w.values
        assert np.abs(v + v[:, ::-1]).max() <= 1e-10 * max(np.abs(v).max(), 1e-300)


def test_simulation_xi_range_and_axis_decay(short_run):
    dims, res = short_run
    s0 = res.series[0].sup_xi
    g = res.omega0.grid
    for rec, (_, w) in zip(res.series, res.snapshots):
        assert abs(rec.sup_xi - s0) <= 0.02 * s0
        assert np.abs(w.values[0]).max() <= rec.sup_xi * (g.dr / 2) ** dims.k * (1 + 1e-12)


def test_flow_map_identity_short_run(short_run):
    dims, res = short_run
    labels = [(r, z) for r in (0.6, 1.0, 1.4) for z in (0.4, 0.8, -0.6)]
    traj = trace_flow_map(res.velocity_history, labels, xi0=xi_from_omega(res.omega0, dims))
    assert np.all(traj.positions[:, :, 0] >= 0)
    np.testing.assert_array_equal(traj.positions[0], np.array(labels))
    defect = traj.scaling_defect(res.snapshots[-1][1], dims)
    assert np.abs(defect).max() <= 0.02 * res.series[0].sup_xi


def test_flow_map_zero_and_uniform(small_grid):
    labels = [(1.0, 0.5), (2.0, -1.0)]
    zero = [(t, uniform_velocity(small_grid, 0.0, 0.0)) for t in (0.0, 0.5, 1.0)]
    traj = trace_flow_map(zero, labels)
    np.testing.assert_array_equal(traj.positions[-1], np.array(labels))
    c = 0.3
    uni = [(t, uniform_velocity(small_grid, 0.0, c)) for t in (0.0, 0.5, 1.0)]
    traj = trace_flow_map(uni, labels)
    np.testing.assert_allclose(traj.positions[-1][:, 1], [0.5 + c, -1.0 + c], atol=1e-14)
    np.testing.assert_allclose(traj.positions[-1][:, 0], [1.0, 2.0], atol=1e-14)


def test_flow_map_flags_exit():
    g = Grid2D(8, 8, 2.0, 2.0)
    hist = [(t, uniform_velocity(g, 0.0, 1.0)) for t in (0.0, 1.0, 2.0)]
    traj = trace_flow_map(hist, [(1.0, 1.5)])
    assert traj.exited[0]
    assert traj.positions[-1][0, 1] <= g.z_max
