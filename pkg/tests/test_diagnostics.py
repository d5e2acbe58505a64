import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from axieuler.core_fields import Grid2D, make_dimension_params
from axieuler.diagnostics import (
    SERIES_HEADER,
    BoundExpired,
    DiagnosticsRecord,
    FitRejected,
    InitialDataStats,
    blowup_rate_fit,
    criterion_lower_bound,
    fit_power_law,
    growth_bound,
    initial_data_stats,
    local_existence_bound,
    read_series_csv,
    support_ode_bound,
    write_series_csv,
)
from axieuler.presets import vorticity_field

C4 = 0.237212499164397173  # weak-norm oracle value, see test_biot_savart
C3 = 0.292436025884912926


def unit_stats(R=1.0, r0=1.0):
    return InitialDataStats.single(R, 1.0, 1.0, 1.0, 0.0, r0=r0)


def test_growth_bound_values(dims4):
    s = InitialDataStats.single(1.0, 1.0, 1.0, 0.0, 0.0)
    assert growth_bound(dims4, s, 1.0, 0.0) == 1.0
    assert growth_bound(dims4, s, 1.0, 1.0) == 4.0
    s2 = InitialDataStats.single(2.0, 3.0, 0.5, 0.0, 0.0)
    assert growth_bound(dims4, s2, 2.0, 0.0) == 3.0  # max(3, 4 * 0.5)
    with pytest.raises(ValueError):
        growth_bound(dims4, s, 0.0, 1.0)


@given(st.floats(0, 10), st.floats(0, 10), st.floats(0.1, 5), st.sampled_from([3, 4, 6]))
def test_ur_plus_variant_never_looser(i_plus, extra, R, d):
    dims = make_dimension_params(d)
    s = InitialDataStats.single(R, 0.7, 1.3, 0.0, 0.0)
    assert growth_bound(dims, s, R, i_plus) <= growth_bound(dims, s, R, i_plus + extra)


def test_local_existence_bound_initial_and_t_star(dims4):
    s = InitialDataStats.single(1.0, 2.0, 0.5, 1.0, 0.0)
    bound, t_star = local_existence_bound(dims4, s, 1.0, 0.0)
    assert bound == 2.0
    assert t_star == pytest.approx(1 / C4, rel=1e-12)
    assert t_star == pytest.approx(4.215629, abs=1e-6)
    with pytest.raises(BoundExpired):
        local_existence_bound(dims4, s, 1.0, t_star)
    b, _ = local_existence_bound(dims4, s, 1.0, 0.5 * t_star)
    assert b == pytest.approx(2.0 / 0.5**2)


def test_local_existence_bound_d3_exponential(dims3):
    s = InitialDataStats.single(2.0, 1.0, 0.1, 0.5, 0.25)
    mu = C3 / 2.0 * (0.5 + 2.0 * 0.25)
    b, t_star = local_existence_bound(dims3, s, 2.0, 3.0)
    assert t_star == math.inf
    assert b == pytest.approx(1.0 * math.exp(3.0 * mu), rel=1e-12)


def test_criterion_lower_bound(dims4):
    for t in (0.0, 0.5, 0.9):
        assert criterion_lower_bound(dims4, 1.0, 1.0, t) == pytest.approx(1 / (4 * C4**2 * (1 - t) ** 2), rel=1e-12)
    seq = [criterion_lower_bound(dims4, 1.0, 1.0, t) for t in (0.9, 0.99, 0.999, 0.9999)]
    assert all(b > a for a, b in zip(seq, seq[1:])) and seq[-1] > 1e8
    d5 = make_dimension_params(5)
    ratio = criterion_lower_bound(d5, 2.0, 1.0, 0.3) / criterion_lower_bound(d5, 1.0, 1.0, 0.3)
    assert ratio == pytest.approx(2 ** (-1 / 2), rel=1e-12)
    with pytest.raises(ValueError):
        criterion_lower_bound(dims4, 1.0, 1.0, 1.0)


def test_support_ode_bound(dims3, dims4):
    s = unit_stats()
    assert support_ode_bound(dims4, s, 5.0, a=0.0) == 1.0
    for t in (0.0, 0.3, 0.9):
        assert support_ode_bound(dims4, s, t, a=1.0) == pytest.approx(1 / (1 - t), rel=1e-12)
    with pytest.raises(BoundExpired):
        support_ode_bound(dims4, s, 1.0, a=1.0)
    s3 = InitialDataStats((1.0,), (0.0,), (1.0,), (0.0,), (0.0,), 0.0, 8.0, 1.5, 2.0)
    a = 3 * C3 * 8.0 ** (1 / 3) * 2.0
    assert support_ode_bound(dims3, s3, 0.4) == pytest.approx(1.5 * math.exp(a * 0.4), rel=1e-12)


def test_initial_stats_monotone(dims4):
    g = Grid2D(48, 96, 6.0, 6.0)
    st_ = initial_data_stats(vorticity_field("odd-positive-regular", g, dims4), dims4)
    assert len(st_.radii) == 5
    for seq in (st_.sup_omega0_outside_R, st_.lorentz_omega0_outside_R):
        assert all(b <= a for a, b in zip(seq, seq[1:]))
    for seq in (st_.sup_xi0_inside_R, st_.lorentz_xi0_inside_R):
        assert all(b >= a for a, b in zip(seq, seq[1:]))
    assert st_.r0 > 0 and st_.support_measure > 0
    with pytest.raises(ValueError):
        InitialDataStats.single(1.0, -1.0, 0.0, 0.0, 0.0)


def test_rate_fit_on_own_model():
    t = np.linspace(0.5, 0.99, 50)
    T, p = fit_power_law(t, 1 / (1 - t))
    assert T == pytest.approx(1.0, abs=1e-3) and p == pytest.approx(1.0, abs=1e-3)
    T, p = fit_power_law(t, 3.0 * (1.2 - t) ** -0.5, window=30)
    assert T == pytest.approx(1.2, abs=1e-3) and p == pytest.approx(0.5, abs=1e-3)


def test_rate_fit_rejections():
    t = np.linspace(0.0, 1.0, 30)
    with pytest.raises(FitRejected):
        fit_power_law(t, np.ones_like(t))
    with pytest.raises(FitRejected):
        fit_power_law(t, np.sin(5 * t) + 2)
    with pytest.raises(FitRejected):
        fit_power_law(t[:3], t[:3] + 1)


def test_rate_fit_from_series():
    t = np.linspace(0.5, 0.99, 25)
    series = [DiagnosticsRecord(x, 2 / (1 - x), 0, 0, 0, 0) for x in t]
    T, p = blowup_rate_fit(series)
    assert T == pytest.approx(1.0, abs=1e-3) and p == pytest.approx(1.0, abs=1e-3)


def test_series_csv_round_trip(tmp_path):
    r = DiagnosticsRecord(0.25, 1.5, 2.0, 3.0, 0.0, 1.25, {"bound_3reg": math.nan, "bound_local": 4.0},
                          {"bound_local": 2.5, "growth": 0.75})
    p = tmp_path / "s.csv"
    write_series_csv([r], p)
    lines = p.read_text().splitlines()
    assert lines[0] == ",".join(SERIES_HEADER)
    assert lines[1].split(",")[-1] == "0.75"
    back = read_series_csv(p)[0]
    assert (back.t, back.sup_omega, back.support_radius) == (0.25, 1.5, 1.25)
    assert back.bound_values["bound_local"] == 4.0 and math.isnan(back.bound_values["bound_3reg"])


def test_record_margin_ignores_nan():
    r = DiagnosticsRecord(0, 0, 0, 0, 0, 0, margins={"a": math.nan, "b": 2.0, "c": 1.0})
    assert r.margin == 1.0
    assert DiagnosticsRecord(0, 0, 0, 0, 0, 0).margin == math.inf
