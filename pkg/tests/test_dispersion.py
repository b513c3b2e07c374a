import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from wignerfluid.dispersion import (
    DiffusionOperator,
    EquilibriumDistribution1D,
    apply_L,
    cubic_residual,
    dispersion_scan,
    equivalence_sweep,
    figure_profile,
    fluid_dispersion_approx,
    fluid_dispersion_function,
    fluid_dispersion_roots,
    gd_kinetic_eval,
    kinetic_dispersion_function,
    kinetic_dispersion_solve,
    series_multiplier,
    write_figure_csv,
    write_scan_csv,
)
from wignerfluid.params import EquilibriumPressure, PhysicalSetup


def gauss_average(v, H):
    """Closed-form interval average of exp(-x^2/2) over [v - H, v + H]."""
    return math.sqrt(math.pi / 2) / (2 * H) * (special.erf((v + H) / math.sqrt(2)) - special.erf((v - H) / math.sqrt(2)))


def test_operator_basics():
    op = DiffusionOperator(k=0.6, hbar=1.5, mass=0.5)
    assert op.half_width == pytest.approx(0.9)
    assert DiffusionOperator(0.0, 1.0, 1.0).is_identity
    assert DiffusionOperator(1.0, 1.0, 1.0, "series", 0).is_identity
    assert not op.is_identity
    for bad in (dict(k=-1, hbar=1, mass=1), dict(k=1, hbar=1, mass=0),
                dict(k=1, hbar=1, mass=1, mode="fast"), dict(k=1, hbar=1, mass=1, mode="series", order=-1)):
        with pytest.raises(ValueError):
            DiffusionOperator(**bad)


def test_polynomials_are_averaged_exactly():
    op = DiffusionOperator(k=1.0, hbar=1.4, mass=1.0)
    w = op.half_width
    v = np.linspace(-2, 2, 9)
    np.testing.assert_allclose(apply_L(op, lambda x: np.ones_like(x), v), 1.0, rtol=1e-13)
    np.testing.assert_allclose(apply_L(op, lambda x: 3 * x - 1, v), 3 * v - 1, atol=1e-13)
    np.testing.assert_allclose(apply_L(op, lambda x: x**2, v), v**2 + w**2 / 3, atol=1e-13)


def test_identity_when_hbar_vanishes():
    g = lambda x: np.exp(-x * x) * np.cos(x)  # noqa: E731
    v = np.linspace(-3, 3, 31)
    op = DiffusionOperator(k=1.0, hbar=0.0, mass=1.0)
    np.testing.assert_array_equal(apply_L(op, g, v), g(v))
    assert apply_L(op, g) is g


@pytest.mark.parametrize("H", [0.3, 1.0, 2.0, 3.5])
def test_gaussian_profile_matches_erf(H):
    v = np.linspace(-5, 5, 41)
    np.testing.assert_allclose(figure_profile(H, v), gauss_average(v, H), atol=1e-13)


def test_figure_centre_values():
    centre = [float(figure_profile(H, [0.0])[0]) for H in (0.0, 1.0, 2.0)]
    assert centre[0] == 1.0
    assert centre[1] == pytest.approx(0.85562439, abs=1e-8)
    assert centre[2] == pytest.approx(0.59814401, abs=1e-8)
    text = write_figure_csv(points=11)
    lines = text.splitlines()
    assert lines[0] == "v_z,f_parallel,H" and len(lines) == 1 + 3 * 11


def test_callable_result_and_scaling_with_v0():
    op = DiffusionOperator(k=1.0, hbar=2.0, mass=1.0)
    Lg = apply_L(op, lambda x: np.exp(-0.5 * x * x))
    assert Lg(0.0) == pytest.approx(gauss_average(0.0, 1.0), abs=1e-13)
    np.testing.assert_allclose(figure_profile(1.0, [0.0, 2.0], v0=2.0), gauss_average(np.array([0.0, 1.0]), 1.0), atol=1e-13)


def test_sampled_input_matches_callable():
    v = np.linspace(-10, 10, 2001)
    g = np.exp(-0.5 * v**2)
    op = DiffusionOperator(k=1.0, hbar=2.0, mass=1.0)
    np.testing.assert_allclose(apply_L(op, g, v), gauss_average(v, 1.0), atol=1e-9)


def test_sampled_input_errors():
    v = np.linspace(-1, 1, 50)
    op = DiffusionOperator(k=1.0, hbar=2.0, mass=1.0)
    with pytest.raises(ValueError, match="exceeds"):
        apply_L(op, np.exp(-v * v), v)
    v = np.linspace(-4, 4, 50)
    with pytest.raises(ValueError, match="decay"):
        apply_L(op, np.ones_like(v), v)
    with pytest.raises(ValueError):
        apply_L(op, np.exp(-v * v), v[::-1] ** 3)
    with pytest.raises(ValueError):
        apply_L(op, np.exp(-v * v))
    with pytest.raises(ValueError):
        apply_L(DiffusionOperator(1.0, 1.0, 1.0, "series", 2), lambda x: x)


def test_series_symbol_tends_to_sinc():
    x = np.linspace(-2.5, 2.5, 51)
    np.testing.assert_allclose(series_multiplier(x, 1.0, 20), np.sinc(x / np.pi), atol=1e-14)
    np.testing.assert_array_equal(series_multiplier(x, 1.0, 0), 1.0)
    np.testing.assert_allclose(series_multiplier(x, 1.0, 1), 1 - x**2 / 6)


def test_series_on_samples_matches_hermite_form():
    f0 = EquilibriumDistribution1D(v0=1.0, p_perp=1.0)
    v = np.linspace(-20, 20, 512, endpoint=False)
    w = 0.7
    for J in (1, 2, 4):
        op = DiffusionOperator(k=1.0, hbar=1.4, mass=1.0, mode="series", order=J)
        np.testing.assert_allclose(apply_L(op, f0.f_par(v), v), f0.series_averaged(v, w, J), atol=1e-12)


def test_series_converges_monotonically_to_exact():
    f0 = EquilibriumDistribution1D(v0=1.0, p_perp=1.0)
    v = np.linspace(-4, 4, 33)
    exact = f0.averaged(v, 1.0)
    errs = [np.abs(f0.series_averaged(v, 1.0, J) - exact).max() for J in range(0, 9)]
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-7


def test_closed_form_average_against_quadrature():
    f0 = EquilibriumDistribution1D(v0=1.3, p_perp=1.0)
    for w in (1e-6, 0.99e-4 * 1.3, 1.01e-4 * 1.3, 0.05, 1.0, 4.0):
        for vi in (-6.0, -1.0, 0.0, 0.4, 3.0, 7.5):
            ref, _ = integrate.quad(f0.f_par, vi - w, vi + w, epsabs=0, epsrel=1e-13)
            assert f0.averaged(vi, w) == pytest.approx(ref / (2 * w), rel=1e-9, abs=1e-300)


@given(st.floats(0.0, 5.0), st.floats(0.2, 3.0))
@settings(max_examples=30, deadline=None)
def test_average_conserves_particles(w, v0):
    f0 = EquilibriumDistribution1D(v0=v0, p_perp=1.0)
    total, _ = integrate.quad(lambda x: f0.averaged(x, w), -np.inf, np.inf, epsabs=1e-14, epsrel=1e-13)
    assert abs(total - 1.0) < 1e-10


@given(st.floats(0.01, 4.0))
@settings(max_examples=20, deadline=None)
def test_average_smooths_and_stays_positive(H):
    v = np.linspace(-6, 6, 61)
    prof = figure_profile(H, v)
    assert prof.max() <= 1.0 + 1e-15
    assert np.all(prof >= 0)
    np.testing.assert_allclose(prof, prof[::-1], atol=1e-14)


def test_equilibrium_validation_and_moments():
    with pytest.raises(ValueError):
        EquilibriumDistribution1D(v0=0.0, p_perp=1.0)
    with pytest.raises(ValueError):
        EquilibriumDistribution1D(v0=1.0, p_perp=-1.0)
    f0 = EquilibriumDistribution1D(v0=1.5, p_perp=2.0, n0=2.0)
    assert f0.perp_mean_square(mass=0.5) == pytest.approx(4.0)
    m2, _ = integrate.quad(lambda x: x * x * f0.f_par(x), -np.inf, np.inf)
    assert m2 == pytest.approx(1.5**2)
    assert f0.df_par(0.7) == pytest.approx((f0.f_par(0.7 + 1e-6) - f0.f_par(0.7 - 1e-6)) / 2e-6, rel=1e-8)


# ---------------------------------------------------------------------------
# fluid relation

SETUP = PhysicalSetup(c_light=10.0, hbar=1.5)
EQ = EquilibriumPressure.isotropic(1.0)


def test_fluid_root_limits():
    assert fluid_dispersion_roots(0.0, SETUP, EQ).omega == pytest.approx(SETUP.omega_p, rel=1e-15)
    cold = fluid_dispersion_roots(0.8, SETUP, EquilibriumPressure(0.0, 1.0))
    assert cold.omega == pytest.approx(math.sqrt(SETUP.omega_p**2 + 64.0), rel=1e-14)
    classical = fluid_dispersion_roots(0.8, SETUP, EQ, quantum=False).omega ** 2
    a = SETUP.omega_p**2 + 64.0
    b = SETUP.omega_p**2 * 0.64
    assert classical == pytest.approx((a + math.sqrt(a * a + 4 * b)) / 2, rel=1e-14)
    with pytest.raises(ValueError):
        fluid_dispersion_roots(-0.1, SETUP, EQ)


@pytest.mark.parametrize("k", [0.01, 0.3, 1.0, 3.0, 10.0])
def test_fluid_root_solves_relation(k):
    r = fluid_dispersion_roots(k, SETUP, EQ)
    assert r.residual < 1e-13
    assert cubic_residual(r.omega**2, k, SETUP, EQ) < 1e-14
    assert abs(fluid_dispersion_function(r.omega, k, SETUP, EQ)) < 1e-12 * r.omega**2
    assert r.omega > fluid_dispersion_roots(k, SETUP, EQ, quantum=False).omega


def test_long_wavelength_approximation_error_is_fourth_order():
    s = PhysicalSetup(c_light=3.0, hbar=1.0)
    err = [abs(fluid_dispersion_approx(k, s, EQ) - fluid_dispersion_roots(k, s, EQ).omega) for k in (0.08, 0.04, 0.02)]
    for a, b in zip(err, err[1:]):
        assert 14 < a / b < 18


def test_fluid_scan_is_increasing_and_exports():
    rows = dispersion_scan(0.0, 2.0, 21, "fluid", SETUP, EQ)
    om = np.array([r.omega for r in rows])
    assert np.all(np.diff(om) > 0)
    single = dispersion_scan(0.5, 0.5, 1, "fluid", SETUP, EQ)
    assert len(single) == 1 and single[0].k == 0.5
    lines = write_scan_csv(rows).splitlines()
    assert lines[0] == "k,omega,residual,branch,method" and len(lines) == 22
    assert lines[1].endswith(",em,fluid")
    with pytest.raises(ValueError):
        dispersion_scan(1.0, 0.5, 10, "fluid", SETUP, EQ)
    with pytest.raises(ValueError, match="unknown"):
        dispersion_scan(0.0, 1.0, 3, "guess", SETUP, EQ)
    with pytest.raises(ValueError):
        dispersion_scan(0.0, 1.0, 1, "fluid", SETUP, EQ)


# ---------------------------------------------------------------------------
# kinetic relations

def test_kinetic_cold_plasma_is_exact():
    f0 = EquilibriumDistribution1D(v0=1.0, p_perp=0.0)
    r = kinetic_dispersion_solve(0.5, SETUP, f0)
    assert r.omega == pytest.approx(math.sqrt(SETUP.omega_p**2 + 25.0), rel=1e-13)
    assert kinetic_dispersion_solve(0.0, SETUP, f0).omega == SETUP.omega_p


def test_kinetic_classical_limit_matches_fluid_to_thermal_order():
    s = PhysicalSetup(c_light=10.0, hbar=0.0)
    f0 = EquilibriumDistribution1D(v0=1.0, p_perp=1.0)
    gaps = []
    for k in (0.1, 0.05):
        kin = kinetic_dispersion_solve(k, s, f0).omega
        gaps.append(abs(kin - fluid_dispersion_roots(k, s, EQ, quantum=False).omega))
    assert gaps[0] / gaps[1] > 4


def test_kinetic_root_and_series_modes():
    f0 = EquilibriumDistribution1D(v0=1.0, p_perp=1.0)
    k = 0.3
    exact = kinetic_dispersion_solve(k, SETUP, f0)
    assert abs(kinetic_dispersion_function(exact.omega, k, SETUP, f0)) < 1e-10
    classical = kinetic_dispersion_solve(k, SETUP.with_hbar(0.0), f0).omega
    assert kinetic_dispersion_solve(k, SETUP, f0, "series", 0).omega == pytest.approx(classical, rel=1e-13)
    errs = [abs(kinetic_dispersion_solve(k, SETUP, f0, "series", J).omega - exact.omega) for J in (0, 1, 2, 3)]
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-9 * exact.omega


def test_kinetic_scan_tracks_branch():
    rows = dispersion_scan(0.05, 0.5, 6, "kinetic", SETUP, EQ)
    om = [r.omega for r in rows]
    assert all(b > a for a, b in zip(om, om[1:]))
    assert max(r.residual for r in rows) < 1e-10
    series = dispersion_scan(0.05, 0.5, 6, "kinetic-series", SETUP, EQ, order=4)
    np.testing.assert_allclose([r.omega for r in series], om, rtol=1e-9)


def test_resonance_is_reported():
    f0 = EquilibriumDistribution1D(v0=1.0, p_perp=1.0)
    with pytest.raises(ValueError, match="resonance"):
        kinetic_dispersion_function(2.0, 1.0, SETUP, f0)
    with pytest.raises(ValueError, match="resonance"):
        gd_kinetic_eval(2.0, 1.0, SETUP, f0)


def test_gauge_dependent_form_agrees():
    assert max(equivalence_sweep(seed=4, count=10)) < 1e-8
    f0 = EquilibriumDistribution1D(v0=1.0, p_perp=0.7)
    s0 = SETUP.with_hbar(0.0)
    a = gd_kinetic_eval(12.0, 0.8, s0, f0)
    b = kinetic_dispersion_function(12.0, 0.8, s0, f0)
    assert a == pytest.approx(b, abs=1e-10)
