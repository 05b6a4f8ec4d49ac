import math

import numpy as np
import pytest

from crystalbec import bifurcation_ordinary as bif
from crystalbec import condensate_solver as cond
from crystalbec.errors import NonUnimodalError, RegimeError
from crystalbec.kernels import ThermoPoint


def test_small_q_matches_oracle():
    assert abs(cond.condensate_density_smallq(0.05) - cond.condensate_density_oracle(0.05)) <= 1e-4
    assert abs(cond.condensate_density_smallq(-0.1) - cond.condensate_density_oracle(-0.1)) <= 1e-3


def test_small_q_radius_enforced():
    with pytest.raises(RegimeError):
        cond.condensate_density_smallq(0.15)
    # the dispatcher switches to the oracle outside the radius
    assert cond.condensate_density(0.3) == cond.condensate_density_oracle(0.3)


def test_orbital_normalized_and_trivial_at_zero_q():
    c = cond.orbital_coeffs_1d(-0.4)
    assert c[0] ** 2 + 2 * np.sum(c[1:] ** 2) == pytest.approx(1.0, rel=1e-13)
    c0 = cond.orbital_coeffs_1d(0.0)
    assert c0[0] == pytest.approx(1.0) and np.allclose(c0[1:], 0.0)
    assert cond.condensate_density_oracle(0.0) == pytest.approx(0.0, abs=1e-15)


def test_first_shell_amplitude_is_convolution():
    q, rho_c = -0.3, 0.2
    c1 = cond.orbital_coeffs_1d(q)
    c3 = cond.coefficients_3d(c1, 4)
    a = cond.condensate_amplitudes(rho_c, c3, [(1, 0, 0), (0, 0, 0)])
    assert a[(1, 0, 0)] == pytest.approx(0.5 * rho_c * cond.condensate_density_oracle(q), rel=1e-10)
    assert a[(0, 0, 0)] == pytest.approx(rho_c, rel=1e-10)


def test_kinetic_sum_matches_derivative_norm():
    c1 = cond.orbital_coeffs_1d(-0.5)
    x = np.linspace(0, 2 * np.pi, 2001)[:-1]
    k = np.arange(c1.size)
    fp = -2 * np.sin(np.outer(x, k[1:])) @ (k[1:] * c1[1:])
    S1 = np.mean(fp**2)
    assert cond.kinetic_sum(c1) == pytest.approx(3 * S1, rel=1e-12)


def test_zeta_series_is_taylor_expansion():
    an, s = 0.05, -0.5
    z = cond.zeta_coefficients(an, s)
    h = 1e-4
    fp = [cond.solve_alpha1_c(r, an, s).fixed_point for r in (h, 2 * h)]
    assert (4 * fp[0] - fp[1]) / (2 * h) == pytest.approx(z[0], rel=1e-6)


def test_series_vs_fixed_point_gap_is_high_order():
    rcs = np.array([0.2, 0.1, 0.05])
    gaps = np.array([cond.solve_alpha1_c(r, 0.05, -0.5).disagreement for r in rcs])
    slope = np.polyfit(np.log(rcs), np.log(gaps), 1)[0]
    assert slope >= 3.5


def test_series_refuses_large_q():
    with pytest.raises(RegimeError):
        cond.solve_alpha1_c(0.1, 0.3, -0.5)
    r = cond.solve_alpha1_c(0.1, 0.3, -0.5, method="oracle")
    assert r.fixed_point == pytest.approx(0.5 * 0.1 * cond.condensate_density(2 * -0.5 * (r.fixed_point + 0.3)))


def test_normal_fraction_past_its_bifurcation_is_reported(demo_kernels):
    tp = ThermoPoint(theta=0.3, rho0=1.0, tau=0.3, rho_c=0.3)
    with pytest.raises(RegimeError):
        cond.solve_condensate(tp, demo_kernels)


def test_zero_condensate_reduces_to_ordinary(demo_kernels):
    tp = ThermoPoint(theta=0.3, rho0=1.0, tau=0.3)
    st = cond.solve_condensate(tp, demo_kernels)
    ordinary = bif.second_order(tp, demo_kernels)
    assert st.split.alpha1_c == 0.0
    assert st.split.alpha1_n == pytest.approx(ordinary.alpha, rel=1e-12)


@pytest.mark.parametrize("frac", [0.1, 0.2])
def test_condensate_state_and_virial(demo_kernels, frac):
    tp = ThermoPoint(theta=0.3, rho0=1.0, tau=0.3, rho_c=frac)
    st = cond.solve_condensate(tp, demo_kernels)
    assert st.residual < 1e-12
    assert st.split.xi[(1, 0, 0)] == pytest.approx(st.split.alpha1_c / st.split.alpha1_n)
    rep = cond.thermo_report(tp, st, demo_kernels)
    assert 2 * rep.energy_density - 3 * rep.pressure == pytest.approx(rep.Q_value, abs=1e-13)


def test_first_shell_Q(demo_kernels):
    v = cond.first_shell_Q(0.1, 0.2, demo_kernels)
    coeffs = {(0, 0, 0): 0.0}
    for idx in [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]:
        coeffs[idx] = 0.3
    assert v == pytest.approx(bif.virial_Q(coeffs, demo_kernels))


def _Q(theta, rho0, rho_c):
    return (rho_c - 0.25) ** 2 * (1 + theta) + 0.2 * rho0 * theta


def test_free_energy_at_reference_isotherm():
    f0 = lambda r: r * r  # noqa: E731
    assert cond.free_energy(2.0, 0.7, 0.1, _Q, 2.0, f0) == pytest.approx(0.49)


def test_free_energy_scaling_equation():
    f0 = lambda r: math.log(1 + r)  # noqa: E731
    th, r, rc = 0.9, 1.1, 0.2
    f = lambda a, b: cond.free_energy(a, b, rc, _Q, 2.0, f0)  # noqa: E731
    h = 1e-4
    lhs = (2 * th * (f(th * (1 + h), r) - f(th * (1 - h), r)) / (2 * th * h)
           + 3 * r * (f(th, r * (1 + h)) - f(th, r * (1 - h))) / (2 * r * h) - 5 * f(th, r))
    assert lhs == pytest.approx(-_Q(th, r, rc), rel=1e-7)


def test_minimize_rho_c_closure_constant():
    # with a fixed offset the minimiser is the offset itself, independent of theta
    for th in (0.4, 1.0, 1.7):
        m = cond.minimize_rho_c(th, 1.0, _Q, 2.0)
        # a quadratic minimum fixes its location only to about sqrt(machine eps)
        assert m.rho_c == pytest.approx(0.25, abs=1e-7)
        assert not m.degenerate


def test_minimize_rho_c_degenerate_and_multimodal():
    m = cond.minimize_rho_c(1.0, 1.0, lambda t, r, rc: t * r, 2.0)
    assert m.degenerate
    two_wells = lambda t, r, rc: (rc - 0.2) ** 2 * (rc - 0.8) ** 2  # noqa: E731
    with pytest.raises(NonUnimodalError) as ei:
        cond.minimize_rho_c(1.0, 1.0, two_wells, 2.0)
    locs = sorted(x for x, _ in ei.value.minima)
    assert locs == pytest.approx([0.2, 0.8], abs=1e-6)


def test_bec_line_slope_vanishes():
    Q = lambda t, r, rc: rc * rc + rc * (t - 1.0)  # noqa: E731
    th = cond.bec_line(1.0, Q, 2.0, 0.3, 1.9)
    assert abs(cond.bec_slope(th, 1.0, Q, 2.0)) < 1e-6
    assert cond.bec_slope(th * 0.9, 1.0, Q, 2.0) * cond.bec_slope(min(th * 1.1, 2.0), 1.0, Q, 2.0) < 0


def test_condensate_compatibility_reduces_without_condensate(demo_kernels):
    tp = ThermoPoint(theta=0.38, rho0=1.0, tau=0.38)
    model = bif.TauModel(1.0, 0.0)
    normal, cblock = cond.compatibility_terms_condensate(tp, demo_kernels, model)
    ref = bif.compatibility_terms(tp, demo_kernels, model)
    assert cblock == 0.0
    assert normal.total == pytest.approx(ref.total, rel=1e-9, abs=1e-12)
