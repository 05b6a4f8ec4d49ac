import math

import numpy as np
import pytest
from scipy import integrate

from crystalbec.errors import NoBifurcationError
from crystalbec.kernels import (FIRST_SHELL, InteractionKernels, LatticeSpec, ThermoPoint, Units,
                                build_demo_kernels, evaluate_fourier, first_shell_coeffs,
                                fourier_potential, kernels_from_table, load_kernels, sigma_minimum)


def test_demo_sigma_is_even(demo_kernels):
    for k in np.linspace(0.0, 4.0, 17):
        assert demo_kernels.sigma_at(k) == demo_kernels.sigma_at(-k)


def test_demo_sigma0_matches_real_space_quadrature(demo_kernels):
    K = demo_kernels.real_space
    val, _ = integrate.quad(lambda r: 4.0 * math.pi * r * r * K(r), 0.0, np.inf, epsabs=1e-13, epsrel=1e-12)
    assert abs(val - demo_kernels.sigma0) <= 1e-8 * max(1.0, abs(val))


def test_demo_defaults_sigma_e_to_sigma(demo_kernels):
    assert demo_kernels.sigma_e_at(0.7) == demo_kernels.sigma_at(0.7)


def test_demo_minimum_location(demo_kernels):
    k, s = sigma_minimum(demo_kernels)
    assert k == pytest.approx(1.0, abs=1e-8)
    assert s == pytest.approx(-0.5, rel=1e-12)
    ks = np.linspace(0.5, 1.5, 200001)
    dense = min(demo_kernels.sigma_at(x) for x in ks[::10])
    assert abs(s - dense) <= 1e-8 * abs(s)


def test_derivative_matches_central_difference(demo_kernels):
    for k in (0.3, 0.9, 1.7, 2.5):
        h = 1e-6
        fd = (demo_kernels.sigma_at(k + h) - demo_kernels.sigma_at(k - h)) / (2 * h)
        assert demo_kernels.dsigma_dk_at(k) == pytest.approx(fd, rel=1e-5, abs=1e-10)


def test_demo_rejects_bad_parameters():
    with pytest.raises(ValueError):
        build_demo_kernels(-1.0, 0.5)
    with pytest.raises(NoBifurcationError):
        sigma_minimum(InteractionKernels(sigma=lambda k: math.exp(-k * k)))


def test_kirkwood_truncation(demo_kernels):
    kw = demo_kernels.kirkwood()
    assert kw.sigma_a(1.0) == demo_kernels.sigma_a(1.0)
    for nu in (2, 3):
        assert kw.sigma_at(nu * 1.0) == 0.0


def test_uniform_potential(demo_kernels):
    lat = LatticeSpec()
    U = fourier_potential(lat, {(0, 0, 0): 0.8}, demo_kernels)
    assert U == {(0, 0, 0): 0.8 * demo_kernels.sigma0}


def test_first_shell_potential_form(demo_kernels):
    lat = LatticeSpec()
    rho0, al = 1.0, 0.05
    U = fourier_potential(lat, first_shell_coeffs(rho0, al), demo_kernels)
    pts = np.random.default_rng(0).uniform(0, 2 * math.pi, size=(20, 3))
    got = evaluate_fourier(U, pts, lat)
    want = rho0 * demo_kernels.sigma0 + 2 * al * demo_kernels.sigma_a() * np.cos(pts).sum(axis=1)
    np.testing.assert_allclose(got.real, want, atol=1e-13)
    np.testing.assert_allclose(got.imag, 0.0, atol=1e-13)


def test_fourier_potential_is_linear(demo_kernels):
    lat = LatticeSpec()
    a = first_shell_coeffs(1.0, 0.1)
    b = first_shell_coeffs(0.5, -0.3)
    ab = {k: 2 * a[k] + 3 * b[k] for k in a}
    Ua, Ub, Uab = (fourier_potential(lat, c, demo_kernels) for c in (a, b, ab))
    for k in a:
        assert Uab[k] == pytest.approx(2 * Ua[k] + 3 * Ub[k])


def test_fourier_potential_rejects_nonreal_density(demo_kernels):
    with pytest.raises(ValueError):
        fourier_potential(LatticeSpec(), {(1, 0, 0): 1.0j, (-1, 0, 0): 1.0j}, demo_kernels)


def test_lattice_indices_closed_under_negation():
    idx = set(LatticeSpec(index_cutoff=2).indices())
    assert all((-l, -m, -n) in idx for l, m, n in idx)
    with pytest.raises(ValueError):
        LatticeSpec(index_cutoff=0)


def test_thermopoint_invariants():
    tp = ThermoPoint(theta=0.3, rho0=1.0, tau=0.25, rho_c=0.2)
    assert tp.beta_param == 1.0 / math.sqrt(0.5)
    assert tp.rho_n == pytest.approx(0.8)
    for bad in ({"rho_c": 2.0}, {"tau": 0.0}, {"rho0": -1.0}):
        kw = dict(theta=0.3, rho0=1.0, tau=0.25)
        kw.update(bad)
        with pytest.raises(ValueError):
            ThermoPoint(**kw)


def test_units_beta_matches_internal():
    u = Units(hbar=2.0, mass=3.0, a=0.5)
    tau_internal = 0.4
    assert u.beta(tau_internal * u.energy) == pytest.approx(1.0 / math.sqrt(2 * tau_internal))


def test_table_kernels_and_loader(demo_kernels):
    k = np.linspace(0.0, 6.0, 601)
    s = [demo_kernels.sigma_at(x) for x in k]
    kt = kernels_from_table(k, s)
    assert kt.sigma_at(1.0) == pytest.approx(-0.5, rel=1e-6)
    assert kt.sigma_at(-0.3) == kt.sigma_at(0.3)
    kd = load_kernels({"schema_version": 1, "kind": "demo", "depth": 0.5, "width": 0.5})
    assert kd.sigma_a() == demo_kernels.sigma_a()
    with pytest.raises(ValueError):
        load_kernels({"schema_version": 9, "kind": "demo"})
    assert len(FIRST_SHELL) == 6
