import math

import numpy as np
import pytest

from crystalbec import bifurcation_ordinary as bif
from crystalbec import planewave_band as pw
from crystalbec.errors import DegenerateBranchError
from crystalbec.kernels import ThermoPoint


def test_constant_potential_is_free_particle():
    for p in [(0.0, 0.0, 0.0), (0.3, -1.2, 2.1)]:
        e, psi = pw.solve_band({(0, 0, 0): 0.7}, p, 2)
        assert e == pytest.approx(0.7 + 0.5 * sum(x * x for x in p), rel=1e-14)
        assert psi == pytest.approx(1.0)


def test_weak_potential_second_order_shift():
    v = 1e-3
    U = pw.first_shell_potential_3d(0.0, v, 1.0)
    e, psi = pw.solve_band(U, (0.0, 0.0, 0.0), 3)
    pt2 = 6 * v * v / (-0.5)
    assert e - pt2 == pytest.approx(0.0, abs=10 * v**3)
    assert psi < 1.0


def test_degenerate_branch_is_flagged():
    U = pw.first_shell_potential_3d(0.3, 0.1, -0.5)
    with pytest.raises(DegenerateBranchError):
        pw.solve_band(U, (0.5, 0.0, 0.0), 3)


def test_hermitian_and_residual():
    U = pw.first_shell_potential_3d(0.3, 0.2, -0.5)
    H = pw.hamiltonian(U, (0.2, 0.1, -0.3), 2)
    assert np.allclose(H, H.conj().T)
    bp = pw.solve_band_full(U, (0.2, 0.1, -0.3), 2)
    assert bp.residual < 1e-10
    assert np.isrealobj(bp.eigvals)


def test_cutoff_convergence():
    U = pw.first_shell_potential_3d(0.3, 0.1, -0.5)
    for p in [(0.1, 0.0, 0.0), (0.3, 0.2, 0.1)]:
        a, b = pw.solve_band(U, p, 3), pw.solve_band(U, p, 6)
        assert a[0] == pytest.approx(b[0], abs=1e-8)
        assert a[1] == pytest.approx(b[1], abs=1e-8)


def test_large_momentum_shift_saturates():
    # along x only the transverse couplings survive, so eps0 - p^2/2 tends to a constant
    U = pw.first_shell_potential_3d(0.3, 0.1, -0.5)
    shift = [pw.solve_band(U, (p, 0.0, 0.0), 3)[0] - 0.5 * p * p for p in (6.2, 9.2, 12.2)]
    assert abs(shift[2] - shift[1]) < abs(shift[1] - shift[0]) < 1e-4
    assert shift[2] == pytest.approx(0.3 - 4 * 0.05**2 / 0.5, abs=2e-3)


def test_rejects_nonreal_potential():
    with pytest.raises(ValueError):
        pw.solve_band({(1, 0, 0): 1j, (-1, 0, 0): 1j}, (0, 0, 0), 2)


def test_phi_normalization_constant_potential():
    tp = ThermoPoint(theta=0.4, rho0=1.3, tau=0.4)
    band = pw.BandFunction({(0, 0, 0): 0.3}, 2)
    phi = pw.phi_of_p(band, tp, n_quad=4)
    p = (0.2, -0.1, 0.4)
    want = 1.3 * math.exp(-0.5 * 0.21 / 0.4) / (2 * math.pi * 0.4) ** 1.5
    assert phi(p) == pytest.approx(want, rel=1e-12)
    assert pw.kinetic_moment(band, tp, n_quad=4) == pytest.approx(1.5 * 0.4 * 1.3, rel=1e-12)


def test_separable_path_matches_full_3d():
    tp = ThermoPoint(theta=0.4, rho0=1.0, tau=0.4)
    band = pw.BandFunction(pw.first_shell_potential_3d(0.3, 0.1, -0.5), 2)
    K3 = pw.kinetic_moment(band, tp, n_quad=8)
    K1 = pw.separable_kinetic(pw.first_shell_potential_1d(0.3, 0.1, -0.5), 0.4, 1.0)
    assert K3 == pytest.approx(K1, rel=1e-6)


def test_selected_branch_weight():
    band = pw.BandFunction(pw.first_shell_potential_3d(0.3, 0.1, -0.5), 2)
    p = (0.1, 0.0, 0.0)
    sel = band.weight(p, 0.4, "selected")
    full = band.weight(p, 0.4, "all")
    assert 0 < sel < full


def test_kinetic_moment_against_second_order_on_shell():
    tau = bif.bifurcation_tau(-0.5, 1.0).tau_star
    errs = []
    for al in (0.08, 0.04):
        K = pw.separable_kinetic(pw.first_shell_potential_1d(0.3, al, -0.5), tau, 1.0)
        errs.append(abs(K / bif.kinetic_from(tau, 1.0, -0.5, al * al) - 1))
    assert math.log2(errs[0] / errs[1]) >= 2.5
