"""Plane-wave diagonalization of the one-body problem in a periodic potential.

H_{A,A'} = delta_{AA'} (p + A)^2 / 2 + U_{A - A'} in internal units.  The
non-periodic branch eps0(p) is the eigenvector carrying the largest constant
Fourier component; psi0(p) is the modulus of that component.  The momentum
distribution phi(p) weights each branch by its constant component; by default
all branches are kept, which is <p| exp(-H/tau) |p> up to normalization.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import linalg

from .errors import DegenerateBranchError
from .kernels import ThermoPoint

Index = tuple[int, int, int]

DEGENERACY_TOL = 1e-2


def _basis(cutoff: int) -> list[Index]:
    r = range(-cutoff, cutoff + 1)
    return list(itertools.product(r, r, r))


def _check_potential(U: Mapping[Index, complex], tol: float = 1e-12):
    for idx, val in U.items():
        neg = (-idx[0], -idx[1], -idx[2])
        if abs(U.get(neg, 0.0) - np.conj(val)) > tol * max(1.0, abs(val)):
            raise ValueError(f"U_coeffs not conjugate-symmetric at {idx}")


@lru_cache(maxsize=16)
def _coupling(cutoff: int, U_items: tuple) -> tuple[np.ndarray, np.ndarray]:
    """Reciprocal vectors and the p-independent potential part of H."""
    basis = np.array(_basis(cutoff))
    m = 2 * cutoff + 1
    n = len(basis)
    V = np.zeros((n, n), dtype=complex)
    rows = np.arange(n)
    for idx, val in U_items:
        tgt = basis - np.array(idx)
        ok = np.all(np.abs(tgt) <= cutoff, axis=1)
        cols = ((tgt[ok, 0] + cutoff) * m + tgt[ok, 1] + cutoff) * m + tgt[ok, 2] + cutoff
        V[rows[ok], cols] += val
    return basis.astype(float), V


def hamiltonian(U: Mapping[Index, complex], p, cutoff: int, a: float = 1.0) -> np.ndarray:
    G, V = _coupling(cutoff, tuple(sorted((tuple(k), complex(v)) for k, v in U.items())))
    k = np.asarray(p, dtype=float) + a * G
    H = V.copy()
    H[np.diag_indices(len(G))] += 0.5 * np.sum(k * k, axis=1)
    return H


@dataclass(frozen=True)
class BandPoint:
    eps0: float
    psi0: float
    eigvals: np.ndarray
    const_weights: np.ndarray   # |c_0^nu|^2 for every branch
    residual: float


def solve_band_full(U_coeffs: Mapping[Index, complex], p, cutoff: int = 2,
                    check_degenerate: bool = True) -> BandPoint:
    if cutoff < 2:
        raise ValueError("cutoff must be >= 2")
    _check_potential(U_coeffs)
    H = hamiltonian(U_coeffs, p, cutoff)
    vals, vecs = linalg.eigh(H)
    resid = float(np.max(np.abs(H @ vecs - vecs * vals)))
    i0 = len(_basis(cutoff)) // 2       # the (0, 0, 0) plane wave sits in the middle
    w = np.abs(vecs[i0, :]) ** 2
    order = np.argsort(w)[::-1]
    best, second = order[0], order[1]
    if check_degenerate and w[best] - w[second] < DEGENERACY_TOL * w[best]:
        raise DegenerateBranchError(
            f"solve_band: branches {best} and {second} carry constant weights "
            f"{w[best]:.6g} and {w[second]:.6g} at p = {tuple(float(x) for x in np.ravel(p))}")
    return BandPoint(float(vals[best]), float(math.sqrt(w[best])), vals, w, resid)


def solve_band(U_coeffs: Mapping[Index, complex], p, cutoff: int = 2) -> tuple[float, float]:
    """(eps0(p), psi0(p)) for the branch with the largest constant component."""
    bp = solve_band_full(U_coeffs, p, cutoff)
    return bp.eps0, bp.psi0


@dataclass(frozen=True)
class BandFunction:
    U_coeffs: Mapping[Index, complex]
    cutoff: int = 2
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def point(self, p) -> BandPoint:
        key = tuple(float(x) for x in np.ravel(p))
        if key not in self._cache:
            self._cache[key] = solve_band_full(self.U_coeffs, key, self.cutoff)
        return self._cache[key]

    def eps0(self, p) -> float:
        return self.point(p).eps0

    def psi0(self, p) -> float:
        return self.point(p).psi0

    def weight(self, p, tau: float, branches: str = "all") -> float:
        """Unnormalized phi(p): sum_nu |c_0^nu|^2 exp(-eps_nu / tau) or the selected term only."""
        if branches == "selected":
            bp = self.point(p)
            return bp.psi0**2 * math.exp(-bp.eps0 / tau)
        if branches != "all":
            raise ValueError("branches must be 'all' or 'selected'")
        bp = solve_band_full(self.U_coeffs, p, self.cutoff, check_degenerate=False)
        return float(np.sum(bp.const_weights * np.exp(-bp.eigvals / tau)))


def _gauss_hermite(n: int, tau: float):
    x, w = np.polynomial.hermite.hermgauss(n)
    return math.sqrt(2.0 * tau) * x, w


def _moments_3d(band: BandFunction, tau: float, branches: str, n_quad: int) -> tuple[float, float]:
    """(int w dp, int (p^2/2) w dp) for the unnormalized weight w by tensor Gauss-Hermite."""
    p1, w1 = _gauss_hermite(n_quad, tau)
    z = m2 = 0.0
    for (i, a), (j, b), (k, c) in itertools.product(enumerate(p1), repeat=3):
        e = 0.5 * (a * a + b * b + c * c)
        g = w1[i] * w1[j] * w1[k] * band.weight((a, b, c), tau, branches) * math.exp(e / tau)
        z += g
        m2 += g * e
    scale = (2.0 * tau) ** 1.5
    return z * scale, m2 * scale


def phi_of_p(band: BandFunction, tp: ThermoPoint, branches: str = "all", n_quad: int = 12):
    """phi(p) normalized to int phi dp = rho0 by a tensor Gauss-Hermite rule.

    The Gaussian factor exp(-p^2 / 2 tau) is split off before quadrature, so
    n_quad points per axis suffice when the remaining factor is smooth on the
    thermal momentum scale.
    """
    norm, _ = _moments_3d(band, tp.tau, branches, n_quad)

    def phi(p):
        return tp.rho0 * band.weight(p, tp.tau, branches) / norm

    return phi


def kinetic_moment(band: BandFunction, tp: ThermoPoint, branches: str = "all", n_quad: int = 12) -> float:
    """int (p^2/2) phi(p) dp with phi normalized to rho0."""
    z, m2 = _moments_3d(band, tp.tau, branches, n_quad)
    return tp.rho0 * m2 / z


# --- separable 1D path ------------------------------------------------------------

def _weight_1d(U1: Mapping[int, complex], p: float, tau: float, n_modes: int) -> float:
    """<p| exp(-(h - p^2/2)/tau) |p> for h = (p + A)^2/2 + U(x) on a 1D plane-wave basis."""
    G = np.arange(-n_modes, n_modes + 1, dtype=float)
    n = G.size
    H = np.diag(0.5 * (p + G) ** 2 - 0.5 * p * p).astype(complex)
    for m, val in U1.items():
        if m == 0:
            H[np.diag_indices(n)] += val
        elif abs(m) < n:
            H += val * np.eye(n, k=-m)
    vals, vecs = linalg.eigh(H)
    w = np.abs(vecs[n_modes, :]) ** 2
    return float(np.sum(w * np.exp(-vals / tau)))


def separable_kinetic(U1: Mapping[int, complex], tau: float, rho0: float,
                      n_modes: int = 16, n_quad: int = 96) -> float:
    """Kinetic energy density for U(r) = sum_i U1(x_i): rho0 * 3 <p_x^2 / 2>_1D."""
    for m, val in U1.items():
        if abs(U1.get(-m, 0.0) - np.conj(val)) > 1e-12 * max(1.0, abs(val)):
            raise ValueError(f"U1 not conjugate-symmetric at {m}")
    p, w = _gauss_hermite(n_quad, tau)
    g = np.array([_weight_1d(U1, pi, tau, n_modes) for pi in p])
    Z = np.sum(w * g)
    M2 = np.sum(w * g * 0.5 * p * p)
    return 3.0 * rho0 * float(M2 / Z)


def first_shell_potential_1d(rho0_sigma0: float, alpha: float, sigma_a: float) -> dict[int, float]:
    """One axis of rho0 sigma0 + 2 alpha sigma_a (cos x + cos y + cos z)."""
    return {0: rho0_sigma0 / 3.0, 1: alpha * sigma_a, -1: alpha * sigma_a}


def first_shell_potential_3d(rho0_sigma0: float, alpha: float, sigma_a: float) -> dict[Index, float]:
    from .kernels import FIRST_SHELL
    U = {(0, 0, 0): rho0_sigma0}
    U.update({idx: alpha * sigma_a for idx in FIRST_SHELL})
    return U
