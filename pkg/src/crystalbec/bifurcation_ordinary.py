"""Bifurcation-method solver for the ordinary simple-cubic quantum crystal.

Works in units hbar = m = 1 with the first reciprocal-lattice shell at a = 1,
so beta = 1 / sqrt(2 tau).  The kernel must be negative on that shell.

Products such as B0 * I_n never need the factor exp(rho0 sigma0 / tau): it
cancels between B0 and I_n.  Internally B0 is therefore carried in reduced
form ``rho0 (2 pi / tau)^(3/2)`` next to reduced integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Mapping

import numpy as np
from scipy import optimize

from . import residue_integrals as ri
from .errors import NoBifurcationError
from .kernels import FIRST_SHELL, Index, InteractionKernels, LatticeSpec, ThermoPoint
from .specfun import erf_i_combo

TAU_MIN_SEED = 0.05541
THRESHOLD = 0.1946

SECOND_SHELL_110: tuple[Index, ...] = tuple(
    v for v in ((1, 1, 0), (1, -1, 0), (-1, 1, 0), (-1, -1, 0),
                (1, 0, 1), (1, 0, -1), (-1, 0, 1), (-1, 0, -1),
                (0, 1, 1), (0, 1, -1), (0, -1, 1), (0, -1, -1)))
SHELL_200: tuple[Index, ...] = ((2, 0, 0), (-2, 0, 0), (0, 2, 0), (0, -2, 0), (0, 0, 2), (0, 0, -2))


@dataclass(frozen=True)
class Normalization:
    """Positive constant stored as its logarithm, so huge values never overflow."""

    log: float

    @property
    def value(self) -> float:
        return math.exp(self.log) if self.log < 709.0 else math.inf


def _b0_reduced(rho0: float, tau: float) -> float:
    return rho0 * (2.0 * math.pi / tau) ** 1.5


def compute_B0(tp: ThermoPoint, kern: InteractionKernels) -> Normalization:
    """B0 = rho0 (2 pi / tau)^(3/2) exp(rho0 sigma0 / tau); B1 vanishes."""
    return Normalization(math.log(tp.rho0) + 1.5 * math.log(2.0 * math.pi / tp.tau)
                         + tp.rho0 * kern.sigma0 / tp.tau)


def B0I1(tau: float, rho0: float = 1.0) -> float:
    """B0 I1(a) = -8 rho0 x F(x) with x = beta / 2; independent of sigma0."""
    ctx = ri.IntegralContext(tau)
    return _b0_reduced(rho0, tau) * ri.I1(ctx, reduced=True)


def minimize_B0I1(rho0: float = 1.0, method: str = "golden", n_grid: int = 200001):
    """Location and value of the minimum of B0 I1 over tau.

    ``golden`` runs a golden-section search; ``grid`` scans log-spaced tau
    and refines with a parabola through the best three points.  The two are
    independent routes to the same number.
    """
    if method == "golden":
        res = optimize.minimize_scalar(lambda t: B0I1(t, rho0), bracket=(0.01, 0.05, 0.5),
                                       method="golden", tol=1e-12)
        return float(res.x), float(res.fun)
    if method == "grid":
        taus = np.geomspace(1e-3, 10.0, n_grid)
        vals = np.array([B0I1(t, rho0) for t in taus])
        i = int(np.argmin(vals))
        x = np.log(taus[i - 1:i + 2])
        y = vals[i - 1:i + 2]
        c = np.polyfit(x, y, 2)
        xv = -c[1] / (2.0 * c[0])
        return float(math.exp(xv)), float(np.polyval(c, xv))
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class BifurcationResult:
    tau_star: float
    residual: float
    sigma_a: float


def bifurcation_point(kern: InteractionKernels, rho0: float, a: float = 1.0) -> BifurcationResult:
    """Root tau* of 1 - B0 sigma_a I1(a) = 0 on the branch tau > tau_min.

    Below tau_min ~ 0.05541 no crystallisation root is accepted.  Raises
    NoBifurcationError when sigma_a >= 0 or when |sigma_a| is below the
    threshold 1 / (rho0 * 5.139).
    """
    if a != 1.0:
        raise ValueError("internal units put the first shell at a = 1")
    return bifurcation_tau(kern.sigma_a(a), rho0)


def bifurcation_tau(s: float, rho0: float) -> BifurcationResult:
    """bifurcation_point for a given first-shell value sigma_a = s."""
    if not rho0 > 0:
        raise ValueError("rho0 must be positive")
    if s >= 0.0:
        raise NoBifurcationError(f"sigma(a) = {s:.6g} >= 0: the kernel has no negative first-shell value")
    tau_min, gmin = _minimum_unit()

    def f(t):
        return 1.0 - s * rho0 * B0I1(t)

    if f(tau_min) > 0.0:
        raise NoBifurcationError(
            f"no bifurcation: |sigma_a| = {abs(s):.6g} < {-1.0 / gmin:.6g} / rho0 "
            f"(minimum of B0 I1 is {gmin:.6g} rho0 at tau = {tau_min:.6g})")
    hi = max(2.0 * tau_min, 2.0 * abs(s) * rho0)
    while f(hi) <= 0.0:
        hi *= 2.0
    tau = optimize.brentq(f, tau_min, hi, xtol=1e-300, rtol=1e-12, maxiter=500)
    return BifurcationResult(tau_star=float(tau), residual=float(f(tau)), sigma_a=s)


@lru_cache(maxsize=1)
def _minimum_unit():
    return minimize_B0I1(1.0)


def integral_values(ctx: ri.IntegralContext, source: str = "closed") -> dict[str, float]:
    """Reduced integrals keyed as in ``residue_integrals.closed_forms``."""
    if source == "closed":
        return ri.closed_forms(ctx, reduced=True)
    if source == "oracle":
        return {k: ri.In_oracle(sh, ctx, reduced=True) for k, sh in ri.SHIFT_SETS.items()}
    raise ValueError(f"unknown integral source {source!r}")


@dataclass(frozen=True)
class CrystalSolution:
    """Second-order bifurcation solution on the first shell.

    ``alpha_sq`` may be negative, meaning no real crystal branch at this tau;
    then ``physical`` is False and ``alpha`` is NaN.  ``alpha2_1`` sits on the
    twelve (1,1,0)-type vectors and ``alpha2_2`` on the six (2,0,0)-type ones.
    """

    alpha_sq: float
    alpha2_1: float
    alpha2_2: float
    B0: Normalization
    B2_over_B0: float
    Y: float
    tau: float
    tau_star: float | None
    rho0: float
    sigma_a: float
    kinetic_energy_density: float
    integrals: Mapping[str, float] = field(repr=False, default_factory=dict)

    @property
    def physical(self) -> bool:
        return self.alpha_sq >= 0.0

    @property
    def alpha(self) -> float:
        return math.sqrt(self.alpha_sq) if self.alpha_sq >= 0.0 else math.nan

    @property
    def B2(self) -> float:
        return self.B2_over_B0 * self.B0.value

    def coefficients(self) -> dict[Index, float]:
        """Density amplitudes a_lmn through second order."""
        out: dict[Index, float] = {(0, 0, 0): self.rho0}
        al = self.alpha if self.physical else 0.0
        out.update({v: al for v in FIRST_SHELL})
        out.update({v: self.alpha2_1 for v in SECOND_SHELL_110})
        out.update({v: self.alpha2_2 for v in SHELL_200})
        return out

    def coefficients_sq(self) -> dict[Index, float]:
        """|a_lmn|^2 built from alpha_sq directly (valid on either side of tau*)."""
        out: dict[Index, float] = {(0, 0, 0): self.rho0**2}
        out.update({v: self.alpha_sq for v in FIRST_SHELL})
        out.update({v: self.alpha2_1**2 for v in SECOND_SHELL_110})
        out.update({v: self.alpha2_2**2 for v in SHELL_200})
        return out


def second_order_terms(rho0: float, tau: float, rho0_sigma0: float, sigma_a: float,
                       source: str = "closed"):
    """(f, Y, b0r, integrals) with f = 1 - B0 sigma_a I1 and Y the cubic aggregate."""
    ctx = ri.IntegralContext(tau, rho0_sigma0)
    iv = integral_values(ctx, source)
    b0r = _b0_reduced(rho0, tau)
    s = sigma_a
    f = 1.0 - b0r * s * iv["I1(a)"]
    Y = -b0r * s**3 * (12.0 / rho0 * tau * b0r * iv["I2(0,a)"] ** 2
                       + iv["I3(0,a,a)"] + 2.0 * iv["I3(0,a,-a)"]
                       + 8.0 * iv["I3(0,a1,a2)"] + 4.0 * iv["I3(a1,a2,a1+a2)"])
    return f, Y, b0r, iv


def second_order(tp: ThermoPoint, kern: InteractionKernels, source: str = "closed",
                 sigma_a: float | None = None, rho0_sigma0: float | None = None) -> CrystalSolution:
    """Second-order solution at the state ``tp``.

    ``sigma_a`` and ``rho0_sigma0`` override the kernel values; the condensate
    solver uses them to pass the dressed first-shell coupling.
    """
    s = kern.sigma_a(1.0) if sigma_a is None else sigma_a
    rs0 = tp.rho0 * kern.sigma0 if rho0_sigma0 is None else rho0_sigma0
    f, Y, b0r, iv = second_order_terms(tp.rho0, tp.tau, rs0, s, source)
    alpha_sq = -f / Y
    b0 = Normalization(math.log(tp.rho0) + 1.5 * math.log(2.0 * math.pi / tp.tau) + rs0 / tp.tau)
    try:
        tau_star = bifurcation_tau(s, tp.rho0).tau_star
    except NoBifurcationError:
        tau_star = None
    sol = CrystalSolution(
        alpha_sq=alpha_sq,
        alpha2_1=2.0 * b0r * s**2 * iv["I2(a1,a2)"] * alpha_sq,
        alpha2_2=b0r * s**2 * iv["I2(a,2a)"] * alpha_sq,
        B0=b0,
        B2_over_B0=-6.0 / tp.rho0 * b0r * alpha_sq * s**2 * iv["I2(0,a)"],
        Y=Y, tau=tp.tau, tau_star=tau_star, rho0=tp.rho0, sigma_a=s,
        kinetic_energy_density=kinetic_from(tp.tau, tp.rho0, s, alpha_sq),
        integrals=iv,
    )
    return sol


def kinetic_bracket(beta: float) -> float:
    """1 + ((8 + beta^2) / 2 beta) i sqrt(pi) exp(-beta^2/4) erf(i beta / 2); tends to -3 as beta -> 0."""
    return 1.0 + (8.0 + beta * beta) / (2.0 * beta) * math.sqrt(math.pi) * float(erf_i_combo(beta / 2.0))


def kinetic_from(tau: float, rho0: float, sigma_a: float, alpha_sq: float) -> float:
    """Kinetic energy density int (p^2/2) phi dp to second order in alpha."""
    beta = 1.0 / math.sqrt(2.0 * tau)
    return (1.5 * tau * rho0 * (1.0 + 3.0 * sigma_a * alpha_sq / (tau * rho0))
            - 1.5 * rho0 * sigma_a**2 * alpha_sq / tau * kinetic_bracket(beta))


def kinetic_energy(tp: ThermoPoint, sol: CrystalSolution | None, kern: InteractionKernels) -> float:
    """Kinetic energy density of the second-order solution (uniform gas if ``sol`` is None)."""
    if sol is None:
        return 1.5 * tp.tau * tp.rho0
    return kinetic_from(tp.tau, tp.rho0, sol.sigma_a, sol.alpha_sq)


# --- thermodynamics --------------------------------------------------------------

def _sq(v) -> float:
    return float(abs(v)) ** 2


def interaction_sums(coeffs_sq: Mapping[Index, float], kern: InteractionKernels,
                     lattice: LatticeSpec | None = None):
    """(sum |a|^2 sigma_e, sum |a|^2 [sigma + A sigma'/3], sum |a|^2 [sigma_e - 3 sigma/2 - A sigma'/2]).

    Takes |a_lmn|^2 so it serves both the ordinary and the condensate crystal.
    """
    lattice = lattice or LatticeSpec()
    se = sp = q = 0.0
    for idx, w in coeffs_sq.items():
        A = lattice.magnitude(idx)
        s, s_e, ds = kern.sigma_at(A), kern.sigma_e_at(A), kern.dsigma_dk_at(A)
        se += w * s_e
        sp += w * (s + A * ds / 3.0)
        q += w * (s_e - 1.5 * s - 0.5 * A * ds)
    return se, sp, q


def energy_and_pressure(tp: ThermoPoint, coeffs: Mapping[Index, complex], kern: InteractionKernels,
                        kinetic: float | None = None, lattice: LatticeSpec | None = None):
    """(E/V, p) for density amplitudes ``coeffs``.

    The kinetic energy density defaults to the second-order expression with
    alpha taken from the (1,0,0) amplitude; the kinetic pressure is 2/3 of it.
    """
    if kinetic is None:
        alpha_sq = _sq(coeffs.get((1, 0, 0), 0.0))
        kinetic = kinetic_from(tp.tau, tp.rho0, kern.sigma_a(1.0), alpha_sq)
    se, sp, _ = interaction_sums({k: _sq(v) for k, v in coeffs.items()}, kern, lattice)
    return kinetic + 0.5 * se, 2.0 / 3.0 * kinetic + 0.5 * sp


def virial_Q(coeffs: Mapping[Index, complex], kern: InteractionKernels,
             lattice: LatticeSpec | None = None) -> float:
    """Q = sum |a|^2 [sigma_e - 3 sigma / 2 - (A / 2) d sigma / dA]; 2E - 3pV = VQ."""
    return interaction_sums({k: _sq(v) for k, v in coeffs.items()}, kern, lattice)[2]


# --- compatibility condition for tau(theta, rho0) --------------------------------

@dataclass(frozen=True)
class TauModel:
    """Candidate tau(theta, rho0) linearised at the state: its two partial derivatives."""

    dtau_dtheta: float
    dtau_drho0: float


def perturbed_kernels(kern: InteractionKernels, dtheta: float, drho0: float) -> InteractionKernels:
    """Kernel at (theta + dtheta, rho0 + drho0) to first order via the derivative callables."""
    if dtheta == 0.0 and drho0 == 0.0:
        return kern
    s, se, ds = kern.sigma, kern.sigma_e, kern.dsigma_dk
    return replace(
        kern,
        sigma=lambda k: s(k) + kern.dsigma_dtheta(k) * dtheta + kern.dsigma_drho0(k) * drho0,
        sigma_e=lambda k: se(k) + kern.dsigma_e_drho0(k) * drho0,
        dsigma_dk=lambda k: ds(k) + kern.d2sigma_dthetadk(k) * dtheta,
    )


@dataclass(frozen=True)
class CompatibilityTerms:
    """Pieces of the compatibility residual; ``total`` is their sum."""

    kinetic: float
    sigma_block: float
    coeff_block: float

    @property
    def total(self) -> float:
        return self.kinetic + self.sigma_block + self.coeff_block


def sigma_block(tp: ThermoPoint, coeffs_sq: Mapping[Index, float], kern: InteractionKernels,
                lattice: LatticeSpec | None = None) -> float:
    """-1/2 sum |a|^2 (sigma_e + sigma - rho0 sigma_e,rho0 + A sigma'/3 - theta sigma_theta - theta A sigma_theta,A / 3)."""
    lattice = lattice or LatticeSpec()
    th, r0 = tp.theta, tp.rho0
    acc = 0.0
    for idx, w in coeffs_sq.items():
        A = lattice.magnitude(idx)
        if kern.cutoff_radius is not None and A > kern.cutoff_radius:
            continue
        acc += w * (kern.sigma_e_at(A) + kern.sigma_at(A) - r0 * kern.dsigma_e_drho0(A)
                    + A * kern.dsigma_dk_at(A) / 3.0 - th * kern.dsigma_dtheta(A)
                    - th * A * kern.d2sigma_dthetadk(A) / 3.0)
    return -0.5 * acc


def coeff_block(tp: ThermoPoint, dsq_drho0: Mapping[Index, float], dsq_dtheta: Mapping[Index, float],
                kern: InteractionKernels, lattice: LatticeSpec | None = None) -> float:
    """rho0/2 sum d|a|^2/drho0 sigma_e + theta/2 sum d|a|^2/dtheta (sigma + A sigma'/3)."""
    lattice = lattice or LatticeSpec()
    acc = 0.0
    for idx in dsq_drho0:
        A = lattice.magnitude(idx)
        acc += 0.5 * tp.rho0 * dsq_drho0[idx] * kern.sigma_e_at(A)
        acc += 0.5 * tp.theta * dsq_dtheta[idx] * (kern.sigma_at(A) + A * kern.dsigma_dk_at(A) / 3.0)
    return acc


def _state_at(tp: ThermoPoint, kern: InteractionKernels, model: TauModel, dtheta: float,
              drho0: float, uniform: bool):
    """(kinetic density, |a|^2 map) re-solved at a shifted state on the tau model."""
    tau = tp.tau + model.dtau_dtheta * dtheta + model.dtau_drho0 * drho0
    p = ThermoPoint(theta=tp.theta + dtheta, rho0=tp.rho0 + drho0, tau=tau)
    k = perturbed_kernels(kern, dtheta, drho0)
    if uniform:
        return 1.5 * tau * p.rho0, {(0, 0, 0): p.rho0**2}
    sol = second_order(p, k)
    return sol.kinetic_energy_density, sol.coefficients_sq()


def compatibility_terms(tp: ThermoPoint, kern: InteractionKernels, model: TauModel,
                        uniform: bool = False, rel_step: float = 1e-5,
                        lattice: LatticeSpec | None = None) -> CompatibilityTerms:
    """Terms of the compatibility condition with theta and rho0 derivatives by central differences.

    Each shifted state is re-solved from scratch on the linearised tau model.
    """
    h_t = rel_step * max(tp.theta, tp.tau)
    h_r = rel_step * tp.rho0
    K0, sq0 = _state_at(tp, kern, model, 0.0, 0.0, uniform)
    Ktp, sqtp = _state_at(tp, kern, model, h_t, 0.0, uniform)
    Ktm, sqtm = _state_at(tp, kern, model, -h_t, 0.0, uniform)
    Krp, sqrp = _state_at(tp, kern, model, 0.0, h_r, uniform)
    Krm, sqrm = _state_at(tp, kern, model, 0.0, -h_r, uniform)
    dK_dt = (Ktp - Ktm) / (2.0 * h_t)
    dK_dr = (Krp - Krm) / (2.0 * h_r)
    # int p^2 phi = 2 K
    kin = 2.0 * tp.theta / 3.0 * dK_dt + tp.rho0 * dK_dr - 5.0 / 3.0 * K0
    dsq_t = {i: (sqtp[i] - sqtm[i]) / (2.0 * h_t) for i in sq0}
    dsq_r = {i: (sqrp[i] - sqrm[i]) / (2.0 * h_r) for i in sq0}
    return CompatibilityTerms(kinetic=kin,
                              sigma_block=sigma_block(tp, sq0, kern, lattice),
                              coeff_block=coeff_block(tp, dsq_r, dsq_t, kern, lattice))


def compatibility_residual(tp: ThermoPoint, sol: CrystalSolution | None, kern: InteractionKernels,
                           model: TauModel, **kw) -> float:
    """Left side of the compatibility condition; zero iff tau(theta, rho0) is thermodynamically consistent.

    ``sol=None`` evaluates the uniform (fluid) branch.
    """
    return compatibility_terms(tp, kern, model, uniform=sol is None, **kw).total
