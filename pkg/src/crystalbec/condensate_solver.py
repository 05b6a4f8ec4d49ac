"""Condensate crystal: condensate/normal split, xi-coupled solve, thermodynamics, free energy.

Units hbar = m = a = 1.  The condensate orbital factorises as
u(r) = f(x) f(y) f(z) with f(x) = sqrt(2) ce0(x / 2, 4q) and
q = 2 sigma_a (alpha1_c + alpha1_n).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy import integrate, optimize

from . import bifurcation_ordinary as bif
from .errors import ConvergenceError, NonUnimodalError, RegimeError
from .kernels import FIRST_SHELL, Index, InteractionKernels, LatticeSpec, ThermoPoint
from .specfun import mathieu_ce0

SMALL_Q_MAX = 0.1


# --- condensate orbital ----------------------------------------------------------

def condensate_density_smallq(q: float) -> float:
    """First-shell modulation of rho_c |u|^2 / rho_c: -(4q - 14 q^3)."""
    if abs(q) > SMALL_Q_MAX:
        raise RegimeError(f"|q| = {abs(q):.4g} exceeds the small-q radius {SMALL_Q_MAX}")
    return -(4.0 * q - 14.0 * q**3)


def orbital_coeffs_1d(q: float, truncation: int = 64) -> np.ndarray:
    """c_k for k = 0..n-1 of f(x) = sqrt(2) ce0(x/2, 4q) = sum_k c_|k| exp(i k x)."""
    A = mathieu_ce0(4.0 * q, truncation).fourier_coeffs
    c = math.sqrt(2.0) * A / 2.0
    c[0] = math.sqrt(2.0) * A[0]
    return c


def _autocorr(c: np.ndarray, m: int) -> float:
    """d_m = sum_k c_k c_(k-m) over the symmetric extension of c."""
    full = np.concatenate([c[:0:-1], c])
    if m >= full.size:
        return 0.0
    return float(full[m:] @ full[:full.size - m])


def condensate_density_oracle(q: float, truncation: int = 64) -> float:
    """Same modulation as condensate_density_smallq, from the Mathieu eigenvector: 2 d_1."""
    return 2.0 * _autocorr(orbital_coeffs_1d(q, truncation), 1)


def condensate_density(q: float) -> float:
    """Small-q series inside its radius, Mathieu projection outside."""
    if abs(q) <= SMALL_Q_MAX:
        return condensate_density_smallq(q)
    return condensate_density_oracle(q)


def coefficients_3d(c1: np.ndarray, kmax: int) -> dict[Index, float]:
    """c_lmn = c_l c_m c_n on |l|, |m|, |n| <= kmax."""
    rng = range(-kmax, kmax + 1)
    return {(l, m, n): float(c1[abs(l)] * c1[abs(m)] * c1[abs(n)])
            for l, m, n in itertools.product(rng, rng, rng)}


def condensate_amplitudes(rho_c: float, c: Mapping[Index, complex], indices) -> dict[Index, complex]:
    """a^(c)_lmn = rho_c sum_l' c*_l' c_(l'-l) by direct convolution of the truncated set."""
    out = {}
    for idx in indices:
        acc = 0.0
        for j, cj in c.items():
            k = (j[0] - idx[0], j[1] - idx[1], j[2] - idx[2])
            ck = c.get(k)
            if ck is not None:
                acc += np.conj(cj) * ck
        out[idx] = rho_c * acc
    return out


def kinetic_sum(c1: np.ndarray) -> float:
    """S = sum_lmn A^2 |c_lmn|^2 = 3 sum_k k^2 |c_k|^2 for a normalised separable orbital."""
    k = np.arange(c1.size)
    return 3.0 * 2.0 * float(np.sum(k[1:] ** 2 * c1[1:] ** 2))


# --- alpha1^(c) from the small-q condensate equation ---------------------------

@dataclass(frozen=True)
class Alpha1C:
    """Series and fixed-point solutions of 2 alpha_c = rho_c * modulation(q)."""

    series: float
    fixed_point: float
    zeta: tuple[float, float, float]
    xi_first_shell: float

    @property
    def disagreement(self) -> float:
        return abs(self.series - self.fixed_point)


def zeta_coefficients(alpha1_n: float, s: float) -> tuple[float, float, float]:
    """zeta0..zeta2 of alpha_c = rho_c (zeta0 + zeta1 rho_c + zeta2 rho_c^2)."""
    a2 = alpha1_n * alpha1_n
    z0 = -4.0 * s * alpha1_n * (1.0 - 14.0 * s * s * a2)
    z1 = -4.0 * s * z0 * (1.0 - 42.0 * s * s * a2)
    z2 = -4.0 * s * z1 + 168.0 * s**3 * a2 * z1 + 168.0 * s**3 * alpha1_n * z0 * z0
    return z0, z1, z2


def _rhs_smallq(X: float, s: float) -> float:
    # -(1/2) modulation(q) with q = 2 s X, kept as the two-term polynomial
    return -(4.0 * s * X - 56.0 * s**3 * X**3)


def solve_alpha1_c(rho_c: float, alpha1_n: float, sigma_a: float, method: str = "series",
                   tol: float = 1e-15, max_iter: int = 500) -> Alpha1C:
    """alpha1^(c) from the two-term small-q condensate equation.

    Returns both the zeta-series value and the fixed point of
    alpha_c = -rho_c [4 s X - 56 s^3 X^3], X = alpha_c + alpha1_n.  With
    ``method="oracle"`` the fixed point uses the full Mathieu modulation
    instead of the two-term polynomial.
    """
    s = sigma_a
    z = zeta_coefficients(alpha1_n, s)
    series = rho_c * (z[0] + z[1] * rho_c + z[2] * rho_c**2)
    if method == "oracle":
        def g(ac):
            return 0.5 * rho_c * condensate_density(2.0 * s * (ac + alpha1_n))
    elif method == "series":
        def g(ac):
            return rho_c * _rhs_smallq(ac + alpha1_n, s)
    else:
        raise ValueError(f"unknown method {method!r}")
    q = 2.0 * s * (series + alpha1_n)
    if method == "series" and abs(q) > SMALL_Q_MAX:
        raise RegimeError(f"implied |q| = {abs(q):.4g} is outside the small-q radius {SMALL_Q_MAX}")
    ac = series
    for _ in range(max_iter):
        new = g(ac)
        if abs(new - ac) <= tol * max(abs(new), 1e-300):
            ac = new
            break
        ac = new
    else:
        raise ConvergenceError("solve_alpha1_c: fixed-point iteration did not converge")
    xi = ac / alpha1_n if alpha1_n != 0.0 else 0.0
    return Alpha1C(series=series, fixed_point=ac, zeta=z, xi_first_shell=xi)


# --- xi-coupled bifurcation solve ------------------------------------------------

def coupled_normal_solve(tp: ThermoPoint, kern: InteractionKernels, xi: Mapping[Index, float] | float,
                         source: str = "closed") -> bif.CrystalSolution:
    """Ordinary-crystal solution for the normal fraction.

    rho0 becomes rho_n, sigma(a) gains the factor (1 + xi_100) and rho0 sigma0
    keeps its full-density value.
    """
    x = xi if isinstance(xi, (int, float)) else float(xi.get((1, 0, 0), 0.0))
    tp_n = ThermoPoint(theta=tp.theta, rho0=tp.rho_n, tau=tp.tau)
    return bif.second_order(tp_n, kern, source=source, sigma_a=(1.0 + x) * kern.sigma_a(1.0),
                            rho0_sigma0=tp.rho0 * kern.sigma0)


@dataclass(frozen=True)
class CondensateSplit:
    """Condensate / normal decomposition of the first-shell amplitudes."""

    rho_c: float
    alpha1_c: float
    alpha1_n: float
    xi: Mapping[Index, float]
    c_coeffs: Mapping[Index, float] = field(repr=False)
    c_1d: np.ndarray = field(repr=False)
    q_param: float
    eps1: float
    zeta: tuple[float, float, float]

    @property
    def kinetic_sum(self) -> float:
        return kinetic_sum(self.c_1d)


@dataclass(frozen=True)
class CondensateState:
    split: CondensateSplit
    normal: bif.CrystalSolution
    iterations: int
    residual: float

    def coefficients(self, kmax: int = 2) -> dict[Index, complex]:
        """Total amplitudes a = a^(c) + a^(n) on |l|,|m|,|n| <= kmax."""
        rng = range(-kmax, kmax + 1)
        idx = list(itertools.product(rng, rng, rng))
        ac = condensate_amplitudes(self.split.rho_c, self.split.c_coeffs, idx)
        an = self.normal.coefficients()
        out = {}
        for i in idx:
            if i in FIRST_SHELL:
                out[i] = self.split.alpha1_c + self.split.alpha1_n
            elif i == (0, 0, 0):
                out[i] = self.split.rho_c + self.normal.rho0
            else:
                out[i] = an.get(i, 0.0) + ac[i]
        return out


def solve_condensate(tp: ThermoPoint, kern: InteractionKernels, method: str = "auto",
                     tol: float = 1e-12, max_iter: int = 200, kmax: int = 6,
                     truncation: int = 64) -> CondensateState:
    """Alternate the normal-fraction solve and the condensate equation until xi is stationary.

    ``method="auto"`` uses the zeta series while the implied |q| stays inside
    the small-q radius and the Mathieu projection otherwise.
    """
    s = kern.sigma_a(1.0)
    use = method
    xi = 0.0
    res = math.inf
    for it in range(1, max_iter + 1):
        normal = coupled_normal_solve(tp, kern, xi)
        if not normal.physical:
            raise RegimeError(f"normal fraction has alpha^2 = {normal.alpha_sq:.3e} < 0 at tau = {tp.tau:.6g}")
        an = normal.alpha
        if method == "auto":
            use = "series" if abs(2.0 * s * an) * (1.0 + abs(xi)) <= SMALL_Q_MAX else "oracle"
        try:
            sol_c = solve_alpha1_c(tp.rho_c, an, s, method=use)
        except RegimeError:
            if method != "auto":
                raise
            use = "oracle"
            sol_c = solve_alpha1_c(tp.rho_c, an, s, method=use)
        ac = sol_c.fixed_point if use == "oracle" else sol_c.series
        new_xi = ac / an
        res = abs(new_xi - xi)
        xi = new_xi
        if res < tol:
            break
    else:
        raise ConvergenceError(f"condensate loop: xi residual {res:.3e} after {max_iter} iterations")
    q = 2.0 * s * (ac + an)
    c1 = orbital_coeffs_1d(q, truncation)
    a0 = mathieu_ce0(4.0 * q, truncation).char_value
    split = CondensateSplit(
        rho_c=tp.rho_c, alpha1_c=ac, alpha1_n=an,
        xi={v: xi for v in FIRST_SHELL},
        c_coeffs=coefficients_3d(c1, kmax), c_1d=c1, q_param=q,
        eps1=tp.rho0 * kern.sigma0 + 3.0 * a0 / 8.0, zeta=sol_c.zeta)
    return CondensateState(split=split, normal=normal, iterations=it, residual=res)


# --- thermodynamics ---------------------------------------------------------------

@dataclass(frozen=True)
class ThermoReport:
    energy_density: float
    pressure: float
    Q_value: float
    free_energy_density: float | None = None
    entropy_check: float | None = None


def thermo_from_parts(rho_c: float, S: float, kinetic: float, coeffs_sq: Mapping[Index, float],
                      kern: InteractionKernels, lattice: LatticeSpec | None = None):
    """(E/V, p, Q) from the condensate kinetic sum S, the normal kinetic density and |a|^2."""
    se, sp, q = bif.interaction_sums(coeffs_sq, kern, lattice)
    return 0.5 * rho_c * S + kinetic + 0.5 * se, rho_c * S / 3.0 + 2.0 / 3.0 * kinetic + 0.5 * sp, q


def thermo_report(tp: ThermoPoint, state: CondensateState, kern: InteractionKernels,
                  free_energy_density: float | None = None, kmax: int = 2) -> ThermoReport:
    coeffs = state.coefficients(kmax)
    kin = state.normal.kinetic_energy_density
    e, p, q = thermo_from_parts(tp.rho_c, state.split.kinetic_sum, kin,
                                {k: float(abs(v)) ** 2 for k, v in coeffs.items()}, kern)
    ent = None
    if free_energy_density is not None and tp.theta > 0:
        ent = (e - free_energy_density) / tp.theta
    return ThermoReport(energy_density=e, pressure=p, Q_value=q,
                        free_energy_density=free_energy_density, entropy_check=ent)


def first_shell_Q(alpha1_c: float, alpha1_n: float, kern: InteractionKernels, a: float = 1.0) -> float:
    """6 (alpha_c + alpha_n)^2 [sigma_e(a) - 3 sigma(a)/2 - (a/2) sigma'(a)]."""
    X = alpha1_c + alpha1_n
    return 6.0 * X * X * (kern.sigma_e_at(a) - 1.5 * kern.sigma_at(a) - 0.5 * a * kern.dsigma_dk_at(a))


# --- free energy and the condensate fraction ---------------------------------------

QFn = Callable[[float, float, float], float]


def scaling_integral(theta: float, rho0: float, rho_c: float, Q_fn: QFn, theta0: float,
                     epsrel: float = 1e-11) -> float:
    """int_1^sqrt(theta0/theta) xi^-6 Q(theta xi^2, rho0 xi^3, rho_c) d xi."""
    if not 0 < theta <= theta0:
        raise ValueError("need 0 < theta <= theta0")
    upper = math.sqrt(theta0 / theta)
    val, err = integrate.quad(lambda x: Q_fn(theta * x * x, rho0 * x**3, rho_c) / x**6, 1.0, upper,
                              epsabs=1e-14, epsrel=epsrel, limit=200)
    if err > max(1e3 * epsrel * abs(val), 1e-12):
        raise ConvergenceError(f"free-energy quadrature error {err:.3e} for value {val:.6e}")
    return val


def free_energy(theta: float, rho0: float, rho_c: float, Q_fn: QFn, theta0: float,
                F_at_theta0: Callable[[float], float]) -> float:
    """Free energy per volume f = F / V.

    f = int_1^L xi^-6 Q dxi + (theta/theta0)^(5/2) f0(rho0 (theta0/theta)^(3/2)), L = sqrt(theta0/theta),
    which solves 2 theta f_theta + 3 rho0 f_rho0 - 5 f = -Q; ``F_at_theta0(rho)``
    is the free energy per volume on the isotherm theta0.
    """
    ratio = theta / theta0
    return (scaling_integral(theta, rho0, rho_c, Q_fn, theta0)
            + ratio**2.5 * F_at_theta0(rho0 * ratio**-1.5))


@dataclass(frozen=True)
class RhoCMinimum:
    """Equilibrium condensate density.

    ``slope_at_zero`` is d/d rho_c of the scaling integral at 0+; it is
    negative on the condensed side, positive on the normal side and vanishes
    on the BEC line.  ``degenerate`` marks an objective that does not depend on
    rho_c at all.
    """

    rho_c: float
    objective: float
    slope_at_zero: float
    bec_line_flag: bool
    degenerate: bool


def _local_minima(x: np.ndarray, y: np.ndarray, rtol: float):
    scale = max(np.max(np.abs(y)), 1e-300)
    out = []
    n = y.size
    for i in range(n):
        left = y[i - 1] if i > 0 else np.inf
        right = y[i + 1] if i < n - 1 else np.inf
        if y[i] < left - rtol * scale and y[i] <= right or y[i] <= left and y[i] < right - rtol * scale:
            out.append(i)
    return out


def minimize_rho_c(theta: float, rho0: float, Q_fn: QFn, theta0: float, n_scan: int = 201,
                   slope_tol: float = 1e-9) -> RhoCMinimum:
    """Minimise the scaling integral over rho_c in [0, rho0].

    A uniform scan brackets the minimum and a bounded Brent search refines
    it.  Several separated local minima raise NonUnimodalError carrying all
    of them.
    """
    def J(rc):
        return scaling_integral(theta, rho0, rc, Q_fn, theta0)

    xs = np.linspace(0.0, rho0, n_scan)
    ys = np.array([J(x) for x in xs])
    spread = float(np.max(ys) - np.min(ys))
    scale = max(float(np.max(np.abs(ys))), 1e-300)
    h = 1e-6 * rho0
    slope0 = (-3.0 * ys[0] + 4.0 * J(h) - J(2.0 * h)) / (2.0 * h)
    if spread <= 1e-13 * scale:
        return RhoCMinimum(0.0, float(ys[0]), slope0, bec_line_flag=True, degenerate=True)
    mins = _local_minima(xs, ys, 1e-13)
    if len(mins) > 1:
        refined = []
        for i in mins:
            r = _refine(J, xs, i)
            refined.append(r)
        raise NonUnimodalError(f"objective has {len(refined)} local minima on [0, rho0]", refined)
    x, y = _refine(J, xs, mins[0])
    slope_scale = max(spread / rho0, 1e-300)
    return RhoCMinimum(x, y, slope0, bec_line_flag=abs(slope0) <= slope_tol * slope_scale,
                       degenerate=False)


def _refine(J, xs, i):
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, xs.size - 1)]
    res = optimize.minimize_scalar(J, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12 * max(xs[-1], 1e-300)})
    cands = [(float(res.x), float(res.fun)), (float(xs[i]), float(J(xs[i])))]
    return min(cands, key=lambda t: t[1])


def bec_slope(theta: float, rho0: float, Q_fn: QFn, theta0: float, h_rel: float = 1e-6) -> float:
    """d/d rho_c of the scaling integral at rho_c = 0+, one-sided second-order difference."""
    h = h_rel * rho0

    def J(rc):
        return scaling_integral(theta, rho0, rc, Q_fn, theta0)
    return (-3.0 * J(0.0) + 4.0 * J(h) - J(2.0 * h)) / (2.0 * h)


def bec_line(rho0: float, Q_fn: QFn, theta0: float, theta_lo: float, theta_hi: float) -> float:
    """Temperature on the isochore rho0 where the slope at rho_c = 0+ changes sign."""
    f = lambda th: bec_slope(th, rho0, Q_fn, theta0)  # noqa: E731
    return float(optimize.brentq(f, theta_lo, theta_hi, rtol=1e-12))


# --- compatibility condition with a condensate ------------------------------------

@dataclass(frozen=True)
class RhoCModel:
    """Partial derivatives of rho_c(theta, rho0) for the compatibility residual."""

    drhoc_dtheta: float = 0.0
    drhoc_drho0: float = 0.0


def _condensed_state(tp, kern, tau_model, rc_model, dth, dr, method):
    tau = tp.tau + tau_model.dtau_dtheta * dth + tau_model.dtau_drho0 * dr
    rho_c = tp.rho_c + rc_model.drhoc_dtheta * dth + rc_model.drhoc_drho0 * dr
    p = ThermoPoint(theta=tp.theta + dth, rho0=tp.rho0 + dr, tau=tau, rho_c=max(rho_c, 0.0))
    k = bif.perturbed_kernels(kern, dth, dr)
    if p.rho_c == 0.0:
        sol = bif.second_order(p, k)
        return sol.kinetic_energy_density, sol.coefficients_sq(), 0.0
    st = solve_condensate(p, k, method=method)
    sq = {i: float(abs(v)) ** 2 for i, v in st.coefficients().items()}
    return st.normal.kinetic_energy_density, sq, st.split.kinetic_sum


def compatibility_terms_condensate(tp: ThermoPoint, kern: InteractionKernels, tau_model: bif.TauModel,
                                   rc_model: RhoCModel = RhoCModel(), method: str = "auto",
                                   rel_step: float = 1e-5):
    """(normal terms, condensate block) of the compatibility condition with a condensate.

    With rho_c = 0 and a zero rho_c model the normal terms coincide with
    ``bifurcation.compatibility_terms`` and the condensate block is zero.
    """
    h_t = rel_step * max(tp.theta, tp.tau)
    h_r = rel_step * tp.rho0
    st = {}
    for key, (dt, dr) in {"0": (0, 0), "t+": (h_t, 0), "t-": (-h_t, 0),
                          "r+": (0, h_r), "r-": (0, -h_r)}.items():
        st[key] = _condensed_state(tp, kern, tau_model, rc_model, dt, dr, method)
    K0, sq0, S0 = st["0"]
    dK_dt = (st["t+"][0] - st["t-"][0]) / (2.0 * h_t)
    dK_dr = (st["r+"][0] - st["r-"][0]) / (2.0 * h_r)
    kin = 2.0 * tp.theta / 3.0 * dK_dt + tp.rho0 * dK_dr - 5.0 / 3.0 * K0
    keys = set(sq0) | set(st["t+"][1]) | set(st["r+"][1])

    def d(a, b, h):
        return {i: (a.get(i, 0.0) - b.get(i, 0.0)) / (2.0 * h) for i in keys}
    sq_full = {i: sq0.get(i, 0.0) for i in keys}
    normal = bif.CompatibilityTerms(
        kinetic=kin,
        sigma_block=bif.sigma_block(tp, sq_full, kern),
        coeff_block=bif.coeff_block(tp, d(st["r+"][1], st["r-"][1], h_r), d(st["t+"][1], st["t-"][1], h_t), kern))
    dS_dt = (st["t+"][2] - st["t-"][2]) / (2.0 * h_t)
    dS_dr = (st["r+"][2] - st["r-"][2]) / (2.0 * h_r)
    cond = ((3.0 * tp.rho0 * rc_model.drhoc_drho0 + 2.0 * tp.theta * rc_model.drhoc_dtheta - tp.rho_c) * S0 / 6.0
            + 0.5 * tp.rho_c * tp.rho0 * dS_dr + tp.rho_c * tp.theta / 3.0 * dS_dt)
    return normal, cond


def compatibility_residual_condensate(tp: ThermoPoint, kern: InteractionKernels, tau_model: bif.TauModel,
                                      rc_model: RhoCModel = RhoCModel(), **kw) -> float:
    normal, cond = compatibility_terms_condensate(tp, kern, tau_model, rc_model, **kw)
    return normal.total + cond
