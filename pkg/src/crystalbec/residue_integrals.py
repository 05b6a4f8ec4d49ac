"""Closed forms of the bifurcation integrals I_n and a quadrature oracle for them.

    I_n(A_1..A_n) = 1 / ((2 pi)^4 i) int dp  oint_C exp(-z/tau) dz / [h0(0) h0(A_1) ... h0(A_n)]

with h0(A) = z - rho0 sigma0 - (p + A)^2 / 2 in units hbar = m = a = 1.  The
contour integral equals 2 pi i times the divided difference of exp(-z/tau) at
the pole positions, so every I_n carries the common factor
exp(-rho0 sigma0 / tau).  All functions here compute the integrals with that
factor stripped and reattach it unless ``reduced=True``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import integrate
from scipy.linalg import expm

from .errors import QuadratureError
from .specfun import dawson, dawson_asymptotic, dawson_taylor

C8 = (2.0 * math.pi) ** 3
PI32 = math.pi**1.5
BETA_SERIES = 0.5
GAUSS_CUTOFF = math.log(1e18)


@dataclass(frozen=True)
class IntegralContext:
    """Parameters shared by all I_n: tau and the uniform potential rho0 sigma0."""

    tau: float
    rho0_sigma0: float = 0.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")

    @classmethod
    def from_beta(cls, beta: float, rho0_sigma0: float = 0.0) -> "IntegralContext":
        return cls(tau=1.0 / (2.0 * beta * beta), rho0_sigma0=rho0_sigma0)

    @property
    def beta(self) -> float:
        return 1.0 / math.sqrt(2.0 * self.tau)

    @property
    def log_prefactor(self) -> float:
        return -self.rho0_sigma0 / self.tau

    @property
    def prefactor(self) -> float:
        return math.exp(self.log_prefactor)

    def attach(self, value: float, reduced: bool) -> float:
        return value if reduced else value * self.prefactor


# --- small-beta series for the brackets that cancel at beta -> 0 ---------------

@lru_cache(maxsize=None)
def _series(name: str, n_terms: int = 30) -> tuple[float, ...]:
    """Float coefficients c_k of a bracket sum_k c_k beta^(2k+1), built exactly."""
    d = dawson_taylor(n_terms + 1)
    out = []
    for k in range(n_terms):
        prev = d[k - 1] if k > 0 else Fraction(0)
        if name == "b6":      # D(b) - 2 D(b/2)
            c = d[k] * (1 - Fraction(1, 4**k))
        elif name == "b7":    # 2 b - 2 (2 + b^2) D(b/2)
            c = -4 * d[k] / 2 ** (2 * k + 1) - 2 * prev / 2 ** (2 * k - 1) if k > 0 else 2 - 4 * d[0] / 2
        elif name == "b8":    # D(b) - (2 - b^2) D(b/2)
            c = d[k] - 2 * d[k] / 2 ** (2 * k + 1) + (prev / 2 ** (2 * k - 1) if k > 0 else 0)
        elif name == "b9":    # D(b/2) - D(b/sqrt2)/sqrt2
            c = d[k] / 2 ** (2 * k + 1) - d[k] / 2 ** (k + 1)
        else:
            raise KeyError(name)
        out.append(float(c))
    return tuple(out)


def _eval_odd_series(coeffs, beta: float) -> float:
    b2 = beta * beta
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * b2 + c
    return acc * beta


def _bracket(name: str, beta: float, D: Callable = dawson) -> float:
    if D is dawson and beta < BETA_SERIES:
        return _eval_odd_series(_series(name), beta)
    if name == "b6":
        return D(beta) - 2.0 * D(beta / 2)
    if name == "b7":
        return 2.0 * beta - 2.0 * (2.0 + beta * beta) * D(beta / 2)
    if name == "b8":
        return D(beta) - (2.0 - beta * beta) * D(beta / 2)
    if name == "b9":
        return D(beta / 2) - D(beta / math.sqrt(2.0)) / math.sqrt(2.0)
    raise KeyError(name)


# --- closed forms --------------------------------------------------------------

def _I1(tau, beta, D=dawson):
    return -8.0 * PI32 * tau * D(beta / 2) / C8


def I1(ctx: IntegralContext, reduced: bool = False) -> float:
    """I_1(a); negative for every tau > 0."""
    return ctx.attach(float(_I1(ctx.tau, ctx.beta)), reduced)


def I2_0a(ctx: IntegralContext, reduced: bool = False) -> float:
    """I_2(0, a) = -I_1(a) / (2 tau)."""
    return -I1(ctx, reduced) / (2.0 * ctx.tau)


def _I2_a1a2(tau, beta, D=dawson):
    return 8.0 * math.pi * math.sqrt(2.0 * math.pi * tau) * D(beta / 2) ** 2 / C8


def I2_a1a2(ctx: IntegralContext, reduced: bool = False) -> float:
    """I_2(a1, a2) for orthogonal first-shell vectors."""
    return ctx.attach(float(_I2_a1a2(ctx.tau, ctx.beta)), reduced)


def _I2_a2a(tau, beta, D=dawson):
    return -8.0 * PI32 * tau * _bracket("b6", beta, D) / C8


def I2_a2a(ctx: IntegralContext, reduced: bool = False) -> float:
    """I_2(a, 2a) = I_2(a, -a)."""
    return ctx.attach(float(_I2_a2a(ctx.tau, ctx.beta)), reduced)


class I3Values(NamedTuple):
    zero_a_a: float
    zero_a_minus_a: float
    zero_a1_a2: float
    a1_a2_sum: float


def _I3(tau, beta, D=dawson) -> I3Values:
    i_0aa = 2.0 * PI32 * _bracket("b7", beta, D) / C8
    i_0ama = -16.0 * PI32 * tau * _bracket("b8", beta, D) / C8
    i_0a1a2 = -16.0 * PI32 * _bracket("b9", beta, D) / C8
    i_sum = -8.0 * math.sqrt(2.0) * PI32 * D(beta / 2) ** 2 / (C8 * math.sqrt(tau)) - 2.0 * i_0a1a2
    return I3Values(float(i_0aa), float(i_0ama), float(i_0a1a2), float(i_sum))


def I3_all(ctx: IntegralContext, reduced: bool = False) -> I3Values:
    """I_3(0,a,a), I_3(0,a,-a), I_3(0,a1,a2) and I_3(a1,a2,a1+a2)."""
    vals = _I3(ctx.tau, ctx.beta)
    return I3Values(*(ctx.attach(v, reduced) for v in vals))


def closed_forms(ctx: IntegralContext, reduced: bool = False) -> dict[str, float]:
    """Every closed form keyed by a short name."""
    i3 = I3_all(ctx, reduced)
    return {
        "I1(a)": I1(ctx, reduced),
        "I2(0,a)": I2_0a(ctx, reduced),
        "I2(a1,a2)": I2_a1a2(ctx, reduced),
        "I2(a,2a)": I2_a2a(ctx, reduced),
        "I3(0,a,a)": i3.zero_a_a,
        "I3(0,a,-a)": i3.zero_a_minus_a,
        "I3(0,a1,a2)": i3.zero_a1_a2,
        "I3(a1,a2,a1+a2)": i3.a1_a2_sum,
    }


def closed_forms_asymptotic(ctx: IntegralContext, terms: int = 3, reduced: bool = False) -> dict[str, float]:
    """The closed forms with the Dawson function replaced by its large-argument series."""
    def D(x):
        return float(dawson_asymptotic(x, terms))

    tau, beta = ctx.tau, ctx.beta
    i3 = _I3(tau, beta, D)
    i1 = _I1(tau, beta, D)
    vals = {
        "I1(a)": i1,
        "I2(0,a)": -i1 / (2.0 * tau),
        "I2(a1,a2)": _I2_a1a2(tau, beta, D),
        "I2(a,2a)": _I2_a2a(tau, beta, D),
        "I3(0,a,a)": i3.zero_a_a,
        "I3(0,a,-a)": i3.zero_a_minus_a,
        "I3(0,a1,a2)": i3.zero_a1_a2,
        "I3(a1,a2,a1+a2)": i3.a1_a2_sum,
    }
    return {k: ctx.attach(v, reduced) for k, v in vals.items()}


def limit_large_tau(n: int, ctx: IntegralContext, reduced: bool = False) -> float:
    """tau -> infinity limit (-1)^n / (n! tau^n) (tau / 2 pi)^(3/2)."""
    val = (-1.0) ** n / (math.factorial(n) * ctx.tau**n) * (ctx.tau / (2.0 * math.pi)) ** 1.5
    return ctx.attach(val, reduced)


# shift sets matching each closed form; x and y are orthogonal first-shell vectors
_X = (1.0, 0.0, 0.0)
_Y = (0.0, 1.0, 0.0)
_O = (0.0, 0.0, 0.0)
SHIFT_SETS: dict[str, list[tuple[float, float, float]]] = {
    "I1(a)": [_X],
    "I2(0,a)": [_O, _X],
    "I2(a1,a2)": [_X, _Y],
    "I2(a,2a)": [_X, (2.0, 0.0, 0.0)],
    "I3(0,a,a)": [_O, _X, _X],
    "I3(0,a,-a)": [_O, _X, (-1.0, 0.0, 0.0)],
    "I3(0,a1,a2)": [_O, _X, _Y],
    "I3(a1,a2,a1+a2)": [_X, _Y, (1.0, 1.0, 0.0)],
}
ORDER = {name: len(s) for name, s in SHIFT_SETS.items()}


# --- oracle: residues in z, quadrature in p ------------------------------------

def _residue_at(z0: float, mult: int, others, tau: float) -> float:
    """Residue of exp(-z/tau) / prod (z - E)^m at a pole z0 of order ``mult``.

    Taylor coefficients of the analytic part around z0 are multiplied as
    truncated series; the coefficient of w^(mult-1) is the residue.
    """
    m = mult
    series = np.array([math.exp(-z0 / tau) * (-1.0 / tau) ** k / math.factorial(k) for k in range(m)])
    for e, mj in others:
        d = z0 - e
        inv = np.array([(-1.0) ** k / d ** (k + 1) for k in range(m)])
        for _ in range(mj):
            series = np.convolve(series, inv)[:m]
    return float(series[m - 1])


def contour_residue_sum(points: Sequence[float], tau: float, min_sep: float = 0.05) -> float:
    """(1 / 2 pi i) oint exp(-z/tau) / prod (z - E_k) dz for real poles E_k.

    Exactly repeated poles use the confluent residue formula.  When two
    distinct poles lie closer than ``min_sep * tau`` the residue sum cancels
    catastrophically, so the same quantity (the divided difference of
    exp(-z/tau)) is taken from the matrix exponential of the bidiagonal
    matrix with the poles on its diagonal.
    """
    pts = np.asarray(points, dtype=float)
    srt = np.sort(pts)
    gaps = np.diff(srt)
    if np.all(gaps >= min_sep * tau):
        # all poles simple and well separated
        total = 0.0
        for j in range(srt.size):
            denom = 1.0
            for k in range(srt.size):
                if k != j:
                    denom *= srt[j] - srt[k]
            total += math.exp(-srt[j] / tau) / denom
        return total
    if np.any((gaps > 0) & (gaps < min_sep * tau)):
        n = srt.size
        shift = srt[0]
        J = np.diag(srt - shift) + np.diag(np.ones(n - 1), 1)
        return float(math.exp(-shift / tau) * expm(-J / tau)[0, n - 1])
    uniq, counts = np.unique(srt, return_counts=True)
    total = 0.0
    for i, (z0, m) in enumerate(zip(uniq, counts)):
        others = [(uniq[j], counts[j]) for j in range(uniq.size) if j != i]
        total += _residue_at(float(z0), int(m), others, tau)
    return total


def In_oracle(shifts, ctx: IntegralContext, epsrel: float = 1e-9, reduced: bool = False) -> float:
    """Direct evaluation of I_n(A_1..A_n) for n = len(shifts) <= 3.

    Momentum components orthogonal to the span of the shifts are integrated
    analytically (Gaussian); the remaining one or two components are
    integrated adaptively over the box outside which every Gaussian weight is
    below 1e-18.  Raises QuadratureError when the error estimate exceeds the
    target.
    """
    if len(shifts) > 3:
        raise ValueError("In_oracle supports at most three shift vectors")
    tau = ctx.tau
    A = np.vstack([np.zeros(3)] + [np.asarray(s, dtype=float).reshape(3) for s in shifts])
    n = len(shifts)
    _, sv, vt = np.linalg.svd(A)
    rank = int(np.sum(sv > 1e-12 * max(1.0, sv.max()))) if n else 0
    basis = vt[:rank]
    coords = A @ basis.T            # (n+1, rank)
    norm = (2.0 * math.pi * tau) ** ((3 - rank) / 2.0) / C8

    def dd(p):
        e = 0.5 * np.sum((p + coords) ** 2, axis=1)
        return contour_residue_sum(e, tau)

    if rank == 0:
        return ctx.attach(norm * dd(np.zeros(0)), reduced)

    half = math.sqrt(2.0 * tau * GAUSS_CUTOFF)
    lo = -coords.max(axis=0) - half
    hi = -coords.min(axis=0) + half

    if rank == 1:
        val, err = integrate.quad(lambda t: dd(np.array([t])), lo[0], hi[0],
                                  epsabs=0.0, epsrel=epsrel, limit=400,
                                  points=sorted(set((-coords[:, 0]).tolist())))
    elif rank == 2:
        # |dd| <= 1 / (n! tau^n) because every pole sits at E >= 0
        floor = 1e-15 * math.sqrt(2.0 * math.pi * tau) / (math.factorial(n) * tau**n)

        def inner(t1):
            # the outer error estimate is the gate; inner roundoff notices are noise
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                return integrate.quad(lambda t2: dd(np.array([t1, t2])), lo[1], hi[1],
                                      epsabs=floor, epsrel=epsrel * 0.1, limit=200)[0]
        val, err = integrate.quad(inner, lo[0], hi[0], epsabs=0.0, epsrel=epsrel, limit=400)
    else:
        raise ValueError("shift vectors spanning three dimensions are not supported")
    if not abs(err) <= max(10.0 * epsrel * abs(val), 1e-300):
        raise QuadratureError(f"In_oracle: error estimate {err:.3e} exceeds target for value {val:.6e}")
    return ctx.attach(norm * val, reduced)


def simplex_oracle(shifts, ctx: IntegralContext, reduced: bool = False) -> float:
    """Second independent route: Feynman-parameter form of I_n.

    After the z contour (Hermite-Genocchi form of the divided difference) the
    p integral is Gaussian, leaving

        (-1/tau)^n (tau/2pi)^(3/2) int_simplex exp(-[sum t_k A_k^2 - |sum t_k A_k|^2] / 2 tau) dt.
    """
    A = [np.zeros(3)] + [np.asarray(s, dtype=float).reshape(3) for s in shifts]
    n = len(shifts)
    pref = (-1.0 / ctx.tau) ** n * (ctx.tau / (2.0 * math.pi)) ** 1.5

    def f(*t):
        w = [1.0 - sum(t)] + list(t)
        mean = sum(wk * Ak for wk, Ak in zip(w, A))
        q = sum(wk * float(Ak @ Ak) for wk, Ak in zip(w, A)) - float(mean @ mean)
        return math.exp(-q / (2.0 * ctx.tau))

    if n == 0:
        v = 1.0
    elif n == 1:
        v = integrate.quad(f, 0, 1, epsabs=0, epsrel=1e-12)[0]
    elif n == 2:
        v = integrate.dblquad(lambda t2, t1: f(t1, t2), 0, 1, 0, lambda t1: 1 - t1,
                              epsabs=0, epsrel=1e-11)[0]
    else:
        v = integrate.tplquad(lambda t3, t2, t1: f(t1, t2, t3), 0, 1, 0, lambda t1: 1 - t1,
                              0, lambda t1, t2: 1 - t1 - t2, epsabs=0, epsrel=1e-10)[0]
    return ctx.attach(pref * v, reduced)
