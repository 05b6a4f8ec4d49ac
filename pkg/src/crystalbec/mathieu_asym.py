"""Large-chi asymptotics of the condensate orbital in a deep simple-cubic lattice.

With s = 2 chi sin(xi/2), chi = (-q)^(1/4) and f = u(s) exp(-s^2/2) the
orbital equation becomes, per power of eps = 1/chi,

    L u_k + 8 P sum_j r_j (u'_{k-1-2j} - s u_{k-1-2j})
          - s^2 u''_{k-2} - (s - 2 s^3) u'_{k-2} + (2 s^2 - s^4) u_{k-2}
          + 4 sum_j mu_j u_{k-2j} = 0,

with L u = 4 u'' - 8 s u', P = i p and r_j the Taylor coefficients of
sqrt(1 - s^2 eps^2 / 4).  Every coefficient is a polynomial in s and P with
rational coefficients, so the whole series is built in exact arithmetic;
p^2 = -P^2 turns even powers of P into real numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np
from scipy import integrate, optimize

from .errors import NoBifurcationError, RegimeError, SeriesError

MAX_ORDER = 8
CHI_MIN = 1.5


class BiPoly:
    """Polynomial in (s, P) with Fraction coefficients, stored as {(i, j): c} for c s^i P^j."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple[int, int], Fraction] | None = None):
        self.terms = {k: Fraction(v) for k, v in (terms or {}).items() if v != 0}

    @classmethod
    def const(cls, c) -> "BiPoly":
        return cls({(0, 0): Fraction(c)})

    @classmethod
    def from_p(cls, terms: Iterable[tuple[int, int, Fraction, bool]]) -> "BiPoly":
        """Build from c s^i p^j terms given as (i, j, c, imaginary); the result must be real in P."""
        out: dict[tuple[int, int], Fraction] = {}
        for i, j, c, imag in terms:
            # i^imag * p^j = i^imag * (-i)^j P^j
            ph = (int(imag) - j) % 4
            if ph % 2:
                raise ValueError("term is not real when written in P = i p")
            sign = 1 if ph == 0 else -1
            out[(i, j)] = out.get((i, j), Fraction(0)) + sign * Fraction(c)
        return cls(out)

    def __add__(self, other: "BiPoly") -> "BiPoly":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, Fraction(0)) + v
        return BiPoly(out)

    def __sub__(self, other: "BiPoly") -> "BiPoly":
        return self + other.scale(-1)

    def __mul__(self, other: "BiPoly") -> "BiPoly":
        out: dict[tuple[int, int], Fraction] = {}
        for (i1, j1), a in self.terms.items():
            for (i2, j2), b in other.terms.items():
                k = (i1 + i2, j1 + j2)
                out[k] = out.get(k, Fraction(0)) + a * b
        return BiPoly(out)

    def __eq__(self, other) -> bool:
        return isinstance(other, BiPoly) and self.terms == other.terms

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = [f"({v})*s^{i}*P^{j}" for (i, j), v in sorted(self.terms.items())]
        return " + ".join(parts)

    def scale(self, c) -> "BiPoly":
        c = Fraction(c)
        return BiPoly({k: v * c for k, v in self.terms.items()})

    def shift_s(self, n: int) -> "BiPoly":
        return BiPoly({(i + n, j): v for (i, j), v in self.terms.items()})

    def shift_P(self, n: int) -> "BiPoly":
        return BiPoly({(i, j + n): v for (i, j), v in self.terms.items()})

    def ds(self) -> "BiPoly":
        return BiPoly({(i - 1, j): v * i for (i, j), v in self.terms.items() if i > 0})

    def conj(self) -> "BiPoly":
        """Complex conjugate for real p: P -> -P."""
        return BiPoly({(i, j): v * (-1) ** j for (i, j), v in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def coeff_s(self, i: int) -> "BiPoly":
        return BiPoly({(0, j): v for (ii, j), v in self.terms.items() if ii == i})

    def degree_s(self) -> int:
        return max((i for i, _ in self.terms), default=-1)

    def even_part_s(self) -> "BiPoly":
        return BiPoly({k: v for k, v in self.terms.items() if k[0] % 2 == 0})

    def odd_part_s(self) -> "BiPoly":
        return BiPoly({k: v for k, v in self.terms.items() if k[0] % 2 == 1})

    def gauss_moment(self) -> "BiPoly":
        """(1/sqrt(pi)) int exp(-s^2) (.) ds, leaving a polynomial in P."""
        out: dict[tuple[int, int], Fraction] = {}
        for (i, j), v in self.terms.items():
            if i % 2:
                continue
            k = (0, j)
            out[k] = out.get(k, Fraction(0)) + v * _gauss(i)
        return BiPoly(out)

    def at_p(self, p) -> "BiPoly":
        """Substitute a real rational p for P = i p; requires only even powers of P."""
        p = Fraction(p)
        out: dict[tuple[int, int], Fraction] = {}
        for (i, j), v in self.terms.items():
            if j % 2:
                raise ValueError("odd power of P has no real value")
            k = (i, 0)
            out[k] = out.get(k, Fraction(0)) + v * (-(p * p)) ** (j // 2)
        return BiPoly(out)

    def value(self, s, p: float = 0.0) -> complex:
        """Numerical value at real s (scalar or array) and drift p."""
        s = np.asarray(s, dtype=float)
        acc = np.zeros_like(s, dtype=complex)
        P = 1j * p
        for (i, j), v in self.terms.items():
            acc = acc + float(v) * s**i * P**j
        return acc

    def scalar(self, p=0) -> Fraction:
        """Value of an s-independent, P-even polynomial at real rational p."""
        if any(i for i, _ in self.terms):
            raise ValueError("polynomial depends on s")
        q = self.at_p(p)
        return q.terms.get((0, 0), Fraction(0))


@lru_cache(maxsize=None)
def _gauss(n: int) -> Fraction:
    # (1/sqrt(pi)) int s^n exp(-s^2) ds = (n-1)!! / 2^(n/2) for even n
    m = n // 2
    df = 1
    for k in range(1, 2 * m, 2):
        df *= k
    return Fraction(df, 2**m)


def _binom(a: Fraction, k: int) -> Fraction:
    out = Fraction(1)
    for i in range(k):
        out *= (a - i) / (i + 1)
    return out


def radical_series(power: Fraction, n: int) -> list[BiPoly]:
    """Coefficients of eps^(2j) in (1 - s^2 eps^2 / 4)^power, j = 0..n-1."""
    return [BiPoly({(2 * j, 0): _binom(Fraction(power), j) * Fraction(-1, 4) ** j}) for j in range(n)]


def _L(u: BiPoly) -> BiPoly:
    return u.ds().ds().scale(4) - u.ds().shift_s(1).scale(8)


def _solve_L(g: BiPoly, k: int) -> tuple[BiPoly, BiPoly]:
    """u without constant term solving L u + g = 0 up to a constant; returns (u, constant defect)."""
    deg = g.degree_s()
    coeffs: dict[int, BiPoly] = {}
    for n in range(deg, 0, -1):
        nxt = coeffs.get(n + 2, BiPoly())
        cn = (nxt.scale(4 * (n + 2) * (n + 1)) + g.coeff_s(n)).scale(Fraction(1, 8 * n))
        if not cn.is_zero():
            coeffs[n] = cn
    u = BiPoly()
    for n, c in coeffs.items():
        u = u + c.shift_s(n)
    defect = coeffs.get(2, BiPoly()).scale(8) + g.coeff_s(0)
    return u, defect


@dataclass(frozen=True)
class SeriesData:
    """u_0..u_K and mu_1..mu_(K/2) as exact polynomials in (s, P)."""

    order: int
    u: tuple[BiPoly, ...]
    mu: tuple[BiPoly, ...]

    def mu_at(self, p) -> list[Fraction]:
        return [m.scalar(p) for m in self.mu]


@lru_cache(maxsize=None)
def _build(order: int) -> SeriesData:
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must lie in 1..{MAX_ORDER}")
    r = radical_series(Fraction(1, 2), order // 2 + 1)
    u: list[BiPoly] = [BiPoly.const(1)]
    mu: list[BiPoly] = []
    for k in range(1, order + 1):
        g = BiPoly()
        for j in range(0, (k - 1) // 2 + 1):
            v = u[k - 1 - 2 * j]
            g = g + (r[j] * (v.ds() - v.shift_s(1))).shift_P(1).scale(8)
        if k >= 2:
            v = u[k - 2]
            g = (g - v.ds().ds().shift_s(2) - (v.ds().shift_s(1) - v.ds().shift_s(3).scale(2))
                 + v.shift_s(2).scale(2) - v.shift_s(4))
        for j in range(1, k // 2 + 1):
            if j <= len(mu):
                g = g + (mu[j - 1] * u[k - 2 * j]).scale(4)
        uk, defect = _solve_L(g, k)
        if k % 2 == 0:
            # the new mu_(k/2) enters as 4 mu u_0; it must cancel the constant defect
            mu.append(defect.scale(Fraction(-1, 4)))
        elif not defect.is_zero():
            raise SeriesError(f"order {k}: constant term {defect} cannot be removed at odd order")
        if not (_L(uk) + g + (BiPoly() if k % 2 else mu[-1].scale(4))).is_zero():
            raise SeriesError(f"order {k}: polynomial solution does not satisfy the recursion")
        u.append(uk)
    return SeriesData(order=order, u=tuple(u), mu=tuple(mu))


def build_series(order: int = 7) -> SeriesData:
    """Exact series u_1..u_order and the eigenvalue coefficients it fixes."""
    return _build(order)


# --- eps-series helpers ----------------------------------------------------------

def _ser_mul(a: list[BiPoly], b: list[BiPoly], n: int) -> list[BiPoly]:
    out = [BiPoly() for _ in range(n + 1)]
    for i, x in enumerate(a[:n + 1]):
        if x.is_zero():
            continue
        for j, y in enumerate(b[:n + 1 - i]):
            out[i + j] = out[i + j] + x * y
    return out


def _ser_div(a: list[BiPoly], b: list[BiPoly], n: int) -> list[BiPoly]:
    """a / b for s-free series whose b_0 is the constant 1."""
    if b[0] != BiPoly.const(1):
        raise ValueError("divisor must start with 1")
    out: list[BiPoly] = []
    for k in range(n + 1):
        acc = a[k] if k < len(a) else BiPoly()
        for j in range(1, k + 1):
            if j < len(b):
                acc = acc - b[j] * out[k - j]
        out.append(acc)
    return out


def _radical_eps(power: Fraction, n: int) -> list[BiPoly]:
    r = radical_series(power, n // 2 + 1)
    out = [BiPoly() for _ in range(n + 1)]
    for j, c in enumerate(r):
        if 2 * j <= n:
            out[2 * j] = c
    return out


def _abs2(data: SeriesData, n: int) -> list[BiPoly]:
    ubar = [x.conj() for x in data.u]
    return _ser_mul(list(data.u), ubar, n)


def norm_series(order: int = 4) -> list[BiPoly]:
    """N_k with (1/sqrt(pi)) int exp(-s^2) |u|^2 (1 - s^2/4chi^2)^(-1/2) ds = sum_k N_k chi^-k."""
    data = _build(order)
    integrand = _ser_mul(_abs2(data, order), _radical_eps(Fraction(-1, 2), order), order)
    return [t.gauss_moment() for t in integrand]


def a1_series(order: int = 4) -> list[BiPoly]:
    """a1 = 2 - chi^-2 M / N as a chi^-1 series through chi^-(order+2)."""
    data = _build(order)
    base = _ser_mul(_abs2(data, order), _radical_eps(Fraction(-1, 2), order), order)
    N = [t.gauss_moment() for t in base]
    M = [t.shift_s(2).gauss_moment() for t in base]
    ratio = _ser_div(M, N, order)
    out = [BiPoly.const(2), BiPoly()] + [r.scale(-1) for r in ratio]
    return out[:order + 3]


def momentum_series(order: int = 7) -> list[BiPoly]:
    """Coefficients of P + chi J / N, which must vanish order by order for P_x = 0.

    J = (1/sqrt(pi)) int exp(-s^2) conj(u) u' ds.  The residual P_x / (rho0 V)
    equals -i times this series.  Orders 0..order-1 are determined by u_1..u_order.
    """
    data = _build(order)
    ubar = [x.conj() for x in data.u]
    du = [x.ds() for x in data.u]
    J = [t.gauss_moment() for t in _ser_mul(ubar, du, order)]
    N = norm_series(order)
    # chi J = sum_k J_(k+1) eps^k
    chiJ = J[1:] + [BiPoly()]
    ratio = _ser_div(chiJ, N, order - 1)
    ratio[0] = ratio[0] + BiPoly({(0, 1): Fraction(1)})
    return ratio[:order]


def momentum_even_parts(order: int = 7) -> list[BiPoly]:
    """Even-in-s parts of conj(u) u' + P |u|^2 / (chi sqrt(1 - s^2/4chi^2)), order by order.

    The momentum cancellation argument needs every entry to vanish.
    """
    data = _build(order)
    ubar = [x.conj() for x in data.u]
    du = [x.ds() for x in data.u]
    first = _ser_mul(ubar, du, order)
    second = _ser_mul(_abs2(data, order), _radical_eps(Fraction(-1, 2), order), order)
    out = []
    for k in range(order + 1):
        t = first[k]
        if k >= 1:
            t = t + second[k - 1].shift_P(1)
        out.append(t.even_part_s())
    return out


def series_residual_order(order: int, extra: int = 2) -> int:
    """Lowest eps power with a nonzero remainder when the truncated u and mu are put in the equation."""
    data = _build(order)
    n = order + extra
    u = list(data.u) + [BiPoly()] * extra
    mu = list(data.mu) + [BiPoly()] * (n // 2)
    r = radical_series(Fraction(1, 2), n // 2 + 1)
    for k in range(0, n + 1):
        tot = _L(u[k])
        for j in range(0, (k - 1) // 2 + 1):
            v = u[k - 1 - 2 * j]
            tot = tot + (r[j] * (v.ds() - v.shift_s(1))).shift_P(1).scale(8)
        if k >= 2:
            v = u[k - 2]
            tot = (tot - v.ds().ds().shift_s(2) - (v.ds().shift_s(1) - v.ds().shift_s(3).scale(2))
                   + v.shift_s(2).scale(2) - v.shift_s(4))
        for j in range(1, k // 2 + 1):
            tot = tot + (mu[j - 1] * u[k - 2 * j]).scale(4)
        if not tot.is_zero():
            return k
    return n + 1


# --- numerical evaluation -----------------------------------------------------------

def _check_chi(chi: float):
    if not chi >= CHI_MIN:
        raise RegimeError(f"chi = {chi} is below the asymptotic range chi >= {CHI_MIN}")


def eigenvalue_c(chi: float, p_drift: float = 0.0, order: int = 6) -> float:
    """c = -2 chi^4 + chi^2 + mu_1 + mu_2 / chi^2 + ... using mu_1..mu_(order/2)."""
    _check_chi(chi)
    data = _build(order)
    c = -2.0 * chi**4 + chi**2
    for j, m in enumerate(data.mu, start=1):
        c += float(m.at_p(Fraction(p_drift)).terms.get((0, 0), 0)) * chi ** (-2 * (j - 1))
    return c


def _eval_series(coeffs: list[BiPoly], chi: float, p: float) -> float:
    return float(sum(float(c.at_p(Fraction(p)).terms.get((0, 0), 0)) * chi**-k
                     for k, c in enumerate(coeffs)))


def normalization_C0(chi: float, order: int = 4, p_drift: float = 0.0) -> float:
    """C0^2 with 1/C0^2 = (1 / 2 sqrt(pi) chi) sum_k N_k chi^-k."""
    _check_chi(chi)
    return 2.0 * math.sqrt(math.pi) * chi / _eval_series(norm_series(order), chi, p_drift)


def fourier_a1(chi: float, order: int = 4, p_drift: float = 0.0) -> float:
    """Coefficient of cos(xi) in |f_1|^2: 2 - 1/(2 chi^2) + O(chi^-6)."""
    _check_chi(chi)
    return _eval_series(a1_series(order), chi, p_drift)


def u_value(chi: float, s, p_drift: float = 0.0, order: int = 7):
    data = _build(order)
    return sum(uk.value(s, p_drift) * chi**-k for k, uk in enumerate(data.u))


def momentum_Px(chi: float, p_drift: float, order: int = 7) -> float:
    """P_x / (rho0 V) from the truncated series, integrated over the whole line.

    Evaluates p - (i / 2 pi) C0^2 int exp(-s^2) conj(u) u' ds numerically with
    Gauss-Hermite quadrature and C0 from the same truncated series.
    """
    _check_chi(chi)
    data = _build(order)
    x, w = np.polynomial.hermite.hermgauss(64)
    u = sum(uk.value(x, p_drift) * chi**-k for k, uk in enumerate(data.u))
    du = sum(uk.ds().value(x, p_drift) * chi**-k for k, uk in enumerate(data.u))
    # radical expanded to the same order, as in the exact series
    rad = sum(c.value(x) * chi ** (-2 * j)
              for j, c in enumerate(radical_series(Fraction(-1, 2), order // 2 + 1)))
    N = float(np.sum(w * np.abs(u) ** 2 * rad.real))
    J = complex(np.sum(w * np.conj(u) * du))
    return float((p_drift - 1j * chi * J / N).real)


def tail_exponent(chi1: float = 2.0, chi2: float = 2.5, p_drift: float = 0.3, order: int = 7) -> float:
    """k with tail_weight ~ exp(-k chi^2) between two chi values; the neglected region predicts k = 4."""
    t1, t2 = tail_weight(chi1, p_drift, order), tail_weight(chi2, p_drift, order)
    return -math.log(t2 / t1) / (chi2**2 - chi1**2)


def tail_weight(chi: float, p_drift: float = 0.0, order: int = 7) -> float:
    """int_{|s| > 2 chi} exp(-s^2) |u(s)|^2 ds for the truncated series: the neglected region."""
    f = lambda s: math.exp(-s * s) * abs(complex(u_value(chi, s, p_drift, order))) ** 2  # noqa: E731
    val, _ = integrate.quad(f, 2.0 * chi, np.inf, epsabs=0.0, epsrel=1e-10, limit=200)
    return 2.0 * val


# --- self-consistent amplitude of the deep crystal ----------------------------------

def solve_alpha1_deep(sigma_a: float, rho0: float) -> float:
    """alpha1 from x = 1 - (1/4) sqrt(kappa / x), x = alpha1 / rho0, kappa = 1 / (2 |sigma_a| rho0).

    Returns the larger root, which tends to rho0 as |sigma_a| grows.
    """
    if not sigma_a < 0:
        raise NoBifurcationError("the deep-lattice amplitude needs sigma_a < 0")
    if not rho0 > 0:
        raise ValueError("rho0 must be positive")
    kappa = 1.0 / (2.0 * abs(sigma_a) * rho0)
    F = lambda x: x - 1.0 + 0.25 * math.sqrt(kappa / x)  # noqa: E731
    xm = (math.sqrt(kappa) / 8.0) ** (2.0 / 3.0)
    if xm >= 1.0 or F(xm) > 0.0:
        raise NoBifurcationError(f"no root: |sigma_a| rho0 = {abs(sigma_a) * rho0:.4g} is too small")
    x = optimize.brentq(F, xm, 1.0, xtol=1e-15, rtol=1e-15)
    return float(x * rho0)


def chi_from_alpha1(alpha1: float, sigma_a: float) -> float:
    """chi = (-q)^(1/4) with q = 2 sigma_a alpha1."""
    q = 2.0 * sigma_a * alpha1
    if q >= 0:
        raise RegimeError("q must be negative")
    return (-q) ** 0.25


@dataclass(frozen=True)
class AsymptoticSolution:
    """Evaluated asymptotic series at one (chi, p)."""

    chi: float
    p_drift: float
    order: int
    u_polys: tuple[BiPoly, ...]
    mu: tuple[BiPoly, ...]
    c_value: float
    C0_sq: float
    a1: float


def asymptotic_solution(chi: float, p_drift: float = 0.0, order: int = 7) -> AsymptoticSolution:
    data = _build(order)
    return AsymptoticSolution(
        chi=chi, p_drift=p_drift, order=order, u_polys=data.u, mu=data.mu,
        c_value=eigenvalue_c(chi, p_drift, order),
        C0_sq=normalization_C0(chi, min(order, 4), p_drift),
        a1=fourier_a1(chi, min(order, 4), p_drift))


# --- oracle comparison -------------------------------------------------------------

@dataclass(frozen=True)
class OracleComparison:
    chi: float
    four_c_series: float
    a0_oracle: float
    C0_sq_series: float
    C0_sq_oracle: float
    a1_series: float
    a1_oracle: float

    @property
    def c_error(self) -> float:
        return abs(self.four_c_series - self.a0_oracle)


def oracle_comparison(chi: float, order: int = 6) -> OracleComparison:
    """Series c, C0^2 and a1 against the Mathieu eigenvector at q_std = -4 chi^4.

    a0 is even in q, so the oracle runs at +4 chi^4 for the characteristic
    value and at -4 chi^4 for the orbital, whose peak then sits at v = 0.
    """
    from .condensate_solver import _autocorr
    from .specfun import mathieu_ce0_auto

    _check_chi(chi)
    q_std = 4.0 * chi**4
    a0 = mathieu_ce0_auto(q_std).char_value
    orb = mathieu_ce0_auto(-q_std)
    A = orb.fourier_coeffs
    c1 = math.sqrt(2.0) * A / 2.0
    c1[0] = math.sqrt(2.0) * A[0]
    return OracleComparison(
        chi=chi,
        four_c_series=4.0 * eigenvalue_c(chi, 0.0, order),
        a0_oracle=a0,
        C0_sq_series=normalization_C0(chi, min(order, 4)),
        C0_sq_oracle=2.0 * float(orb(0.0)) ** 2,
        a1_series=fourier_a1(chi, min(order, 4)),
        a1_oracle=2.0 * _autocorr(c1, 1),
    )
