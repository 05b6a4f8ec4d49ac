"""Dawson integral, its large-argument expansion, and a Mathieu ce0 oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError

SQRT_PI = math.sqrt(math.pi)


def dawson(x):
    """F(x) = exp(-x^2) * integral_0^x exp(t^2) dt.

    Delegates to ``scipy.special.dawsn`` (Faddeeva-based, ~1e-15 relative),
    which covers the whole real line including the asymptotic tail.
    """
    return special.dawsn(x)


def dawson_asymptotic(x, terms: int = 3):
    """Large-x expansion (1 / 2x) [1 + sum_k (2k-1)!! / (2x^2)^k], k = 1..terms.

    The series is asymptotic: it diverges for fixed x as ``terms`` grows, and
    is only useful for x of a few units or more.
    """
    x = np.asarray(x, dtype=float)
    inv = 1.0 / (2.0 * x * x)
    total = np.ones_like(x)
    term = np.ones_like(x)
    for k in range(1, terms + 1):
        term = term * (2 * k - 1) * inv
        total = total + term
    return total / (2.0 * x)


def erf_i_combo(x):
    """exp(-x^2) i erf(i x), which is real and equals -(2 / sqrt(pi)) F(x)."""
    return -2.0 / SQRT_PI * dawson(x)


@lru_cache(maxsize=None)
def dawson_taylor(n_terms: int = 40) -> tuple[Fraction, ...]:
    """Exact Maclaurin coefficients d_k with F(x) = sum_k d_k x^(2k+1).

    d_k = (-1)^k 2^k / (2k+1)!!.
    """
    coeffs = []
    dfact = 1
    for k in range(n_terms):
        dfact *= 2 * k + 1
        coeffs.append(Fraction((-1) ** k * 2**k, dfact))
    return tuple(coeffs)


@dataclass(frozen=True)
class MathieuOracleResult:
    """Lowest even Mathieu function ce0(v, q) and its characteristic value.

    ``fourier_coeffs[k]`` is A_{2k} in ce0(v) = sum_k A_{2k} cos(2 k v), with
    the normalization (1/pi) int_0^{2pi} ce0^2 dv = 1 and A_0 > 0.
    """

    q_std: float
    char_value: float
    fourier_coeffs: np.ndarray
    truncation: int
    residual: float

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        k = np.arange(self.fourier_coeffs.size)
        return np.cos(2.0 * np.multiply.outer(v, k)) @ self.fourier_coeffs

    def derivative(self, v):
        v = np.asarray(v, dtype=float)
        k = np.arange(self.fourier_coeffs.size)
        return -np.sin(2.0 * np.multiply.outer(v, k)) @ (2.0 * k * self.fourier_coeffs)


def _ce0_raw(q_std: float, n: int):
    # symmetric form of the even pi-periodic recurrence: w_0 = sqrt(2) A_0
    diag = (2.0 * np.arange(n)) ** 2
    off = np.full(n - 1, float(q_std))
    off[0] *= math.sqrt(2.0)
    vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    w = vecs[:, 0]
    if w[0] < 0:
        w = -w
    coeffs = w.copy()
    coeffs[0] /= math.sqrt(2.0)
    # residual of the unsymmetrized recurrence
    resid = np.empty(n)
    resid[0] = vals[0] * coeffs[0] - q_std * coeffs[1]
    resid[1:] = (vals[0] - diag[1:]) * coeffs[1:]
    resid[1] -= q_std * 2.0 * coeffs[0]
    resid[1:-1] -= q_std * coeffs[2:]
    resid[2:] -= q_std * coeffs[1:-1]
    return float(vals[0]), coeffs, float(np.max(np.abs(resid[:-1])))


def mathieu_ce0(q_std: float, truncation: int = 64, tol: float = 1e-10) -> MathieuOracleResult:
    """Characteristic value a0(q) and ce0 for y'' + (a - 2 q cos 2v) y = 0.

    The cosine-basis eigenproblem is solved at ``truncation`` and again at
    1.5x that size; a change in a0 above ``tol`` raises ConvergenceError.
    """
    if truncation < 8:
        raise ValueError("truncation must be >= 8")
    if not abs(q_std) < 1e6:
        raise ValueError("|q_std| must be < 1e6")
    a, coeffs, resid = _ce0_raw(q_std, truncation)
    a_big, _, _ = _ce0_raw(q_std, int(math.ceil(1.5 * truncation)))
    if abs(a_big - a) > tol:
        raise ConvergenceError(
            f"mathieu_ce0: a0 changed by {abs(a_big - a):.3e} between truncation "
            f"{truncation} and {int(math.ceil(1.5 * truncation))}; increase truncation")
    return MathieuOracleResult(q_std=float(q_std), char_value=a, fourier_coeffs=coeffs,
                               truncation=truncation, residual=resid)


def mathieu_ce0_auto(q_std: float, tol: float = 1e-10, start: int = 64, limit: int = 4096):
    """mathieu_ce0 with the truncation grown until the convergence gate passes."""
    n = start
    while True:
        try:
            return mathieu_ce0(q_std, n, tol)
        except ConvergenceError:
            n = int(math.ceil(1.5 * n))
            if n > limit:
                raise
