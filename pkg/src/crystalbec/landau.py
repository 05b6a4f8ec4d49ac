"""Landau free energy F = F0 + alpha(p0) eta^2 + beta eta^4 with a drift-dependent alpha.

alpha(p0) = alpha0 + alpha1 p0^2 + alpha2 p0^4.  eta^2 plays the part of the
condensate density, p0 the condensate drift momentum.  F0 is carried as an
opaque offset.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize


class Scenario(str, enum.Enum):
    TWO_TRANSITIONS = "two_transitions"
    ONE_TRANSITION_SUPERFLUID = "one_transition_superfluid"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class LandauParams:
    alpha0: float
    alpha1: float
    alpha2: float
    beta_q: float
    F0: float = 0.0

    def __post_init__(self):
        vals = (self.alpha0, self.alpha1, self.alpha2, self.beta_q, self.F0)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("Landau coefficients must be finite")
        if self.beta_q <= 0:
            raise ValueError(f"beta_q must be > 0, got {self.beta_q}")
        if self.alpha2 <= 0:
            raise ValueError(f"alpha2 must be > 0, got {self.alpha2}")

    @classmethod
    def linear(cls, slope: float, theta: float, theta_c: float, alpha1: float, alpha2: float,
               beta_q: float, F0: float = 0.0) -> "LandauParams":
        """alpha0 = slope * (theta - theta_c)."""
        return cls(slope * (theta - theta_c), alpha1, alpha2, beta_q, F0)

    def alpha(self, p0):
        P = np.square(p0)
        return self.alpha0 + self.alpha1 * P + self.alpha2 * P * P

    def free_energy(self, eta, p0):
        e2 = np.square(eta)
        return self.F0 + self.alpha(p0) * e2 + self.beta_q * e2 * e2

    def scaled(self, lam: float) -> "LandauParams":
        return LandauParams(lam * self.alpha0, lam * self.alpha1, lam * self.alpha2,
                            lam * self.beta_q, self.F0)


@dataclass(frozen=True)
class Classification:
    scenario: Scenario
    p0_sq: float          # drift at the transition
    alpha_tilde: float    # effective coefficient; the transition sits at alpha_tilde = 0
    threshold_alpha0: float


def classify(params: LandauParams) -> Classification:
    a1, a2 = params.alpha1, params.alpha2
    if a1 > 0:
        return Classification(Scenario.TWO_TRANSITIONS, 0.0, params.alpha0, 0.0)
    if a1 < 0:
        shift = a1 * a1 / (4.0 * a2)
        return Classification(Scenario.ONE_TRANSITION_SUPERFLUID, -a1 / (2.0 * a2),
                              params.alpha0 - shift, shift)
    return Classification(Scenario.DEGENERATE, 0.0, params.alpha0, 0.0)


@dataclass(frozen=True)
class LandauMinimum:
    eta_sq: float
    p0_sq: float
    dF: float           # F_min - F0
    scenario: Scenario

    @property
    def superfluid(self) -> bool:
        return self.eta_sq > 0 and self.p0_sq > 0


def minimize_over_eta_p0(params: LandauParams) -> LandauMinimum:
    cls = classify(params)
    P = max(0.0, -params.alpha1 / (2.0 * params.alpha2))
    a_eff = params.alpha0 + params.alpha1 * P + params.alpha2 * P * P
    eta_sq = max(0.0, -a_eff / (2.0 * params.beta_q))
    if eta_sq == 0.0:
        # no condensate, so no drift
        return LandauMinimum(0.0, 0.0, 0.0, cls.scenario)
    return LandauMinimum(eta_sq, P, -a_eff * a_eff / (4.0 * params.beta_q), cls.scenario)


def _label_from_p0(p0_sq: float, scale: float, tol: float = 1e-6) -> Scenario:
    return Scenario.ONE_TRANSITION_SUPERFLUID if p0_sq > tol * scale else Scenario.TWO_TRANSITIONS


def brute_force_minimum(params: LandauParams, n_grid: int = 100) -> LandauMinimum:
    """n_grid x n_grid search in (eta, p0) polished by Nelder-Mead.

    The scenario label comes from the minimizing p0 of alpha alone, found by a
    1D search of the same resolution, because p0 is arbitrary when eta = 0.
    """
    P_guess = abs(params.alpha1) / params.alpha2
    p_max = 2.0 * math.sqrt(max(P_guess, 1.0))
    a_max = abs(params.alpha0) + abs(params.alpha1) * P_guess + params.alpha2 * P_guess**2
    eta_max = 2.0 * math.sqrt(max(a_max / params.beta_q, 1.0))

    def polish(f, x0):
        return optimize.fmin(f, x0, xtol=1e-12, ftol=1e-15, maxiter=20000, disp=False)

    F = lambda v: params.free_energy(v[0], v[1])
    x0 = optimize.brute(F, ((0.0, eta_max), (0.0, p_max)), Ns=n_grid, finish=None)
    eta, p0 = np.abs(polish(F, x0))
    dF = float(params.free_energy(eta, p0)) - params.F0
    if dF >= 0.0:
        eta = 0.0
        dF = 0.0

    A = lambda v: params.alpha(v[0])
    xp = optimize.brute(A, ((0.0, p_max),), Ns=n_grid, finish=None)
    p_alpha = float(abs(polish(A, np.atleast_1d(xp))[0]))
    label = _label_from_p0(p_alpha**2, max(P_guess, 1.0))
    p0_sq = p0 * p0 if eta > 0 else 0.0
    return LandauMinimum(eta * eta, p0_sq, dF, label)


@dataclass(frozen=True)
class GeneralMinimum:
    p0_star: float
    alpha_min: float
    eta_sq: float
    dF: float


def minimize_general(alpha_fn: Callable[[float], float], beta_q: float, p_max: float,
                     n_scan: int = 401) -> GeneralMinimum:
    """Minimum over eta and isotropic p0 in [0, p_max] for an arbitrary alpha(p0)."""
    if beta_q <= 0 or p_max <= 0:
        raise ValueError("beta_q and p_max must be > 0")
    grid = np.linspace(0.0, p_max, n_scan)
    vals = np.array([alpha_fn(p) for p in grid])
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, n_scan - 1)]
    res = optimize.minimize_scalar(alpha_fn, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12})
    p_star, a_min = (float(res.x), float(res.fun)) if res.fun <= vals[i] else (float(grid[i]), float(vals[i]))
    eta_sq = max(0.0, -a_min / (2.0 * beta_q))
    if eta_sq == 0.0:
        return GeneralMinimum(0.0, a_min, 0.0, 0.0)
    return GeneralMinimum(p_star, a_min, eta_sq, -a_min * a_min / (4.0 * beta_q))
