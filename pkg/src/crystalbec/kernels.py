"""Interaction kernels, simple-cubic lattice geometry and the thermodynamic state.

Internal units are hbar = m = a = 1, where ``a`` is the reciprocal-lattice
constant of the simple-cubic crystal.  :class:`Units` converts to and from
physical units at the API boundary.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping

import numpy as np
from scipy import interpolate, optimize

from .errors import NoBifurcationError

Index = tuple[int, int, int]

FD_REL_STEP = 1e-6
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Units:
    """Scales that make hbar = m = a = 1.

    ``energy`` is hbar^2 a^2 / m, ``density`` is a^3 and ``sigma`` (energy times
    volume) is their ratio.  Multiply an internal value by the scale to get
    the physical one.
    """

    hbar: float = 1.0
    mass: float = 1.0
    a: float = 1.0

    @property
    def energy(self) -> float:
        return self.hbar**2 * self.a**2 / self.mass

    @property
    def density(self) -> float:
        return self.a**3

    @property
    def sigma(self) -> float:
        return self.energy / self.density

    @property
    def momentum(self) -> float:
        return self.hbar * self.a

    def beta(self, tau: float) -> float:
        """hbar a / sqrt(2 m tau) for a physical tau."""
        return self.hbar * self.a / math.sqrt(2.0 * self.mass * tau)


@dataclass(frozen=True)
class LatticeSpec:
    """Simple-cubic reciprocal lattice A = a (l, m, n)."""

    recip_length: float = 1.0
    index_cutoff: int = 2
    kirkwood: bool = True
    cell_volume: float | None = None

    def __post_init__(self):
        if not self.recip_length > 0:
            raise ValueError("recip_length must be positive")
        if self.index_cutoff < 1:
            raise ValueError("index_cutoff must be >= 1")
        if self.cell_volume is None:
            object.__setattr__(self, "cell_volume", (2.0 * math.pi / self.recip_length) ** 3)

    def indices(self) -> list[Index]:
        """All (l, m, n) with max(|l|, |m|, |n|) <= index_cutoff; closed under negation."""
        c = self.index_cutoff
        rng = range(-c, c + 1)
        return list(itertools.product(rng, rng, rng))

    def vector(self, idx: Index) -> np.ndarray:
        return self.recip_length * np.asarray(idx, dtype=float)

    def magnitude(self, idx: Index) -> float:
        return self.recip_length * math.sqrt(idx[0] ** 2 + idx[1] ** 2 + idx[2] ** 2)


FIRST_SHELL: tuple[Index, ...] = (
    (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1),
)


def _zero(*_args):
    return 0.0


def _central_difference(f: Callable[[float], float], scale: float = 1.0):
    def df(k):
        h = FD_REL_STEP * max(abs(k), scale)
        return (f(k + h) - f(k - h)) / (2.0 * h)
    return df


@dataclass(frozen=True)
class InteractionKernels:
    """Fourier transforms of the interaction: sigma (from K_g) and sigma_e (from K g).

    Only ``sigma`` is required.  Missing derivative callables fall back to
    central differences in k (relative step 1e-6) or to zero for the
    temperature and density derivatives, i.e. a g(r) that does not depend on
    theta or rho0.
    """

    sigma: Callable[[float], float]
    sigma_e: Callable[[float], float] | None = None
    dsigma_dk: Callable[[float], float] | None = None
    dsigma_drho0: Callable[[float], float] = _zero
    dsigma_e_drho0: Callable[[float], float] = _zero
    dsigma_dtheta: Callable[[float], float] = _zero
    d2sigma_dthetadk: Callable[[float], float] = _zero
    g_depends_on_rhoc: bool = False
    real_space: Callable[[float], float] | None = field(default=None, compare=False)
    cutoff_radius: float | None = None

    def __post_init__(self):
        if self.sigma_e is None:
            object.__setattr__(self, "sigma_e", self.sigma)
        if self.dsigma_dk is None:
            object.__setattr__(self, "dsigma_dk", _central_difference(self.sigma))

    def __call__(self, k):
        return self.sigma_at(k)

    def sigma_at(self, k: float) -> float:
        if self.cutoff_radius is not None and abs(k) > self.cutoff_radius:
            return 0.0
        return float(self.sigma(abs(k)))

    def sigma_e_at(self, k: float) -> float:
        if self.cutoff_radius is not None and abs(k) > self.cutoff_radius:
            return 0.0
        return float(self.sigma_e(abs(k)))

    def dsigma_dk_at(self, k: float) -> float:
        if self.cutoff_radius is not None and abs(k) > self.cutoff_radius:
            return 0.0
        return float(np.sign(k) or 1.0) * float(self.dsigma_dk(abs(k)))

    @property
    def sigma0(self) -> float:
        return self.sigma_at(0.0)

    def sigma_a(self, a: float = 1.0) -> float:
        return self.sigma_at(a)

    def kirkwood(self, a: float = 1.0) -> "InteractionKernels":
        """Copy with sigma, sigma_e and derivatives set to zero beyond the first shell."""
        return replace(self, cutoff_radius=a * (1.0 + 1e-9))


def sigma_minimum(kern: InteractionKernels, k_max: float = 20.0, n_scan: int = 20001):
    """Locate the negative minimum of sigma(k) for k > 0.

    Returns ``(k_min, sigma_min)``.  A dense scan picks the basin, a bounded
    Brent search refines it.  Raises :class:`NoBifurcationError` when sigma has
    no negative minimum at positive k.
    """
    ks = np.linspace(0.0, k_max, n_scan)
    vals = np.array([kern.sigma(k) for k in ks])
    i = int(np.argmin(vals))
    if vals[i] >= 0.0:
        raise NoBifurcationError("sigma(k) >= 0 everywhere on the scan: no bifurcation possible")
    if i == 0:
        raise NoBifurcationError("sigma(k) is minimal at k = 0: no crystal wave vector")
    lo, hi = ks[max(i - 1, 0)], ks[min(i + 1, n_scan - 1)]
    res = optimize.minimize_scalar(kern.sigma, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12 * max(1.0, ks[i])})
    return float(res.x), float(res.fun)


def build_demo_kernels(depth: float, width: float) -> InteractionKernels:
    """Gaussian-damped kernel whose transform has a single negative dip.

    sigma(k) = depth (e^2 / 2) exp(-y / 2) (2 - y),  y = (k / width)^2,

    so the minimum sigma = -depth sits at k = 2 width.  The real-space
    potential is K(r) = C ((r w)^2 - 1) exp(-(r w)^2 / 2) with w = width and
    C = depth e^2 w^3 / (2 (2 pi)^{3/2}); g = 1, hence K_g = K and
    sigma_e = sigma.
    """
    if not depth > 0 or not width > 0:
        raise ValueError("depth and width must be positive")
    amp = 0.5 * depth * math.e**2
    w2 = width * width

    def sigma(k):
        y = k * k / w2
        return amp * math.exp(-0.5 * y) * (2.0 - y)

    def dsigma_dk(k):
        y = k * k / w2
        # d/dy [e^{-y/2}(2-y)] = e^{-y/2}(y/2 - 2), dy/dk = 2k/w^2
        return amp * math.exp(-0.5 * y) * (0.5 * y - 2.0) * 2.0 * k / w2

    c_real = amp * width**3 / (2.0 * math.pi) ** 1.5

    def K(r):
        x2 = (r * width) ** 2
        return c_real * (x2 - 1.0) * math.exp(-0.5 * x2)

    kern = InteractionKernels(sigma=sigma, dsigma_dk=dsigma_dk, real_space=K)
    if sigma_minimum(kern, k_max=10.0 * width)[1] >= 0.0:
        raise NoBifurcationError("demo kernel has no negative minimum")
    return kern


def kernels_from_table(k, sigma, sigma_e=None) -> InteractionKernels:
    """Cubic-spline kernels from tabulated (k, sigma[, sigma_e]) on k >= 0.

    The spline is clamped with zero slope at k = 0 so the even extension is
    smooth; values beyond the last node are zero.
    """
    k = np.asarray(k, dtype=float)
    if k.ndim != 1 or k.size < 4 or np.any(np.diff(k) <= 0) or k[0] != 0.0:
        raise ValueError("k must be an increasing grid starting at 0 with >= 4 nodes")
    k_end = float(k[-1])

    def make(values):
        spl = interpolate.CubicSpline(k, np.asarray(values, dtype=float), bc_type=((1, 0.0), "not-a-knot"))
        dspl = spl.derivative()

        def f(x):
            return float(spl(abs(x))) if abs(x) <= k_end else 0.0

        def df(x):
            return float(dspl(abs(x))) if abs(x) <= k_end else 0.0
        return f, df

    s, ds = make(sigma)
    se = make(sigma_e)[0] if sigma_e is not None else None
    return InteractionKernels(sigma=s, sigma_e=se, dsigma_dk=ds)


def load_kernels(source) -> InteractionKernels:
    """Kernel definition from a JSON file path or an already-parsed mapping.

    Accepted forms::

        {"schema_version": 1, "kind": "demo", "depth": 0.5, "width": 0.5}
        {"schema_version": 1, "kind": "table", "k": [...], "sigma": [...], "sigma_e": [...]}
    """
    if isinstance(source, (str, Path)):
        spec = json.loads(Path(source).read_text())
    else:
        spec = dict(source)
    version = spec.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValueError(f"kernel: unsupported schema_version {version!r}")
    kind = spec.get("kind")
    if kind == "demo":
        return build_demo_kernels(float(spec["depth"]), float(spec["width"]))
    if kind == "table":
        return kernels_from_table(spec["k"], spec["sigma"], spec.get("sigma_e"))
    raise ValueError(f"kernel.kind: expected 'demo' or 'table', got {kind!r}")


@dataclass(frozen=True)
class ThermoPoint:
    """Thermodynamic state (theta, rho0, rho_c, tau) in internal units."""

    theta: float
    rho0: float
    tau: float
    rho_c: float = 0.0
    B_norm: float | None = None

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError("theta must be >= 0")
        if not self.rho0 > 0:
            raise ValueError("rho0 must be > 0")
        if not self.tau > 0:
            raise ValueError("tau must be > 0")
        if not 0.0 <= self.rho_c <= self.rho0:
            raise ValueError("rho_c must lie in [0, rho0]")

    @property
    def beta_param(self) -> float:
        return 1.0 / math.sqrt(2.0 * self.tau)

    @property
    def rho_n(self) -> float:
        return self.rho0 - self.rho_c


def _check_conjugate_symmetric(coeffs: Mapping[Index, complex], tol: float = 1e-12):
    for idx, val in coeffs.items():
        neg = (-idx[0], -idx[1], -idx[2])
        other = coeffs.get(neg, 0.0)
        if abs(other - np.conj(val)) > tol * max(1.0, abs(val)):
            raise ValueError(f"coefficients not conjugate-symmetric at {idx}")


def fourier_potential(lattice: LatticeSpec, coeffs: Mapping[Index, complex],
                      kernels: InteractionKernels) -> dict[Index, complex]:
    """Potential Fourier amplitudes a_lmn sigma(|A|) for density amplitudes a_lmn."""
    _check_conjugate_symmetric(coeffs)
    return {idx: val * kernels.sigma_at(lattice.magnitude(idx)) for idx, val in coeffs.items()}


def evaluate_fourier(coeffs: Mapping[Index, complex], points, lattice: LatticeSpec | None = None):
    """Sum of c_A exp(i A.r) at an array of points with shape (..., 3)."""
    lattice = lattice or LatticeSpec()
    pts = np.asarray(points, dtype=float)
    out = np.zeros(pts.shape[:-1], dtype=complex)
    for idx, val in coeffs.items():
        out += val * np.exp(1j * pts @ lattice.vector(idx))
    return out


def first_shell_coeffs(rho0: float, alpha: float) -> dict[Index, float]:
    """Density amplitudes with a_000 = rho0 and alpha on the six first-shell vectors."""
    coeffs = {(0, 0, 0): rho0}
    coeffs.update({idx: alpha for idx in FIRST_SHELL})
    return coeffs
