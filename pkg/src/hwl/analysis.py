"""Special functions and model constants.

Hermite polynomials use the probabilists' convention (weight e^{-u^2/2}).
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import hermite_e
from scipy import special

from . import kernels
from .errors import DomainError, NumericalError

__all__ = [
    "KernelParams",
    "CovarianceModel",
    "HermiteExpansion",
    "hermite_poly",
    "hermite_coeffs",
    "gamma",
    "c1",
    "c2",
    "bessel_j1",
    "covariance",
    "sphere_area",
    "ball_volume",
    "shifted_lattice_zeta",
]


def gamma(x: float) -> float:
    """Gamma function; poles raise :class:`DomainError`."""
    x = float(x)
    if x == math.floor(x) and x <= 0:
        raise DomainError(f"Gamma has a pole at {x}")
    return math.gamma(x)


def ball_volume(n: int) -> float:
    return math.pi ** (n / 2.0) / gamma(n / 2.0 + 1.0)


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / gamma(n / 2.0)


@dataclass(frozen=True)
class KernelParams:
    """Dimension ``n``, Hermite rank ``kappa`` and decay exponent ``alpha``."""

    n: int
    kappa: int
    alpha: float

    def __post_init__(self):
        if self.n < 1 or self.kappa < 1:
            raise DomainError("n and kappa must be positive integers")
        if not 0.0 < self.alpha < self.n / self.kappa:
            raise DomainError(
                f"alpha must lie in (0, n/kappa) = (0, {self.n / self.kappa:g}); got {self.alpha:g}"
            )

    @property
    def exponent(self) -> float:
        """The Riesz exponent kappa*alpha."""
        return self.kappa * self.alpha

    @property
    def hurst(self) -> float:
        """Self-similarity index 1 - kappa*alpha/(2n)."""
        return 1.0 - self.exponent / (2.0 * self.n)


@dataclass(frozen=True)
class CovarianceModel:
    """Isotropic covariance B(r).

    ``family="cauchy"`` gives (1 + r^2)^(-alpha/2), unit variance and
    B(r) r^alpha -> 1. ``family="power"`` gives h0 * c1(n, alpha) * r^-alpha.
    """

    family: str = "cauchy"
    alpha: float = 1.0
    h0: float = 1.0
    n: int = 2

    def __post_init__(self):
        if self.family not in ("cauchy", "power"):
            raise DomainError(f"unknown covariance family {self.family!r}")
        if not 0.0 < self.alpha < self.n:
            raise DomainError("alpha must lie in (0, n)")


def covariance(model: CovarianceModel, r):
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0):
        raise DomainError("distance must be nonnegative")
    if model.family == "cauchy":
        out = (1.0 + r * r) ** (-0.5 * model.alpha)
    else:
        with np.errstate(divide="ignore"):
            out = model.h0 * c1(model.n, model.alpha) * r ** (-model.alpha)
    return float(out) if out.ndim == 0 else out


def hermite_poly(m: int, u):
    """Probabilists' Hermite polynomial H_m evaluated by the three-term recurrence."""
    if m < 0:
        raise DomainError("order must be nonnegative")
    u = np.asarray(u, dtype=np.float64)
    h_prev = np.ones_like(u)
    if m == 0:
        return float(h_prev) if u.ndim == 0 else h_prev
    h = u.copy()
    for k in range(1, m):
        h_prev, h = h, u * h - k * h_prev
    return float(h) if u.ndim == 0 else h


@dataclass
class HermiteExpansion:
    coeffs: np.ndarray
    rank: int
    norm: float = field(default=1.0)

    def __call__(self, u):
        u = np.asarray(u, dtype=np.float64)
        return sum(a * hermite_poly(m, u) for m, a in enumerate(self.coeffs))


def _gh_coeffs(func, max_order, nodes):
    x, w = hermite_e.hermegauss(nodes)
    w = w / math.sqrt(2.0 * math.pi)
    g = np.asarray(func(x), dtype=np.float64) * np.ones_like(x)
    coeffs = np.array(
        [np.dot(w, g * hermite_poly(m, x)) / math.factorial(m) for m in range(max_order + 1)]
    )
    return coeffs, math.sqrt(max(np.dot(w, g * g), 0.0))


def hermite_coeffs(func, max_order: int, tol: float = 1e-8) -> HermiteExpansion:
    """Hermite coefficients a_m = E[G(X) H_m(X)] / m! by Gauss-Hermite quadrature."""
    nodes = max(2 * max_order + 2, 64)
    coeffs, norm = _gh_coeffs(func, max_order, nodes)
    check, _ = _gh_coeffs(func, max_order, 2 * nodes)
    scale = np.sqrt([math.factorial(m) for m in range(max_order + 1)])
    if np.max(np.abs(check - coeffs) * scale) > tol * max(norm, 1.0):
        raise NumericalError("Hermite coefficients did not settle when the node count was doubled")
    if norm == 0.0:
        raise DomainError("function vanishes in L2(phi)")
    zero = np.abs(coeffs) * scale < tol * norm
    coeffs = np.where(zero, 0.0, coeffs)
    nonzero = np.flatnonzero(~zero)
    if nonzero.size == 0:
        raise DomainError(f"no nonzero coefficient up to order {max_order}")
    rank = int(nonzero[0])
    if rank == 0:
        warnings.warn("Hermite rank 0: the non-central limit needs E G(X) = 0", stacklevel=2)
    return HermiteExpansion(coeffs=coeffs, rank=rank, norm=norm)


def c1(n: int, alpha: float) -> float:
    """Constant pairing the spectral density |lambda|^(alpha-n) with c1 |x|^-alpha."""
    if not 0.0 < alpha < n:
        raise DomainError(f"alpha must lie in (0, {n}); got {alpha:g}")
    return 2.0 ** alpha * math.pi ** (n / 2.0) * gamma(alpha / 2.0) / gamma((n - alpha) / 2.0)


def c2(params: KernelParams, window):
    """Normalisation c1^kappa * kappa! * (Riesz energy of the unit window).

    Returns an :class:`~hwl.riesz.Estimate`.
    """
    from .riesz import Estimate, window_energy

    energy = window_energy(window, params.exponent)
    factor = c1(params.n, params.alpha) ** params.kappa * math.factorial(params.kappa)
    return Estimate(energy.value * factor, energy.stderr * factor, energy.samples, energy.method, energy.seed)


def bessel_j1(x):
    return kernels.j1(x)


def _upper_gamma(a: float, x: float) -> float:
    if a > 0:
        return float(special.gammaincc(a, x) * special.gamma(a))
    if a == 0:
        return float(special.exp1(x))
    return (_upper_gamma(a + 1.0, x) - x ** a * math.exp(-x)) / a


def shifted_lattice_zeta(n: int, s: float, reach: int = 7) -> float:
    """Analytic continuation of sum over k in Z^n of |k + 1/2|^(-s).

    For 0 < s < n this is the finite part of (sum - integral) of |x|^-s over
    the half-offset lattice; it is the constant in the midpoint-rule error
    for a weight that is singular at the origin. Ewald splitting at u = 1.
    """
    if s == n:
        raise DomainError("pole at s = n")
    rng = range(-reach, reach)
    direct = 0.0
    for k in itertools.product(rng, repeat=n):
        r2 = sum((ki + 0.5) ** 2 for ki in k)
        x = math.pi * r2
        direct += x ** (-s / 2.0) * _upper_gamma(s / 2.0, x)
    recip = 2.0 / (s - n)
    for j in itertools.product(range(-reach, reach + 1), repeat=n):
        if not any(j):
            continue
        x = math.pi * sum(ji * ji for ji in j)
        sign = -1.0 if sum(j) % 2 else 1.0
        recip += sign * x ** (-(n - s) / 2.0) * _upper_gamma((n - s) / 2.0, x)
    half = s / 2.0
    if half == math.floor(half) and half <= 0:
        return 0.0 if recip + direct == 0 else float("nan")
    return math.pi ** half / gamma(half) * (direct + recip)
