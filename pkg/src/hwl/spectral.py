"""Spectral route to increment variances.

The variance of an increment is a weighted L2 norm of the Fourier transform
of the shell indicator,

    sum over a midpoint grid of |F(lambda)|^2 |lambda|^(alpha - n) * cell,

which approximates c1(n, alpha) * I(t, h). The weight is singular at the
origin; the midpoint lattice misses that singularity in a way that is known
in closed form (a shifted-lattice zeta value times the small-|lambda|
Taylor coefficients of |F|^2), so the leading two error terms are removed.
Transforms use F(lambda) = integral of exp(i <lambda, x>) over the region.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .analysis import KernelParams, c1, shifted_lattice_zeta
from .errors import DomainError, NumericalError
from .geometry import ShellRegion, Window, shell
from .riesz import Estimate, variance_increment, window_energy

__all__ = [
    "SpectralGrid",
    "SpectralSum",
    "VarianceCurve",
    "DEFAULT_GRIDS",
    "ft_indicator",
    "spectral_sum",
    "parseval_check",
    "spectral_variance",
    "variance_curve",
]

PARSEVAL_GATE = 0.02
TAIL_GATE = 0.005


@dataclass(frozen=True)
class SpectralGrid:
    """m midpoint nodes per axis at +-(k + 1/2) * spacing, spacing = 2 lambda_max / m."""

    m: int
    lambda_max: float

    def __post_init__(self):
        if self.m < 2 or self.m % 2:
            raise DomainError("m must be an even integer >= 2")
        if self.lambda_max <= 0:
            raise DomainError("lambda_max must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.lambda_max / self.m

    @property
    def n_half(self) -> int:
        return self.m // 2

    def nodes(self) -> np.ndarray:
        return (np.arange(-self.n_half, self.n_half) + 0.5) * self.spacing


DEFAULT_GRIDS = {1: SpectralGrid(2**16, 1.0e4), 2: SpectralGrid(5000, 4000.0)}


def _as_region(region) -> ShellRegion:
    if isinstance(region, Window):
        return shell(region, 0.0, 1.0)
    if isinstance(region, ShellRegion):
        return region
    raise DomainError("expected a Window or ShellRegion")


def _kind(region: ShellRegion) -> str:
    w = region.window
    if w.dim == 1:
        return "interval" if w.kind == "interval" else ("pair" if not w.center else "")
    if w.dim == 2 and w.kind == "ball" and not w.center:
        return "disk"
    if w.dim == 2 and w.kind == "cube":
        return "square"
    raise DomainError(f"no closed-form transform for {w.name} (spectral route covers interval, disk, square)")


def _sin_over(a, lam):
    """2 sin(a lam) / lam with its limit 2a at lam = 0."""
    lam = np.asarray(lam, dtype=np.float64)
    out = np.empty_like(lam)
    small = np.abs(a * lam) < 1e-8
    out[small] = 2.0 * a
    out[~small] = 2.0 * np.sin(a * lam[~small]) / lam[~small]
    return out


def _disk_ft(r, rho):
    out = np.empty_like(rho)
    small = r * rho < 1e-8
    out[small] = math.pi * r * r
    out[~small] = 2.0 * math.pi * r * kernels.j1(r * rho[~small]) / rho[~small]
    return out


def ft_indicator(region, lam):
    """Fourier transform of the region's indicator at frequency vectors ``lam`` (..., n)."""
    region = _as_region(region)
    kind = _kind(region)
    lam = np.asarray(lam, dtype=np.float64)
    scalar = lam.ndim == 0 or (lam.ndim == 1 and region.dim > 1)
    lam = np.atleast_1d(lam)
    if region.dim > 1:
        lam = np.atleast_2d(lam)
        if lam.shape[-1] != region.dim:
            raise DomainError("frequency vectors have the wrong dimension")
    else:
        lam = lam.reshape(-1)
    r_in, r_out = region.inner, region.outer
    if kind == "interval":
        u, v = r_in, r_out
        out = np.empty(lam.shape, dtype=np.complex128)
        small = np.abs(lam) * (v - u + abs(u)) < 1e-10
        out[small] = v - u
        ls = lam[~small]
        out[~small] = (np.exp(1j * v * ls) - np.exp(1j * u * ls)) / (1j * ls)
    elif kind == "pair":
        out = (_sin_over(r_out, lam) - _sin_over(r_in, lam)).astype(np.complex128)
    elif kind == "disk":
        rho = np.linalg.norm(lam, axis=-1)
        out = (_disk_ft(r_out, rho) - (_disk_ft(r_in, rho) if r_in > 0 else 0.0)).astype(np.complex128)
    else:
        l1, l2 = lam[..., 0], lam[..., 1]
        f = _sin_over(r_out, l1) * _sin_over(r_out, l2)
        if r_in > 0:
            f = f - _sin_over(r_in, l1) * _sin_over(r_in, l2)
        out = f.astype(np.complex128)
    return complex(out.reshape(-1)[0]) if scalar else out


def _second_moment(region: ShellRegion) -> float:
    """Per-axis variance of a uniform point in the region (isotropic for all supported shapes)."""
    kind = _kind(region)
    a, b = region.inner, region.outer
    if kind == "interval":
        return (b - a) ** 2 / 12.0
    if kind == "pair":
        return (b ** 3 - a ** 3) / (3.0 * (b - a))
    if kind == "disk":
        return (a * a + b * b) / 4.0
    return (a * a + b * b) / 3.0


@functools.lru_cache(maxsize=256)
def _zeta(n: int, s: float) -> float:
    return shifted_lattice_zeta(n, s)


def _tail_bound(region: ShellRegion, alpha: float, lam_max: float) -> tuple[float, float]:
    """Envelope bounds on the weighted and unweighted mass outside the grid box."""
    kind = _kind(region)
    a, b = region.inner, region.outer
    if kind in ("interval", "pair"):
        c = 4.0 if kind == "interval" else 16.0
        weighted = 2.0 * c * lam_max ** (alpha - 2.0) / (2.0 - alpha)
        plain = 2.0 * c / lam_max
        return weighted, plain
    if kind == "disk":
        # |J1(x)| <= sqrt(2 / (pi x)) asymptotically
        env = (2.0 * math.pi) ** 2 * (2.0 / math.pi) * (math.sqrt(a) + math.sqrt(b)) ** 2
        weighted = env * 2.0 * math.pi * lam_max ** (alpha - 3.0) / (3.0 - alpha)
        plain = env * 2.0 * math.pi / lam_max
        return weighted, plain
    weighted = 1024.0 * b * lam_max ** (alpha - 3.0) / (3.0 - alpha)
    plain = 1024.0 * b / lam_max
    return weighted, plain


@dataclass(frozen=True)
class SpectralSum:
    value: float          # corrected weighted sum
    raw: float            # plain midpoint sum
    correction: float     # value - raw
    error: float          # tail envelope + size of the last correction term
    parseval: float       # relative Parseval defect
    tail: float
    flags: tuple = field(default=())


def _grid_sums(region: ShellRegion, alpha: float, grid: SpectralGrid):
    kind = _kind(region)
    a, b, d = region.inner, region.outer, grid.spacing
    if kind == "interval":
        blocks = kernels.line_block_sums(0, b - a, 0.0, alpha, grid.n_half, d)
        scale = 2.0 * d
    elif kind == "pair":
        blocks = kernels.line_block_sums(1, a, b, alpha, grid.n_half, d)
        scale = 2.0 * d
    elif kind == "disk":
        blocks = kernels.disk_block_sums(a, b, alpha, grid.n_half, d)
        scale = 4.0 * d * d
    else:
        blocks = kernels.square_block_sums(a, b, alpha, grid.n_half, d)
        scale = 4.0 * d * d
    # merge in block order
    weighted = math.fsum(blocks[:, 0]) * scale
    plain = math.fsum(blocks[:, 1]) * scale
    return weighted, plain


def spectral_sum(region, alpha: float, grid: SpectralGrid | None = None, correct: bool = True) -> SpectralSum:
    """Weighted grid sum approximating c1(n, alpha) * I(region)."""
    region = _as_region(region)
    n = region.dim
    if not 0.0 < alpha < n:
        raise DomainError(f"alpha must lie in (0, {n})")
    grid = grid or DEFAULT_GRIDS[n]
    raw, plain = _grid_sums(region, alpha, grid)
    vol = region.volume
    d = grid.spacing
    t0 = vol * vol * d ** alpha * _zeta(n, n - alpha)
    t1 = vol * vol * _second_moment(region) * d ** (alpha + 2.0) * _zeta(n, n - alpha - 2.0)
    corr = (-t0 + t1) if correct else 0.0
    tail_w, tail_p = _tail_bound(region, alpha, grid.lambda_max)
    value = raw + corr
    err = tail_w + (abs(t1) if correct else abs(t0))
    parseval = abs(plain / (2.0 * math.pi) ** n - vol) / vol
    flags = []
    if tail_w > TAIL_GATE * abs(value):
        flags.append("tail")
    if parseval > PARSEVAL_GATE:
        flags.append("parseval")
    return SpectralSum(value, raw, corr, err, parseval, tail_w, tuple(flags))


def parseval_check(region, grid: SpectralGrid | None = None) -> float:
    """|(2 pi)^-n sum |F|^2 cell - |region|| / |region|."""
    region = _as_region(region)
    grid = grid or DEFAULT_GRIDS[region.dim]
    _, plain = _grid_sums(region, 0.5 * region.dim, grid)
    return abs(plain / (2.0 * math.pi) ** region.dim - region.volume) / region.volume


def spectral_variance(params: KernelParams, window: Window, t: float, h: float,
                      grid: SpectralGrid | None = None, gate: float = PARSEVAL_GATE,
                      correct: bool = True) -> Estimate:
    """Increment variance from the spectral sum.

    The sum estimates c1 * I(t, h), and the variance is I / (c1 * E) with E
    the unit-window energy, so the sum is divided by c1^2 * E.
    """
    if params.kappa != 1:
        raise DomainError("the spectral route is implemented for Hermite rank 1 only")
    if params.n != window.dim:
        raise DomainError("window dimension does not match params.n")
    res = spectral_sum(shell(window, t, h), params.alpha, grid, correct)
    if res.parseval > gate:
        raise NumericalError(f"Parseval defect {res.parseval:.3%} exceeds {gate:.1%}; refine the grid")
    norm = c1(params.n, params.alpha) ** 2 * window_energy(window, params.alpha).value
    return Estimate(res.value / norm, res.error / norm, 0, "spectral", None, res.flags)


@dataclass
class VarianceCurve:
    s: np.ndarray
    h: float
    variance: np.ndarray
    stderr: np.ndarray
    method: str
    window: str
    alpha: float
    kappa: int
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.s)

    def rows(self):
        for s, v, e in zip(self.s, self.variance, self.stderr):
            yield float(s), float(v), float(e)


_METHODS = {"spectral", "mc", "monte-carlo", "exact1d", "closed-form", "quadrature", "quasi", "quasi-random"}


def variance_curve(params: KernelParams, window: Window, h: float, s_grid, method: str = "spectral",
                   grid: SpectralGrid | None = None, samples: int = 10**6, seed: int = 0,
                   gate: float = PARSEVAL_GATE) -> VarianceCurve:
    """Increment variances Var(Y(s + h) - Y(s)) along ``s_grid``.

    Monte Carlo points use the same seed for every s (common random numbers),
    which makes the curve's shape much less noisy than its level.
    """
    if method not in _METHODS:
        raise DomainError(f"unknown method {method!r}")
    s_grid = np.asarray(s_grid, dtype=np.float64)
    if np.any(s_grid < 0) or np.any(s_grid + h > 1.0 + 1e-9):
        raise DomainError("s grid must lie in [0, 1 - h]")
    vals, errs, flags = [], [], set()
    for s in s_grid:
        if method == "spectral":
            est = spectral_variance(params, window, float(s), h, grid, gate)
        else:
            m = {"mc": "monte-carlo", "exact1d": "closed-form", "quasi": "quasi-random"}.get(method, method)
            est = variance_increment(params, window, float(s), h, m, samples, seed)
        vals.append(est.value)
        errs.append(est.stderr)
        flags.update(est.flags)
    meta = {"flags": ",".join(sorted(flags))} if flags else {}
    if method == "spectral":
        g = grid or DEFAULT_GRIDS[window.dim]
        meta.update(grid_m=g.m, lambda_max=g.lambda_max)
    return VarianceCurve(s_grid, float(h), np.array(vals), np.array(errs), method, window.name,
                         params.alpha, params.kappa, seed if method not in ("spectral", "exact1d") else None, meta)
