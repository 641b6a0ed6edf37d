"""Riesz energies of windows and shells.

I(t, h) is the double integral of |x - y|^-gamma over the shell squared and
M(t, h) = I / |shell|^2 is the mean over independent uniform pairs.
Monte Carlo estimates are assembled from 32 blocks, each with its own
substream, so a run is reproducible bit-for-bit whatever the thread count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special
from scipy.stats import qmc

from . import kernels
from ._rng import derive_seed, run_blocks, split_counts, substream
from .analysis import KernelParams, ball_volume, c1, sphere_area
from .errors import DomainError
from .geometry import CHUNK, ShellRegion, Window, shell

__all__ = [
    "Estimate",
    "ScalingFit",
    "BoundReport",
    "mean_riesz",
    "riesz_energy",
    "riesz_1d_exact",
    "window_energy",
    "shell_energy_quad",
    "variance_increment",
    "scaling_exponent",
    "bound_check",
    "N_BLOCKS",
    "QMC_SHIFTS",
]

N_BLOCKS = 32
QMC_SHIFTS = 16
_MOM_SCALE = math.sqrt(math.pi / 2.0)  # sd of the median of normal means, relative


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float = 0.0
    samples: int = 0
    method: str = "closed-form"
    seed: int | None = None
    flags: tuple = field(default=())

    def scaled(self, factor: float) -> "Estimate":
        return Estimate(self.value * factor, self.stderr * abs(factor), self.samples,
                        self.method, self.seed, self.flags)


def _check_exponent(gamma: float, n: int):
    if not 0.0 < gamma < n:
        raise DomainError(f"Riesz exponent must lie in (0, {n}); got {gamma:g}")


def heavy_tailed(gamma: float, n: int) -> bool:
    """True when the kernel has no finite second moment under uniform pairs."""
    return 2.0 * gamma >= n


# --------------------------------------------------------------------------
# block Monte Carlo engine
# --------------------------------------------------------------------------

def block_stats(fn, samples: int, seed: int, n_blocks: int = N_BLOCKS):
    """Run ``fn(rng, k) -> array (n_out, k)`` over blocks.

    Returns per-block counts, sums and sums of squares, shape (B,) and (B, n_out).
    """
    if samples < 1:
        raise DomainError("samples must be positive")
    n_blocks = min(n_blocks, samples)
    counts = split_counts(samples, n_blocks)

    def one(b):
        rng = substream(seed, b)
        s = s2 = 0.0
        left = counts[b]
        while left > 0:
            k = min(CHUNK, left)
            v = np.atleast_2d(fn(rng, k))
            s = s + v.sum(axis=1)
            s2 = s2 + (v * v).sum(axis=1)
            left -= k
        return s, s2

    res = run_blocks(one, n_blocks)
    sums = np.array([r[0] for r in res])
    sumsq = np.array([r[1] for r in res])
    return np.array(counts, dtype=np.float64), sums, sumsq


def summarize(counts, sums, sumsq, heavy: bool):
    """Point estimates and standard errors per output column.

    Plain mean with sd/sqrt(N) when the kernel has finite variance; median of
    the block means with a block-spread standard error otherwise.
    """
    total = counts.sum()
    mean = sums.sum(axis=0) / total
    if not heavy:
        var = (sumsq.sum(axis=0) - total * mean * mean) / max(total - 1.0, 1.0)
        return mean, np.sqrt(np.maximum(var, 0.0) / total)
    bm = sums / counts[:, None]
    if len(counts) < 2:
        return mean, np.full_like(mean, np.inf)
    return np.median(bm, axis=0), _MOM_SCALE * bm.std(axis=0, ddof=1) / math.sqrt(len(counts))


def _pair_draw(window: Window, rng, k):
    yx = window.cone_sample(rng, k)
    ux = rng.random(k)
    yy = window.cone_sample(rng, k)
    uy = rng.random(k)
    return yx, ux, yy, uy


def _mc_mean(region: ShellRegion, gamma: float, samples: int, seed: int) -> Estimate:
    w, t, h = region.window, region.t, region.h

    def fn(rng, k):
        yx, ux, yy, uy = _pair_draw(w, rng, k)
        return kernels.shell_pair_powers(yx, ux, t, h, yy, uy, t, h, gamma)

    counts, sums, sumsq = block_stats(fn, samples, seed)
    value, se = summarize(counts, sums, sumsq, heavy_tailed(gamma, w.dim))
    return Estimate(float(value[0]), float(se[0]), samples, "monte-carlo", seed)


def qmc_points(dims: int, samples: int) -> np.ndarray:
    m = max(1, math.ceil(math.log2(max(samples / QMC_SHIFTS, 2))))
    return qmc.Sobol(dims, scramble=False).random_base2(m)


def _qmc_mean(region: ShellRegion, gamma: float, samples: int, seed: int) -> Estimate:
    k = region.window.cone_dims
    if k is None:
        raise DomainError(f"quasi-random sampling is not available for {region.window.name}")
    d = k + 1
    base = qmc_points(2 * d, samples)
    means = []
    for r in range(QMC_SHIFTS):
        u = (base + substream(seed, r).random(2 * d)) % 1.0
        x = region.from_uniforms(u[:, :d])
        y = region.from_uniforms(u[:, d:])
        s, _ = kernels.pair_power_sums(x, y, gamma)
        means.append(s / len(u))
    means = np.array(means)
    return Estimate(float(means.mean()), float(means.std(ddof=1) / math.sqrt(QMC_SHIFTS)),
                    len(base) * QMC_SHIFTS, "quasi-random", seed)


def mean_riesz(region: ShellRegion, exponent: float, samples: int = 10**6, seed: int = 0,
               method: str = "monte-carlo") -> Estimate:
    """Mean of |U - V|^-exponent for independent uniform U, V on the region."""
    _check_exponent(exponent, region.dim)
    if method == "monte-carlo":
        return _mc_mean(region, exponent, int(samples), seed)
    if method == "quasi-random":
        return _qmc_mean(region, exponent, int(samples), seed)
    if method in ("closed-form", "quadrature", "auto"):
        return riesz_energy(region, exponent, samples, seed, method).scaled(region.volume ** -2)
    raise DomainError(f"unknown method {method!r}")


# --------------------------------------------------------------------------
# deterministic energies
# --------------------------------------------------------------------------

def riesz_1d_exact(t: float, h: float, alpha: float) -> float:
    """Energy of a segment of length h; independent of its position t."""
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    if h <= 0:
        raise DomainError("h must be positive")
    return 2.0 * h ** (2.0 - alpha) / ((1.0 - alpha) * (2.0 - alpha))


def _segment_cross(a, b, c, d, gamma):
    """Double integral of |x - y|^-gamma over [a,b] x [c,d]."""
    g = lambda u: abs(u) ** (2.0 - gamma) / ((1.0 - gamma) * (2.0 - gamma))
    return g(b - c) + g(a - d) - g(a - c) - g(b - d)


def _segments(window: Window, t: float, h: float):
    """The 1D shell as segments: rho*[lo, hi] minus rho_in*[lo, hi]."""
    lo, hi = float(window.bbox()[0][0]), float(window.bbox()[1][0])
    r_in, r_out = t, t + h
    segs = [(r_out * lo, r_in * lo), (r_in * hi, r_out * hi)]
    return [(a, b) for a, b in segs if b > a]


def _ball_energy(n: int, gamma: float) -> float:
    """Energy of the unit n-ball via its set covariogram."""
    p = 0.5 * (n + 1)
    scale = 2.0 * ball_volume(n - 1) * 0.5 * special.beta(0.5, p) if n > 1 else 2.0

    def cov(d):
        if n == 1:
            return max(2.0 - d, 0.0)
        return scale * special.betaincc(0.5, p, min(d * d / 4.0, 1.0))

    val, _ = integrate.quad(cov, 0.0, 2.0, weight="alg", wvar=(n - 1 - gamma, 0.0), epsabs=0, epsrel=1e-12)
    return sphere_area(n) * val


def _disk_cov(r, d):
    if d >= 2.0 * r:
        return 0.0
    return 2.0 * r * r * math.acos(d / (2.0 * r)) - 0.5 * d * math.sqrt(4.0 * r * r - d * d)


def _lens(r1, r2, d):
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r2 - r1):
        return math.pi * min(r1, r2) ** 2
    a1 = math.acos(max(-1.0, min(1.0, (d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1))))
    a2 = math.acos(max(-1.0, min(1.0, (d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2))))
    k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)
    return r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * math.sqrt(max(k, 0.0))


def _annulus_energy(r1: float, r2: float, gamma: float) -> float:
    def cov(d):
        return _disk_cov(r2, d) - 2.0 * _lens(r1, r2, d) + _disk_cov(r1, d)

    pts = sorted({p for p in (r2 - r1, 2.0 * r1, r1 + r2) if 0.0 < p < 2.0 * r2})
    edges = [0.0] + pts + [2.0 * r2]
    total, _ = integrate.quad(cov, edges[0], edges[1], weight="alg", wvar=(1.0 - gamma, 0.0),
                              epsabs=0, epsrel=1e-11, limit=200)
    for a, b in zip(edges[1:-1], edges[2:]):
        val, _ = integrate.quad(lambda d: d ** (1.0 - gamma) * cov(d), a, b, epsabs=0, epsrel=1e-10, limit=200)
        total += val
    return 2.0 * math.pi * total


def _overlap_pieces(a, b):
    """|[-a,a] n [-b,b]+u| for u >= 0 as pieces (u0, u1, const, slope); a <= b."""
    return [(0.0, b - a, 2.0 * a, 0.0), (b - a, a + b, a + b, -1.0)]


def _piece_value(pieces, u):
    for u0, u1, c, s in pieces:
        if u0 <= u <= u1:
            return c, s
    return 0.0, 0.0


def _square_ray(terms, s, gamma, rho_max):
    """Integral over rho in [0, rho_max] of rho^(1-gamma) g(rho*s, rho)."""
    bps = {0.0, rho_max}
    for _, a, b in terms:
        for p in (b - a, a + b):
            for q in (p, p / s if s > 0 else np.inf):
                if 0.0 < q < rho_max:
                    bps.add(q)
    edges = sorted(bps)
    e = 2.0 - gamma
    total = 0.0
    for r0, r1 in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (r0 + r1)
        c = np.zeros(3)
        for wgt, a, b in terms:
            pieces = _overlap_pieces(a, b)
            c1_, s1_ = _piece_value(pieces, mid * s)
            c2_, s2_ = _piece_value(pieces, mid)
            # (c1 + s1*s*rho) * (c2 + s2*rho)
            c += wgt * np.array([c1_ * c2_, c1_ * s2_ + s1_ * s * c2_, s1_ * s * s2_])
        for k in range(3):
            if c[k]:
                total += c[k] * (r1 ** (k + e) - r0 ** (k + e)) / (k + e)
    return total


def _gauss_pieces(edges, nodes=24):
    x, w = np.polynomial.legendre.leggauss(nodes)
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            yield 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def _square_energy(terms, gamma: float, rho_max: float) -> float:
    """Energy from a covariogram that is a signed sum of square overlaps."""
    kinks = {0.0, 1.0}
    vals = sorted({p for _, a, b in terms for p in (b - a, a + b) if p > 0})
    for p in vals:
        for q in vals:
            if 0.0 < p / q < 1.0:
                kinks.add(p / q)
    total = 0.0
    for s_nodes, s_w in _gauss_pieces(sorted(kinks)):
        for s, wt in zip(s_nodes, s_w):
            norm = math.hypot(s, 1.0)
            total += wt * norm ** (-gamma) * _square_ray(terms, s, gamma, rho_max)
    # four quadrants, two faces each
    return 8.0 * total


def _cube_energy(n: int, gamma: float) -> float:
    """Energy of [-1,1]^n for n = 2, 3 by the face parametrisation."""
    if n == 2:
        return _square_energy([(1.0, 1.0, 1.0)], gamma, 2.0)
    x, w = np.polynomial.legendre.leggauss(40)
    s = 0.5 * (x + 1.0)
    ws = 0.5 * w
    total = 0.0
    for i, si in enumerate(s):
        for j, sj in enumerate(s):
            z = (si, sj, 1.0)
            poly = np.poly1d([1.0])
            for zi in z:
                poly = poly * np.poly1d([-zi, 2.0])
            coef = poly.coeffs[::-1]  # ascending in rho
            inner = sum(ck * 2.0 ** (k + n - gamma) / (k + n - gamma) for k, ck in enumerate(coef))
            total += ws[i] * ws[j] * math.sqrt(si * si + sj * sj + 1.0) ** (-gamma) * inner
    return 2.0 ** n * n * total


def window_energy(window: Window, gamma: float) -> Estimate:
    """Riesz energy of the unit window D = Delta(1)."""
    _check_exponent(gamma, window.dim)
    if window.dim == 1:
        segs = _segments(window, 0.0, 1.0)
        val = sum(_segment_cross(a, b, c, d, gamma) for a, b in segs for c, d in segs)
        return Estimate(val, 0.0, 0, "closed-form")
    if window.kind == "ball":
        return Estimate(_ball_energy(window.dim, gamma), 0.0, 0, "quadrature")
    return Estimate(_cube_energy(window.dim, gamma), 0.0, 0, "quadrature")


def shell_energy_quad(region: ShellRegion, gamma: float) -> Estimate:
    """Deterministic shell energy where a covariogram route exists."""
    w, t, h, n = region.window, region.t, region.h, region.dim
    _check_exponent(gamma, n)
    if n == 1:
        segs = _segments(w, t, h)
        val = sum(_segment_cross(a, b, c, d, gamma) for a, b in segs for c, d in segs)
        return Estimate(val, 0.0, 0, "closed-form")
    if t == 0.0:
        # exact self-similarity of the full window
        return window_energy(w, gamma).scaled(h ** (2.0 - gamma / n))
    if w.kind == "ball" and n == 2 and not w.center:
        return Estimate(_annulus_energy(region.inner, region.outer, gamma), 0.0, 0, "quadrature")
    if w.kind == "cube" and n == 2:
        a1, a2 = region.inner, region.outer
        terms = [(1.0, a2, a2), (-2.0, a1, a2), (1.0, a1, a1)]
        return Estimate(_square_energy(terms, gamma, 2.0 * a2), 0.0, 0, "quadrature")
    raise DomainError(f"no quadrature route for shells of {w.name}; use monte-carlo")


def has_quadrature(region: ShellRegion) -> bool:
    w = region.window
    return (region.dim == 1 or region.t == 0.0
            or (w.dim == 2 and (w.kind == "cube" or (w.kind == "ball" and not w.center))))


def riesz_energy(region: ShellRegion, exponent: float, samples: int = 10**6, seed: int = 0,
                 method: str = "monte-carlo") -> Estimate:
    """I(t, h) = |shell|^2 * mean_riesz."""
    _check_exponent(exponent, region.dim)
    if method == "auto":
        method = "quadrature" if has_quadrature(region) else "monte-carlo"
    if method in ("closed-form", "quadrature"):
        if method == "closed-form" and region.dim != 1:
            raise DomainError("closed form exists only in one dimension")
        return shell_energy_quad(region, exponent)
    return mean_riesz(region, exponent, samples, seed, method).scaled(region.volume ** 2)


# --------------------------------------------------------------------------
# variances, scaling, bounds
# --------------------------------------------------------------------------

def variance_increment(params: KernelParams, window: Window, t: float, h: float,
                       method: str = "monte-carlo", samples: int = 10**6, seed: int = 0) -> Estimate:
    """Var(Y(t+h) - Y(t)) = I(t, h) / (c1^kappa * energy of the unit window)."""
    if params.n != window.dim:
        raise DomainError("window dimension does not match params.n")
    if method == "exact1d":
        method = "closed-form"
    region = shell(window, t, h)
    energy = riesz_energy(region, params.exponent, samples, seed, method)
    norm = c1(params.n, params.alpha) ** params.kappa * window_energy(window, params.exponent).value
    est = energy.scaled(1.0 / norm)
    if t + h > 1.0 + 1e-12:
        est = Estimate(est.value, est.stderr, est.samples, est.method, est.seed, est.flags + ("beyond-domain",))
    return est


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    stderr: float
    expected: float
    h: tuple
    energies: tuple


def scaling_exponent(window: Window, exponent: float, h_grid, samples: int = 10**6, seed: int = 0,
                     method: str = "auto") -> ScalingFit:
    """Weighted least-squares slope of log I(0, h) against log h.

    Each h uses an independent derived seed so the fit is a genuine test;
    with a shared seed the identity would hold to rounding.
    """
    h = np.asarray(sorted(h_grid), dtype=np.float64)
    if len(h) < 4 or np.any(h <= 0) or h[-1] / h[0] < 10.0 * (1 - 1e-12):
        raise DomainError("need at least 4 positive h values spanning a decade")
    n = window.dim
    if method == "auto":
        method = "closed-form" if n == 1 else "monte-carlo"
    ests = [riesz_energy(shell(window, 0.0, hi), exponent, samples, derive_seed(seed, i), method)
            for i, hi in enumerate(h)]
    y = np.log([e.value for e in ests])
    rel = np.array([e.stderr / e.value for e in ests])
    x = np.log(h)
    if np.all(rel == 0):
        wts = np.ones_like(x)
    else:
        wts = 1.0 / np.maximum(rel, 1e-300) ** 2
    xm = np.sum(wts * x) / wts.sum()
    ym = np.sum(wts * y) / wts.sum()
    sxx = np.sum(wts * (x - xm) ** 2)
    slope = float(np.sum(wts * (x - xm) * (y - ym)) / sxx)
    se = 0.0 if np.all(rel == 0) else float(1.0 / math.sqrt(sxx))
    return ScalingFit(slope, se, 2.0 - exponent / n, tuple(h), tuple(ests))


@dataclass(frozen=True)
class BoundReport:
    lower_ok: bool
    upper_ok: bool
    lower_value: Estimate
    lower_bound: float
    upper_value: Estimate
    upper_bound: float
    epsilon: float
    preasymptotic: bool

    @property
    def lower_margin(self) -> float:
        return self.lower_value.value / self.lower_bound - 1.0

    @property
    def upper_margin(self) -> float:
        return 1.0 - self.upper_value.value / self.upper_bound


def lower_bound_constant(window: Window, gamma: float) -> float:
    """Interior-ball constant: the energy of a quarter of the inscribed ball's pairs."""
    n = window.dim
    r = window.inradius
    return 2.0 ** -n * ball_volume(n) * r ** n * sphere_area(n) * r ** (n - gamma) / (n - gamma)


def bound_check(window: Window, params: KernelParams, h: float, t_large: float = 100.0,
                samples: int = 10**6, seed: int = 0, epsilon: float | None = None,
                tol: float = 0.05) -> BoundReport:
    """Compare I(0, h) with C h^(2 - g/n) and I(t_large, h) with |D|^2 h^(2 - g/n + eps)."""
    n, g = window.dim, params.exponent
    if epsilon is None:
        epsilon = g / (2.0 * n)
    if not 0.0 < epsilon < g / n:
        raise DomainError("epsilon must lie in (0, kappa*alpha/n)")
    if h <= 0 or t_large <= 0:
        raise DomainError("h and t_large must be positive")
    p = 2.0 - g / n
    low = riesz_energy(shell(window, 0.0, h), g, samples, derive_seed(seed, 0), "auto")
    low_bound = lower_bound_constant(window, g) * h ** p
    up = riesz_energy(shell(window, t_large, h), g, samples, derive_seed(seed, 1), "auto")
    up_bound = window.unit_volume ** 2 * h ** (p + epsilon) * (1.0 + tol)
    return BoundReport(
        lower_ok=bool(low.value - 3.0 * low.stderr >= low_bound),
        upper_ok=bool(up.value + 3.0 * up.stderr <= up_bound),
        lower_value=low,
        lower_bound=low_bound,
        upper_value=up,
        upper_bound=up_bound,
        epsilon=epsilon,
        preasymptotic=t_large < 10.0,
    )
