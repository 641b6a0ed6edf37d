"""Derivative of M(t, h) = E |U - V|^-gamma in t, from boundary averages.

Growing the shell parameter t moves both shell boundaries outward. With a
normal speed that integrates to w = |Delta(1)| on either boundary, and two
kernel arguments that both move,

    dM/dt = 2 (w / V) (m_plus - m_minus),    V = h * w,

where m_plus (m_minus) is the mean of |Y - X|^-gamma for X uniform on the
shell and Y drawn on the outer (inner) boundary with density proportional
to the normal speed. For homotheties that density is the cone measure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import kernels
from ._rng import derive_seed
from .errors import DomainError
from .geometry import Window, shell
from .riesz import Estimate, block_stats, heavy_tailed, mean_riesz, summarize

__all__ = [
    "CroftonReport",
    "OriginLimitReport",
    "boundary_conditioned_mean",
    "boundary_means",
    "crofton_rhs",
    "crofton_residual",
    "origin_limit_check",
    "limit_references",
]


def _check(window: Window, t: float, h: float, gamma: float):
    if h <= 0:
        raise DomainError("h must be positive")
    if t < 0:
        raise DomainError("t must be nonnegative")
    if not 0.0 < gamma < window.dim:
        raise DomainError(f"exponent must lie in (0, {window.dim})")


def boundary_means(window: Window, t: float, h: float, exponent: float, samples: int = 10**6,
                   seed: int = 0):
    """(m_plus, m_minus, rhs) from one common set of draws."""
    _check(window, t, h, exponent)
    if t <= 0:
        raise DomainError("the inner boundary is degenerate at t = 0")
    w = window
    scale = 2.0 / h  # 2 w / V

    def fn(rng, k):
        yx = w.cone_sample(rng, k)
        ux = rng.random(k)
        yb = w.cone_sample(rng, k)
        zero = np.zeros(k)
        k_out = kernels.shell_pair_powers(yx, ux, t, h, yb, zero, t + h, 0.0, exponent)
        k_in = kernels.shell_pair_powers(yx, ux, t, h, yb, zero, t, 0.0, exponent)
        return np.vstack((k_out, k_in, scale * (k_out - k_in)))

    counts, sums, sumsq = block_stats(fn, samples, seed)
    val, se = summarize(counts, sums, sumsq, heavy_tailed(exponent, w.dim))
    return tuple(Estimate(float(v), float(e), samples, "monte-carlo", seed) for v, e in zip(val, se))


def boundary_conditioned_mean(window: Window, t: float, h: float, which: str, exponent: float,
                              samples: int = 10**6, seed: int = 0) -> Estimate:
    """Mean of |Y - X|^-exponent, X uniform on the shell, Y on the chosen boundary."""
    if which not in ("outer", "inner"):
        raise DomainError("which must be 'outer' or 'inner'")
    if which == "inner" and t <= 0:
        raise DomainError("no inner boundary at t = 0")
    if which == "outer" and t == 0:
        _check(window, t, h, exponent)
        w = window

        def fn(rng, k):
            yx = w.cone_sample(rng, k)
            ux = rng.random(k)
            yb = w.cone_sample(rng, k)
            return kernels.shell_pair_powers(yx, ux, 0.0, h, yb, np.zeros(k), h, 0.0, exponent)

        counts, sums, sumsq = block_stats(fn, samples, seed)
        val, se = summarize(counts, sums, sumsq, heavy_tailed(exponent, w.dim))
        return Estimate(float(val[0]), float(se[0]), samples, "monte-carlo", seed)
    m_plus, m_minus, _ = boundary_means(window, t, h, exponent, samples, seed)
    return m_plus if which == "outer" else m_minus


def crofton_rhs(window: Window, t: float, h: float, exponent: float, samples: int = 10**6,
                seed: int = 0) -> Estimate:
    """2 (w / V) (m_plus - m_minus); common draws for both boundaries."""
    return boundary_means(window, t, h, exponent, samples, seed)[2]


@dataclass(frozen=True)
class CroftonReport:
    t: float
    h: float
    exponent: float
    m_value: Estimate
    m_plus: Estimate
    m_minus: Estimate
    fd_derivative: Estimate
    fd_step: float
    bias: float
    rhs: Estimate

    @property
    def residual(self) -> float:
        return abs(self.fd_derivative.value - self.rhs.value)

    @property
    def combined_stderr(self) -> float:
        return math.hypot(self.fd_derivative.stderr, self.rhs.stderr)

    @property
    def passed(self) -> bool:
        return self.residual <= 3.0 * self.combined_stderr + self.bias


def _fd(window: Window, t: float, h: float, gamma: float, step: float, samples: int, seed: int):
    """Central differences at steps `step` and `step/2` with common draws."""
    w = window
    ts = (t + step, t - step, t + 0.5 * step, t - 0.5 * step)

    def fn(rng, k):
        yx = w.cone_sample(rng, k)
        ux = rng.random(k)
        yy = w.cone_sample(rng, k)
        uy = rng.random(k)
        kv = [kernels.shell_pair_powers(yx, ux, s, h, yy, uy, s, h, gamma) for s in ts]
        full = (kv[0] - kv[1]) / (2.0 * step)
        half = (kv[2] - kv[3]) / step
        return np.vstack((full, half, full - half))

    counts, sums, sumsq = block_stats(fn, samples, seed)
    val, se = summarize(counts, sums, sumsq, heavy_tailed(gamma, w.dim))
    return val, se


def crofton_residual(window: Window, t: float, h: float, exponent: float, fd_step: float | None = None,
                     samples: int = 10**6, seed: int = 0) -> CroftonReport:
    """Compare a common-random-number central difference of M in t with the boundary formula."""
    _check(window, t, h, exponent)
    step = min(0.01, t / 4.0) if fd_step is None else float(fd_step)
    if not t > step > 0:
        raise DomainError("need t > fd_step > 0")
    m_value = mean_riesz(shell(window, t, h), exponent, samples, seed)
    val, se = _fd(window, t, h, exponent, step, samples, derive_seed(seed, 1))
    fd = Estimate(float(val[0]), float(se[0]), samples, "monte-carlo", seed)
    # Richardson: the O(step^2) error of the full step is 4/3 of the gap to the half step
    bias = 4.0 / 3.0 * abs(float(val[2]))
    m_plus, m_minus, rhs = boundary_means(window, t, h, exponent, samples, derive_seed(seed, 2))
    return CroftonReport(t, h, exponent, m_value, m_plus, m_minus, fd, step, bias, rhs)


# --------------------------------------------------------------------------
# t -> 0 limits
# --------------------------------------------------------------------------

def _radial(window: Window, theta: float) -> float:
    u = np.array([[math.cos(theta), math.sin(theta)]])
    return 1.0 / float(window.gauge(u)[0])


def _exit_distance(window: Window, y: np.ndarray, u: np.ndarray) -> float:
    """Distance from y (in D) to the boundary of D along the unit direction u."""
    if window.kind == "cube":
        best = math.inf
        for yi, ui in zip(y, u):
            if ui > 1e-15:
                best = min(best, (1.0 - yi) / ui)
            elif ui < -1e-15:
                best = min(best, (-1.0 - yi) / ui)
        return max(best, 0.0)
    p = y + window.offset
    b = float(p @ u)
    disc = b * b - (float(p @ p) - 1.0)
    return max(-b + math.sqrt(max(disc, 0.0)), 0.0)


def _boundary_potential(window: Window, y: np.ndarray, gamma: float) -> float:
    """(1/|D|) * integral over D of |x - y|^-gamma for a boundary point y."""
    nrm = window.normal(y[None, :])[0]
    base = math.atan2(-nrm[1], -nrm[0])  # inward normal
    kinks = []
    if window.kind == "cube":
        # directions towards the corners
        for cx in (-1.0, 1.0):
            for cy in (-1.0, 1.0):
                d = np.array([cx, cy]) - y
                if np.linalg.norm(d) > 1e-12:
                    ang = (math.atan2(d[1], d[0]) - base + math.pi) % (2 * math.pi) - math.pi
                    if -0.5 * math.pi < ang < 0.5 * math.pi:
                        kinks.append(ang)

    def f(a):
        th = base + a
        r = _exit_distance(window, y, np.array([math.cos(th), math.sin(th)]))
        return r ** (2.0 - gamma) / (2.0 - gamma)

    val, _ = integrate.quad(f, -0.5 * math.pi, 0.5 * math.pi, points=sorted(kinks) or None,
                            epsabs=0, epsrel=1e-10, limit=200)
    return val / window.unit_volume


def limit_references(window: Window, h: float, exponent: float):
    """Quadrature values of lim_{t->0} m_plus and m_minus for planar windows."""
    if window.dim != 2:
        raise DomainError("limit references are implemented for planar windows")
    g = exponent
    scale = h ** (-g / 2.0)
    kinks = [k * math.pi / 4.0 for k in range(1, 8, 2)] if window.kind == "cube" else None
    rad, _ = integrate.quad(lambda th: _radial(window, th) ** (2.0 - g) / (2.0 - g), 0.0, 2.0 * math.pi,
                            points=kinks, epsabs=0, epsrel=1e-11, limit=200)
    m_minus = scale * rad / window.unit_volume
    if window.kind == "ball":
        # the potential of a disk is the same at every boundary point
        m_plus = scale * _boundary_potential(window, np.array([1.0, 0.0]) - window.offset, g)
    else:
        # cone measure on the square: uniform along the perimeter; one edge by symmetry
        val, _ = integrate.quad(lambda s: _boundary_potential(window, np.array([1.0, s]), g), -1.0, 1.0,
                                epsabs=0, epsrel=1e-9, limit=200)
        m_plus = scale * val / 2.0
    return m_plus, m_minus


@dataclass(frozen=True)
class OriginLimitReport:
    h: float
    t_grid: tuple
    m_plus: tuple
    m_minus: tuple
    derivative: tuple
    m_plus_limit: Estimate
    m_minus_limit: Estimate
    derivative_limit: Estimate
    m_plus_ref: float
    m_minus_ref: float
    flags: tuple = field(default=())

    @property
    def derivative_ref(self) -> float:
        return 2.0 / self.h * (self.m_plus_ref - self.m_minus_ref)

    @property
    def negative(self) -> bool:
        return self.derivative_limit.value + 3.0 * self.derivative_limit.stderr < 0.0

    @property
    def ratio(self) -> float:
        return self.m_plus_limit.value / self.m_minus_limit.value


def _extrapolate(ts, ests):
    """Intercept of a weighted linear fit in sqrt(t); returns (Estimate, chi2)."""
    x = np.sqrt(np.asarray(ts))
    y = np.array([e.value for e in ests])
    s = np.array([max(e.stderr, 1e-300) for e in ests])
    a = np.column_stack((np.ones_like(x), x)) / s[:, None]
    coef, *_ = np.linalg.lstsq(a, y / s, rcond=None)
    cov = np.linalg.inv(a.T @ a)
    chi2 = float(np.sum(((a @ coef) - y / s) ** 2))
    return Estimate(float(coef[0]), float(math.sqrt(cov[0, 0])), sum(e.samples for e in ests),
                    "extrapolated", ests[0].seed), chi2


def origin_limit_check(window: Window, h: float, exponent: float,
                       t_grid=(0.0032, 0.0016, 0.0008, 0.0004, 0.0002), samples: int = 10**6,
                       seed: int = 0) -> OriginLimitReport:
    """Boundary averages as t -> 0, extrapolated linearly in sqrt(t) from the three smallest t."""
    ts = sorted(float(t) for t in t_grid)
    if len(ts) < 3 or ts[0] <= 0:
        raise DomainError("need at least three positive t values")
    rows = [boundary_means(window, t, h, exponent, samples, derive_seed(seed, i)) for i, t in enumerate(ts)]
    mp = [r[0] for r in rows]
    mm = [r[1] for r in rows]
    dv = [r[2] for r in rows]
    flags = []
    lims = []
    for series in (mp, mm, dv):
        est, chi2 = _extrapolate(ts[:3], series[:3])
        if chi2 > 9.0:
            flags.append("non-linear")
        lims.append(est)
    try:
        ref_p, ref_m = limit_references(window, h, exponent)
    except DomainError:
        ref_p = ref_m = float("nan")
    return OriginLimitReport(h, tuple(ts), tuple(mp), tuple(mm), tuple(dv), lims[0], lims[1], lims[2],
                             ref_p, ref_m, tuple(sorted(set(flags))))
