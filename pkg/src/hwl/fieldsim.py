"""Desk-scale simulation of long-range dependent fields and their window functionals.

Fields are stationary Gaussian with covariance (1 + r^2)^(-alpha/2), sampled
exactly by circulant embedding on a torus of twice the grid side. One FFT of
complex white noise yields two independent realisations (real and imaginary
parts). Each realisation carries one copy of the observation window, centred
on the grid, so replicates are independent.
"""
from __future__ import annotations

import functools
import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from ._rng import get_threads, substream
from .analysis import CovarianceModel, KernelParams, covariance, hermite_poly, c1
from .errors import DomainError, NumericalError
from .geometry import Window
from .riesz import window_energy
from .spectral import VarianceCurve

__all__ = [
    "FieldSpec",
    "FunctionalSample",
    "WindowIndex",
    "simulate_field",
    "iter_fields",
    "embedding_eigenvalues",
    "empirical_functional",
    "empirical_covariance",
    "empirical_variance_curve",
    "trend_slope",
    "dump_field",
    "load_field",
]

MAGIC = b"LRDF"
VERSION = 1
_HEADER = struct.Struct("<4sIQdd")  # 32 bytes
_MAX_GROWTH = 8


@dataclass(frozen=True)
class FieldSpec:
    grid_side: int = 1024
    spacing: float = 1.0
    model: CovarianceModel = field(default_factory=lambda: CovarianceModel("cauchy", 1.0, n=2))
    seed: int = 0
    replicates: int = 200
    dim: int = 2

    def __post_init__(self):
        if self.grid_side < 2 or self.spacing <= 0 or self.replicates < 1:
            raise DomainError("grid_side >= 2, spacing > 0 and replicates >= 1 are required")
        if self.dim not in (1, 2):
            raise DomainError("fields are simulated in one or two dimensions")
        if self.model.family != "cauchy":
            raise DomainError("only the Cauchy family is simulated (finite variance at 0)")
        if self.model.n != self.dim:
            raise DomainError("covariance model dimension does not match the field")


@functools.lru_cache(maxsize=8)
def _eigen(grid_side: int, spacing: float, alpha: float, dim: int):
    model = CovarianceModel("cauchy", alpha, n=dim)
    m = 2 * grid_side
    while True:
        k = np.arange(m)
        lag = np.minimum(k, m - k) * spacing
        if dim == 1:
            c = covariance(model, lag)
        else:
            c = covariance(model, np.hypot(lag[:, None], lag[None, :]))
        lam = np.real(sfft.fftn(c))
        lo, hi = lam.min(), lam.max()
        if lo >= -1e-8 * hi:
            return m, np.sqrt(np.maximum(lam, 0.0) / lam.size)
        if m >= _MAX_GROWTH * grid_side:
            raise NumericalError(
                f"circulant embedding not nonnegative definite (min eigenvalue {lo:.3e}, max {hi:.3e}) "
                f"up to torus side {m}"
            )
        m *= 2


def embedding_eigenvalues(spec: FieldSpec):
    """Torus side and scaled square-root eigenvalues of the embedding."""
    return _eigen(spec.grid_side, float(spec.spacing), float(spec.model.alpha), spec.dim)


def _pair(spec: FieldSpec, index: int):
    m, root = embedding_eigenvalues(spec)
    rng = substream(spec.seed, index)
    shape = root.shape
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    w = sfft.fftn(root * z, workers=get_threads())
    cut = (slice(0, spec.grid_side),) * spec.dim
    return np.ascontiguousarray(w.real[cut]), np.ascontiguousarray(w.imag[cut])


def simulate_field(spec: FieldSpec, replicate: int = 0) -> np.ndarray:
    """Realisation number ``replicate`` (0-based) of the field on the grid."""
    if not 0 <= replicate:
        raise DomainError("replicate index must be nonnegative")
    re, im = _pair(spec, replicate // 2)
    return re if replicate % 2 == 0 else im


def iter_fields(spec: FieldSpec):
    """Yield spec.replicates independent realisations in order."""
    for p in range((spec.replicates + 1) // 2):
        re, im = _pair(spec, p)
        yield re
        if 2 * p + 1 < spec.replicates:
            yield im


# --------------------------------------------------------------------------
# window functionals
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FunctionalSample:
    r: float
    t_grid: np.ndarray
    values: np.ndarray  # (replicates, len(t_grid))


class WindowIndex:
    """Grid nodes of the physical window r * D, sorted by the t at which they enter.

    A node x (relative to the homothety centre) lies in Delta(r t^(1/n)) iff
    gauge(x / r)^n <= t.
    """

    def __init__(self, window: Window, grid_side: int, spacing: float, r: float):
        n = window.dim
        if r <= 0:
            raise DomainError("r must be positive")
        lo, hi = window.bbox()
        mid = 0.5 * (lo + hi) * r
        centre = (grid_side - 1) * spacing / 2.0 - mid  # homothety centre, physical coordinates
        first = np.floor((centre + r * lo) / spacing).astype(int)
        last = np.ceil((centre + r * hi) / spacing).astype(int)
        if np.any(first < 0) or np.any(last > grid_side - 1):
            raise DomainError(f"window of scale r={r:g} does not fit in a grid of side {grid_side}")
        axes = [np.arange(a, b + 1) for a, b in zip(first, last)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([g.ravel() * spacing for g in mesh]) - centre
        tau = window.gauge(pts / r) ** n
        inside = tau <= 1.0
        order = np.argsort(tau[inside], kind="stable")
        self.tau = tau[inside][order]
        flat = np.ravel_multi_index(tuple(g.ravel()[inside][order] for g in mesh), (grid_side,) * n)
        self.flat = flat
        self.cell = spacing ** n
        self.window = window
        self.r = r

    def cumulative(self, values_flat: np.ndarray, t_grid) -> np.ndarray:
        cs = np.concatenate(([0.0], np.cumsum(values_flat[self.flat])))
        idx = np.searchsorted(self.tau, np.asarray(t_grid, dtype=np.float64), side="right")
        return cs[idx] * self.cell


def _normaliser(window: Window, params: KernelParams, r: float) -> float:
    c2 = c1(params.n, params.alpha) ** params.kappa * math.factorial(params.kappa) \
        * window_energy(window, params.exponent).value
    return r ** (params.n - params.exponent / 2.0) * math.sqrt(c2)


def empirical_functional(fields, window: Window, params: KernelParams, r: float, t_grid,
                         spacing: float = 1.0) -> FunctionalSample:
    """Normalised window integrals of H_kappa(field) for each realisation.

    ``fields`` is one realisation or an iterable of them.
    """
    if isinstance(fields, np.ndarray) and fields.ndim == window.dim:
        fields = [fields]
    t_grid = np.asarray(t_grid, dtype=np.float64)
    if np.any(t_grid < 0) or np.any(t_grid > 1.0 + 1e-12):
        raise DomainError("t values must lie in [0, 1]")
    index = None
    norm = _normaliser(window, params, r)
    rows = []
    for f in fields:
        f = np.asarray(f, dtype=np.float64)
        if index is None:
            index = WindowIndex(window, f.shape[0], spacing, r)
        rows.append(index.cumulative(hermite_poly(params.kappa, f.ravel()), t_grid) / norm)
    return FunctionalSample(float(r), t_grid, np.array(rows))


def _cov_row(f: np.ndarray, steps) -> list:
    row = []
    for k in steps:
        if f.ndim == 1:
            row.append(np.mean(f[:-k] * f[k:]) if k else np.mean(f * f))
        else:
            a = np.mean(f[:-k, :] * f[k:, :]) if k else np.mean(f * f)
            b = np.mean(f[:, :-k] * f[:, k:]) if k else a
            row.append(0.5 * (a + b))
    return row


def _lag_steps(lags, spacing):
    steps = [int(round(l / spacing)) for l in lags]
    if any(abs(k * spacing - l) > 1e-9 * max(1.0, l) for k, l in zip(steps, lags)):
        raise DomainError("lags must be multiples of the grid spacing")
    return steps


def empirical_covariance(fields, lags, spacing: float = 1.0):
    """Per-lag mean and replicate stderr of xi(x) xi(x + lag) along both axes.

    The field mean is known to be zero and is not subtracted.
    """
    steps = _lag_steps(lags, spacing)
    per = np.array([_cov_row(np.asarray(f), steps) for f in fields])
    return per.mean(axis=0), per.std(axis=0, ddof=1) / math.sqrt(len(per))


def trend_slope(s_grid, increments: np.ndarray):
    """Least-squares slope of the increment variance against s, with a replicate stderr.

    ``increments`` has shape (replicates, len(s_grid)). The slope is linear in
    the per-replicate squared deviations, so its spread across replicates
    gives an honest standard error even though the points share fields.
    """
    s = np.asarray(s_grid, dtype=np.float64)
    d = increments - increments.mean(axis=0)
    nrep = len(d)
    w = (s - s.mean()) / np.sum((s - s.mean()) ** 2)
    q = (d * d) @ w * nrep / (nrep - 1)
    return float(q.mean()), float(q.std(ddof=1) / math.sqrt(nrep))


def empirical_variance_curve(spec: FieldSpec, window: Window, params: KernelParams, r: float, h: float,
                             s_grid, lags=(), keep_values: bool = False) -> VarianceCurve:
    """Replicate variances of Y_r(s + h) - Y_r(s).

    All s share the same realisations, which correlates the points but keeps
    the shape of the curve sharp. Optional ``lags`` also collects empirical
    covariances from the same realisations.
    """
    if params.n != spec.dim or window.dim != spec.dim:
        raise DomainError("field, window and params dimensions differ")
    if abs(params.alpha - spec.model.alpha) > 1e-12:
        raise DomainError("params.alpha differs from the simulated covariance")
    s_grid = np.asarray(s_grid, dtype=np.float64)
    if np.any(s_grid < 0) or np.any(s_grid + h > 1.0 + 1e-12):
        raise DomainError("s grid must lie in [0, 1 - h]")
    t_all = np.unique(np.round(np.concatenate((s_grid, s_grid + h, [1.0])), 12))
    col = lambda t: int(np.searchsorted(t_all, round(float(t), 12)))
    index = WindowIndex(window, spec.grid_side, spec.spacing, r)
    norm = _normaliser(window, params, r)
    steps = _lag_steps(lags, spec.spacing) if len(lags) else []
    ys, covs = [], []
    for f in iter_fields(spec):
        ys.append(index.cumulative(hermite_poly(params.kappa, f.ravel()), t_all) / norm)
        if steps:
            covs.append(_cov_row(f, steps))
    ys = np.array(ys)
    inc = np.column_stack([ys[:, col(s + h)] - ys[:, col(s)] for s in s_grid])
    d = inc - inc.mean(axis=0)
    var = np.mean(d * d, axis=0) * len(d) / (len(d) - 1)
    se = np.std(d * d, axis=0, ddof=1) / math.sqrt(len(d))
    slope, slope_se = trend_slope(s_grid, inc)
    y1 = ys[:, col(1.0)]
    meta = {
        "r": r,
        "replicates": spec.replicates,
        "grid_side": spec.grid_side,
        "spacing": spec.spacing,
        "slope": slope,
        "slope_stderr": slope_se,
        "var_y1": float(np.var(y1, ddof=1)),
        "var_y1_stderr": float(np.std((y1 - y1.mean()) ** 2, ddof=1) / math.sqrt(len(y1))),
    }
    if steps:
        covs = np.array(covs)
        meta["lags"] = tuple(float(l) for l in lags)
        meta["cov_mean"] = covs.mean(axis=0)
        meta["cov_stderr"] = covs.std(axis=0, ddof=1) / math.sqrt(len(covs))
    if keep_values:
        meta["increments"] = inc
    return VarianceCurve(s_grid, float(h), var, se, "simulation", window.name, params.alpha,
                         params.kappa, spec.seed, meta)


# --------------------------------------------------------------------------
# binary dump
# --------------------------------------------------------------------------

def dump_field(path, field_values: np.ndarray, spacing: float, alpha: float) -> None:
    """Write a 32-byte little-endian header then row-major float64 values."""
    arr = np.ascontiguousarray(field_values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, arr.shape[0], float(spacing), float(alpha)))
        fh.write(arr.tobytes(order="C"))


def load_field(path):
    """Inverse of :func:`dump_field`; returns (values, spacing, alpha)."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise DomainError("truncated header")
        magic, version, side, spacing, alpha = _HEADER.unpack(head)
        if magic != MAGIC or version != VERSION:
            raise DomainError("not a field dump (bad magic or version)")
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size == side * side:
        data = data.reshape(side, side)
    elif data.size != side:
        raise DomainError("payload size does not match the header")
    return data.copy(), spacing, alpha
