"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Set ``HWL_DISABLE_NUMBA=1`` before import to force the numpy path. Both
paths are importable directly (``_nb_*`` / ``_np_*``) so tests and the
benchmark can compare them in one process.

Grid sums are returned per fixed-size block of rows; callers merge blocks
in index order, which keeps the result independent of the thread count.
"""
from __future__ import annotations

import math
import os
import warnings

import numpy as np

try:  # pragma: no cover - exercised implicitly
    import numba
    from numba import njit, prange

    # older TBB builds only produce a warning before numba falls back to OpenMP
    warnings.filterwarnings("ignore", message="The TBB threading layer", category=numba.NumbaWarning)

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("HWL_DISABLE_NUMBA", "").lower() not in ("1", "true", "yes")

BLOCK_ROWS = 64

_SERIES_MAX = 8.0
_MILLER_MAX = 25.0
_TWO_OVER_PI = 2.0 / math.pi
_THREE_PI_4 = 0.75 * math.pi


def set_num_threads(n: int) -> None:
    if USE_NUMBA:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# --------------------------------------------------------------------------
# Bessel J1, scalar core shared by both paths
# --------------------------------------------------------------------------

def _j1_scalar(x):
    ax = abs(x)
    if ax == 0.0:
        return 0.0
    if ax < _SERIES_MAX:
        half = 0.5 * ax
        q = -half * half
        term = half
        total = half
        k = 0
        while True:
            k += 1
            term *= q / (k * (k + 1))
            total += term
            if abs(term) < 1e-17 * abs(total):
                break
        out = total
    elif ax < _MILLER_MAX:
        # backward recurrence normalised by J0 + 2*sum(J_2k) = 1
        start = 2 * (int(ax + 15.0 + 6.0 * ax ** (1.0 / 3.0)) // 2) + 2
        jp1 = 0.0
        jk = 1e-300
        norm = 0.0
        j1v = 0.0
        for k in range(start, 0, -1):
            jm1 = (2.0 * k / ax) * jk - jp1
            jp1 = jk
            jk = jm1
            if abs(jk) > 1e250:
                jk *= 1e-250
                jp1 *= 1e-250
                norm *= 1e-250
                j1v *= 1e-250
            # jk now holds J_{k-1}
            if k - 1 == 1:
                j1v = jk
            if (k - 1) % 2 == 0 and k - 1 > 0:
                norm += 2.0 * jk
        norm += jk
        out = j1v / norm
    else:
        mu = 4.0
        inv = 1.0 / ax
        a = 1.0
        p = 1.0
        qq = 0.0
        tk_prev = 1.0
        k = 0
        while k < 60:
            k += 1
            a *= (mu - (2 * k - 1) ** 2) / (8.0 * k)
            tk = a * inv ** k
            if abs(tk) > abs(tk_prev):
                break
            r = k % 4
            if r == 1:
                qq += tk
            elif r == 2:
                p -= tk
            elif r == 3:
                qq -= tk
            else:
                p += tk
            tk_prev = tk
            if abs(tk) < 1e-17:
                break
        chi = ax - _THREE_PI_4
        out = math.sqrt(_TWO_OVER_PI * inv) * (p * math.cos(chi) - qq * math.sin(chi))
    return out if x > 0 else -out


def _np_j1(x):
    """Vectorised J1 (numpy path)."""
    x = np.asarray(x, dtype=np.float64)
    ax = np.abs(x)
    out = np.zeros_like(ax)

    small = (ax > 0) & (ax < _SERIES_MAX)
    if small.any():
        half = 0.5 * ax[small]
        q = -half * half
        term = half.copy()
        total = half.copy()
        for k in range(1, 40):
            term *= q / (k * (k + 1))
            total += term
        out[small] = total

    mid = (ax >= _SERIES_MAX) & (ax < _MILLER_MAX)
    if mid.any():
        xm = ax[mid]
        start = 2 * (int(_MILLER_MAX + 15.0 + 6.0 * _MILLER_MAX ** (1.0 / 3.0)) // 2) + 2
        jp1 = np.zeros_like(xm)
        jk = np.full_like(xm, 1e-300)
        norm = np.zeros_like(xm)
        j1v = np.zeros_like(xm)
        for k in range(start, 0, -1):
            jm1 = (2.0 * k / xm) * jk - jp1
            jp1 = jk
            jk = jm1
            big = np.abs(jk) > 1e250
            if big.any():
                for arr in (jk, jp1, norm, j1v):
                    arr[big] *= 1e-250
            if k - 1 == 1:
                j1v = jk.copy()
            if (k - 1) % 2 == 0 and k - 1 > 0:
                norm += 2.0 * jk
        norm += jk
        out[mid] = j1v / norm

    large = ax >= _MILLER_MAX
    if large.any():
        xl = ax[large]
        inv = 1.0 / xl
        a = 1.0
        p = np.ones_like(xl)
        qq = np.zeros_like(xl)
        for k in range(1, 26):
            a *= (4.0 - (2 * k - 1) ** 2) / (8.0 * k)
            tk = a * inv ** k
            r = k % 4
            if r == 1:
                qq += tk
            elif r == 2:
                p -= tk
            elif r == 3:
                qq -= tk
            else:
                p += tk
        chi = xl - _THREE_PI_4
        out[large] = np.sqrt(_TWO_OVER_PI * inv) * (p * np.cos(chi) - qq * np.sin(chi))

    return np.where(x < 0, -out, out)


# --------------------------------------------------------------------------
# numpy implementations
# --------------------------------------------------------------------------

def _np_pair_power_sums(x, y, gamma):
    d = np.sqrt(np.sum((x - y) ** 2, axis=1))
    v = d ** (-gamma)
    return float(v.sum()), float((v * v).sum())


def _np_shell_pair_powers(yx, ux, tx, hx, yy, uy, ty, hy, inv_n, gamma):
    sx = (tx + ux * hx) ** inv_n
    sy = (ty + uy * hy) ** inv_n
    d2 = np.sum((sx[:, None] * yx - sy[:, None] * yy) ** 2, axis=1)
    return d2 ** (-0.5 * gamma)


def _np_disk_block_sums(r_in, r_out, alpha, n_half, delta):
    nb = (n_half + BLOCK_ROWS - 1) // BLOCK_ROWS
    out = np.zeros((nb, 2))
    lam = (np.arange(n_half) + 0.5) * delta
    expo = 0.5 * (alpha - 2.0)
    for b in range(nb):
        i0, i1 = b * BLOCK_ROWS, min(n_half, (b + 1) * BLOCK_ROWS)
        li = lam[i0:i1, None]
        lj = lam[None, i0:]
        rho2 = li * li + lj * lj
        rho = np.sqrt(rho2)
        f = 2.0 * math.pi * r_out * _np_j1(r_out * rho)
        if r_in > 0.0:
            f -= 2.0 * math.pi * r_in * _np_j1(r_in * rho)
        f2 = (f / rho) ** 2
        ii = np.arange(i0, i1)[:, None]
        jj = np.arange(i0, n_half)[None, :]
        mult = np.where(jj > ii, 2.0, np.where(jj == ii, 1.0, 0.0))
        out[b, 0] = np.sum(mult * f2 * rho2 ** expo)
        out[b, 1] = np.sum(mult * f2)
    return out


def _np_square_block_sums(a_in, a_out, alpha, n_half, delta):
    nb = (n_half + BLOCK_ROWS - 1) // BLOCK_ROWS
    out = np.zeros((nb, 2))
    lam = (np.arange(n_half) + 0.5) * delta
    s_out = 2.0 * np.sin(a_out * lam) / lam
    s_in = 2.0 * np.sin(a_in * lam) / lam
    expo = 0.5 * (alpha - 2.0)
    for b in range(nb):
        i0, i1 = b * BLOCK_ROWS, min(n_half, (b + 1) * BLOCK_ROWS)
        f = s_out[i0:i1, None] * s_out[None, i0:] - s_in[i0:i1, None] * s_in[None, i0:]
        rho2 = lam[i0:i1, None] ** 2 + lam[None, i0:] ** 2
        ii = np.arange(i0, i1)[:, None]
        jj = np.arange(i0, n_half)[None, :]
        mult = np.where(jj > ii, 2.0, np.where(jj == ii, 1.0, 0.0))
        f2 = f * f
        out[b, 0] = np.sum(mult * f2 * rho2 ** expo)
        out[b, 1] = np.sum(mult * f2)
    return out


def _np_line_block_sums(kind, p1, p2, alpha, n_half, delta):
    """1D sums. kind 0: interval of length p1; kind 1: [-p2,-p1] U [p1,p2]."""
    rows = BLOCK_ROWS * 1024
    nb = (n_half + rows - 1) // rows
    out = np.zeros((nb, 2))
    for b in range(nb):
        lam = (np.arange(b * rows, min(n_half, (b + 1) * rows)) + 0.5) * delta
        if kind == 0:
            f2 = (2.0 * np.sin(0.5 * p1 * lam) / lam) ** 2
        else:
            f2 = (2.0 * (np.sin(p2 * lam) - np.sin(p1 * lam)) / lam) ** 2
        out[b, 0] = np.sum(f2 * lam ** (alpha - 1.0))
        out[b, 1] = np.sum(f2)
    return out


# --------------------------------------------------------------------------
# numba implementations
# --------------------------------------------------------------------------

if HAVE_NUMBA:
    _nb_j1_scalar = njit(cache=True, nogil=True)(_j1_scalar)

    @njit(cache=True, nogil=True)
    def _nb_j1_array(x):
        out = np.empty(x.size)
        flat = x.ravel()
        for i in range(flat.size):
            out[i] = _nb_j1_scalar(flat[i])
        return out.reshape(x.shape)

    @njit(cache=True, nogil=True)
    def _nb_pair_power_sums(x, y, gamma):
        s = 0.0
        s2 = 0.0
        n, dim = x.shape
        for i in range(n):
            d2 = 0.0
            for k in range(dim):
                diff = x[i, k] - y[i, k]
                d2 += diff * diff
            v = d2 ** (-0.5 * gamma)
            s += v
            s2 += v * v
        return s, s2

    @njit(cache=True, nogil=True)
    def _nb_shell_pair_powers(yx, ux, tx, hx, yy, uy, ty, hy, inv_n, gamma):
        n, dim = yx.shape
        out = np.empty(n)
        for i in range(n):
            sx = (tx + ux[i] * hx) ** inv_n
            sy = (ty + uy[i] * hy) ** inv_n
            d2 = 0.0
            for k in range(dim):
                diff = sx * yx[i, k] - sy * yy[i, k]
                d2 += diff * diff
            out[i] = d2 ** (-0.5 * gamma)
        return out

    @njit(cache=True, nogil=True)
    def _neumaier_add(s, c, v):
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        return t, c

    @njit(cache=True, nogil=True, parallel=True)
    def _nb_disk_block_sums(r_in, r_out, alpha, n_half, delta):
        nb = (n_half + BLOCK_ROWS - 1) // BLOCK_ROWS
        out = np.zeros((nb, 2))
        expo = 0.5 * (alpha - 2.0)
        twopi = 2.0 * math.pi
        for b in prange(nb):
            sw = 0.0
            cw = 0.0
            su = 0.0
            cu = 0.0
            i1 = min(n_half, (b + 1) * BLOCK_ROWS)
            for i in range(b * BLOCK_ROWS, i1):
                li = (i + 0.5) * delta
                for j in range(i, n_half):
                    lj = (j + 0.5) * delta
                    rho2 = li * li + lj * lj
                    rho = math.sqrt(rho2)
                    f = twopi * r_out * _nb_j1_scalar(r_out * rho)
                    if r_in > 0.0:
                        f -= twopi * r_in * _nb_j1_scalar(r_in * rho)
                    f2 = f * f / rho2
                    m = 1.0 if j == i else 2.0
                    sw, cw = _neumaier_add(sw, cw, m * f2 * rho2 ** expo)
                    su, cu = _neumaier_add(su, cu, m * f2)
            out[b, 0] = sw + cw
            out[b, 1] = su + cu
        return out

    @njit(cache=True, nogil=True, parallel=True)
    def _nb_square_block_sums(a_in, a_out, alpha, n_half, delta):
        nb = (n_half + BLOCK_ROWS - 1) // BLOCK_ROWS
        out = np.zeros((nb, 2))
        expo = 0.5 * (alpha - 2.0)
        s_out = np.empty(n_half)
        s_in = np.empty(n_half)
        for j in range(n_half):
            lj = (j + 0.5) * delta
            s_out[j] = 2.0 * math.sin(a_out * lj) / lj
            s_in[j] = 2.0 * math.sin(a_in * lj) / lj
        for b in prange(nb):
            sw = 0.0
            cw = 0.0
            su = 0.0
            cu = 0.0
            i1 = min(n_half, (b + 1) * BLOCK_ROWS)
            for i in range(b * BLOCK_ROWS, i1):
                li = (i + 0.5) * delta
                for j in range(i, n_half):
                    lj = (j + 0.5) * delta
                    f = s_out[i] * s_out[j] - s_in[i] * s_in[j]
                    f2 = f * f
                    m = 1.0 if j == i else 2.0
                    sw, cw = _neumaier_add(sw, cw, m * f2 * (li * li + lj * lj) ** expo)
                    su, cu = _neumaier_add(su, cu, m * f2)
            out[b, 0] = sw + cw
            out[b, 1] = su + cu
        return out

    @njit(cache=True, nogil=True, parallel=True)
    def _nb_line_block_sums(kind, p1, p2, alpha, n_half, delta):
        rows = BLOCK_ROWS * 1024
        nb = (n_half + rows - 1) // rows
        out = np.zeros((nb, 2))
        for b in prange(nb):
            sw = 0.0
            cw = 0.0
            su = 0.0
            cu = 0.0
            for i in range(b * rows, min(n_half, (b + 1) * rows)):
                lam = (i + 0.5) * delta
                if kind == 0:
                    f = 2.0 * math.sin(0.5 * p1 * lam) / lam
                else:
                    f = 2.0 * (math.sin(p2 * lam) - math.sin(p1 * lam)) / lam
                f2 = f * f
                sw, cw = _neumaier_add(sw, cw, f2 * lam ** (alpha - 1.0))
                su, cu = _neumaier_add(su, cu, f2)
            out[b, 0] = sw + cw
            out[b, 1] = su + cu
        return out


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

def j1(x):
    """Bessel function of the first kind of order one."""
    if np.ndim(x) == 0:
        return float(_nb_j1_scalar(float(x)) if USE_NUMBA else _j1_scalar(float(x)))
    arr = np.ascontiguousarray(x, dtype=np.float64)
    return _nb_j1_array(arr) if USE_NUMBA else _np_j1(arr)


def pair_power_sums(x, y, gamma):
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if USE_NUMBA:
        s, s2 = _nb_pair_power_sums(x, y, float(gamma))
        return float(s), float(s2)
    return _np_pair_power_sums(x, y, gamma)


def shell_pair_powers(yx, ux, tx, hx, yy, uy, ty, hy, gamma):
    """|s_x y_x - s_y y_y|^-gamma with s = (t + u h)^(1/n), row by row.

    ``y`` are cone-measure boundary points of the unit window and ``u``
    radial uniforms; hy = 0 pins the second point to a boundary.
    """
    yx = np.ascontiguousarray(yx, dtype=np.float64)
    yy = np.ascontiguousarray(yy, dtype=np.float64)
    ux = np.ascontiguousarray(ux, dtype=np.float64)
    uy = np.ascontiguousarray(uy, dtype=np.float64)
    inv_n = 1.0 / yx.shape[1]
    f = _nb_shell_pair_powers if USE_NUMBA else _np_shell_pair_powers
    return f(yx, ux, float(tx), float(hx), yy, uy, float(ty), float(hy), inv_n, float(gamma))


def disk_block_sums(r_in, r_out, alpha, n_half, delta):
    f = _nb_disk_block_sums if USE_NUMBA else _np_disk_block_sums
    return f(float(r_in), float(r_out), float(alpha), int(n_half), float(delta))


def square_block_sums(a_in, a_out, alpha, n_half, delta):
    f = _nb_square_block_sums if USE_NUMBA else _np_square_block_sums
    return f(float(a_in), float(a_out), float(alpha), int(n_half), float(delta))


def line_block_sums(kind, p1, p2, alpha, n_half, delta):
    f = _nb_line_block_sums if USE_NUMBA else _np_line_block_sums
    return f(int(kind), float(p1), float(p2), float(alpha), int(n_half), float(delta))
