"""Star-shaped windows, their homothetic shells, and samplers.

All coordinates live in the homothety frame: the window at scale rho is
rho * D where D = Delta(1) is the unit-volume-parameter window. The region
Delta(t) has volume t * |D|, so its linear scale is t**(1/n).

Sampling is built on the cone measure of D: if y has density proportional
to <y, normal(y)> dS(y) on the boundary and U is uniform, then
(a + U (b - a))**(1/n) * y is uniform on the shell Delta(b) minus Delta(a).
The same cone measure is the normal-velocity-weighted boundary law used by
the derivative identity in :mod:`hwl.crofton`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import substream
from .analysis import ball_volume
from .errors import DomainError

__all__ = [
    "Window",
    "ShellRegion",
    "BoundaryDensity",
    "volume",
    "shell",
    "sample_uniform",
    "boundary_sample",
    "parse_window",
    "CHUNK",
]

CHUNK = 1 << 16


@dataclass(frozen=True)
class Window:
    """Unit window D = Delta(1).

    ``kind`` is ``"interval"`` ([0, 1], homothety center 0), ``"ball"``
    (unit ball centred at ``-center``, so the homothety center sits at
    offset ``center`` from the ball centre) or ``"cube"`` ([-1, 1]^n).
    """

    kind: str
    dim: int
    center: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in ("interval", "ball", "cube"):
            raise DomainError(f"unknown window kind {self.kind!r}")
        if self.kind == "interval" and self.dim != 1:
            raise DomainError("interval windows are one-dimensional")
        if self.kind == "cube" and not 1 <= self.dim <= 3:
            raise DomainError("cube windows are supported for n <= 3")
        if self.dim < 1:
            raise DomainError("dimension must be positive")
        c = tuple(float(v) for v in self.center) if self.center else ()
        if c:
            if self.kind != "ball":
                raise DomainError("only ball windows take a homothety offset")
            if len(c) != self.dim:
                raise DomainError("offset has the wrong dimension")
            if math.hypot(*c) >= 1.0:
                raise DomainError("homothety center must lie strictly inside the ball")
            if not any(c):
                c = ()
        object.__setattr__(self, "center", c)

    # constructors
    @classmethod
    def interval(cls) -> "Window":
        return cls("interval", 1)

    @classmethod
    def ball(cls, dim: int = 2, center=None) -> "Window":
        return cls("ball", dim, tuple(center) if center is not None else ())

    @classmethod
    def disk(cls, center=None) -> "Window":
        return cls.ball(2, center)

    @classmethod
    def square(cls) -> "Window":
        return cls("cube", 2)

    @classmethod
    def cube(cls, dim: int = 3) -> "Window":
        return cls("cube", dim)

    @property
    def name(self) -> str:
        if self.kind == "interval":
            return "interval"
        if self.kind == "cube":
            return {1: "segment", 2: "square", 3: "cube"}[self.dim]
        base = "disk" if self.dim == 2 else f"ball{self.dim}"
        if self.center:
            base += "@" + ",".join(f"{v:g}" for v in self.center)
        return base

    @property
    def offset(self) -> np.ndarray:
        return np.array(self.center) if self.center else np.zeros(self.dim)

    @property
    def unit_volume(self) -> float:
        if self.kind == "interval":
            return 1.0
        if self.kind == "cube":
            return 2.0 ** self.dim
        return ball_volume(self.dim)

    @property
    def inradius(self) -> float:
        """Radius of the largest ball inside D."""
        return 0.5 if self.kind == "interval" else 1.0

    @property
    def diameter(self) -> float:
        if self.kind == "interval":
            return 1.0
        if self.kind == "cube":
            return 2.0 * math.sqrt(self.dim)
        return 2.0

    def bbox(self):
        """Axis-aligned bounding box (lo, hi) of D."""
        if self.kind == "interval":
            return np.zeros(1), np.ones(1)
        if self.kind == "cube":
            return -np.ones(self.dim), np.ones(self.dim)
        c = self.offset
        return -c - 1.0, -c + 1.0

    def gauge(self, x) -> np.ndarray:
        """Minkowski functional: x lies in rho * D iff gauge(x) <= rho."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if self.kind == "interval":
            v = x[:, 0]
            return np.where(v >= 0, v, np.inf)
        if self.kind == "cube":
            return np.max(np.abs(x), axis=1)
        c = self.offset
        if not self.center:
            return np.linalg.norm(x, axis=1)
        # |x + rho c| = rho, solved for rho >= 0
        xc = x @ c
        xx = np.einsum("ij,ij->i", x, x)
        cc = float(c @ c)
        return (xc + np.sqrt(xc * xc + (1.0 - cc) * xx)) / (1.0 - cc)

    def contains(self, x, rho: float = 1.0) -> np.ndarray:
        return self.gauge(x) <= rho

    def normal(self, y) -> np.ndarray:
        """Outward unit normal at boundary points y of D."""
        y = np.atleast_2d(np.asarray(y, dtype=np.float64))
        if self.kind == "interval":
            return np.where(y >= 0.5, 1.0, -1.0)
        if self.kind == "cube":
            idx = np.argmax(np.abs(y), axis=1)
            out = np.zeros_like(y)
            out[np.arange(len(y)), idx] = np.sign(y[np.arange(len(y)), idx])
            return out
        v = y + self.offset
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    @property
    def max_support(self) -> float:
        """Largest value of <y, normal(y)> on the boundary of D."""
        if self.kind == "ball":
            return 1.0 + math.hypot(*self.center) if self.center else 1.0
        return 1.0

    def uniform_boundary(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Boundary points of D, uniform in surface measure."""
        n = self.dim
        if self.kind == "interval":
            return (rng.random(count) < 0.5).astype(np.float64)[:, None]
        if self.kind == "cube":
            face = np.minimum((rng.random(count) * 2 * n).astype(np.int64), 2 * n - 1)
            pts = rng.uniform(-1.0, 1.0, size=(count, n))
            pts[np.arange(count), face // 2] = np.where(face % 2 == 0, 1.0, -1.0)
            return pts
        return _sphere(rng, count, n) - self.offset

    def cone_sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Boundary points of D drawn from the cone measure."""
        if self.kind == "interval":
            return np.ones((count, 1))
        if self.kind == "cube" or not self.center:
            return self.uniform_boundary(rng, count)
        # off-centre ball: uniform normal, thinned by the support function
        c = self.offset
        out = np.empty((count, self.dim))
        filled = 0
        top = self.max_support
        while filled < count:
            need = count - filled
            batch = int(need * top * 1.1) + 16
            nu = _sphere(rng, batch, self.dim)
            keep = rng.random(batch) * top < 1.0 - nu @ c
            got = nu[keep][:need]
            out[filled:filled + len(got)] = got - c
            filled += len(got)
        return out

    @property
    def cone_dims(self) -> int | None:
        """Number of uniforms mapping exactly to the cone measure (None if not available)."""
        if self.kind == "interval":
            return 0
        if self.kind == "cube":
            return self.dim
        if self.center or self.dim > 3:
            return None
        return self.dim - 1

    def cone_from_uniforms(self, u: np.ndarray) -> np.ndarray:
        """Deterministic map of uniforms in [0,1)^cone_dims onto the cone measure."""
        k = self.cone_dims
        if k is None:
            raise DomainError(f"no exact uniform map for window {self.name}")
        u = np.atleast_2d(u)
        m = len(u)
        if self.kind == "interval":
            return np.ones((m, 1))
        if self.kind == "cube":
            n = self.dim
            face = np.minimum((u[:, 0] * 2 * n).astype(np.int64), 2 * n - 1)
            axis = face // 2
            free = 2.0 * u[:, 1:] - 1.0
            out = np.empty((m, n))
            for j in range(n):
                # coordinate j takes free slot j (before the fixed axis) or j-1 (after)
                slot = np.clip(np.where(j < axis, j, j - 1), 0, max(n - 2, 0))
                out[:, j] = free[np.arange(m), slot] if n > 1 else 0.0
            out[np.arange(m), axis] = np.where(face % 2 == 0, 1.0, -1.0)
            return out
        if self.dim == 1:
            return np.where(u[:, :1] < 0.5, -1.0, 1.0)
        if self.dim == 2:
            th = 2.0 * math.pi * u[:, 0]
            return np.column_stack((np.cos(th), np.sin(th)))
        z = 2.0 * u[:, 0] - 1.0
        ph = 2.0 * math.pi * u[:, 1]
        r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
        return np.column_stack((r * np.cos(ph), r * np.sin(ph), z))

    def cone_moments(self):
        """Mean vector and mean squared norm of y under the cone measure."""
        n = self.dim
        if self.kind == "interval":
            return np.ones(1), 1.0
        if self.kind == "cube":
            return np.zeros(n), 1.0 + (n - 1) / 3.0
        c = self.offset
        cc = float(c @ c)
        return -c * (1.0 + 1.0 / n), 1.0 + cc + 2.0 * cc / n


def _sphere(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    if n == 1:
        return np.where(rng.random(count) < 0.5, -1.0, 1.0)[:, None]
    if n == 2:
        th = 2.0 * math.pi * rng.random(count)
        return np.column_stack((np.cos(th), np.sin(th)))
    g = rng.standard_normal((count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


_WINDOW_NAMES = {
    "interval": Window.interval,
    "disk": Window.disk,
    "square": Window.square,
    "cube": lambda: Window.cube(3),
    "cube3": lambda: Window.cube(3),
    "ball3": lambda: Window.ball(3),
}


def parse_window(spec: str) -> Window:
    """Parse names like ``disk``, ``square``, ``interval``, ``ball3``, ``disk@0.3,0``."""
    name, _, off = spec.strip().lower().partition("@")
    if off:
        center = tuple(float(v) for v in off.split(","))
        dim = 2 if name == "disk" else int(name[4:]) if name.startswith("ball") else 0
        if not dim:
            raise DomainError(f"window {name!r} takes no offset")
        return Window.ball(dim, center)
    if name in _WINDOW_NAMES:
        return _WINDOW_NAMES[name]()
    if name.startswith("ball") and name[4:].isdigit():
        return Window.ball(int(name[4:]))
    raise DomainError(f"unknown window {spec!r}")


def volume(window: Window, t: float) -> float:
    if t < 0:
        raise DomainError("t must be nonnegative")
    return t * window.unit_volume


@dataclass(frozen=True)
class ShellRegion:
    """Delta(t + h) minus Delta(t)."""

    window: Window
    t: float
    h: float

    def __post_init__(self):
        if self.t < 0:
            raise DomainError("t must be nonnegative")
        if self.h <= 0:
            raise DomainError("shell thickness h must be positive")

    @property
    def dim(self) -> int:
        return self.window.dim

    @property
    def inner(self) -> float:
        return self.t ** (1.0 / self.dim)

    @property
    def outer(self) -> float:
        return (self.t + self.h) ** (1.0 / self.dim)

    @property
    def volume(self) -> float:
        return self.h * self.window.unit_volume

    def contains(self, x) -> np.ndarray:
        g = self.window.gauge(x)
        return (g <= self.outer) & (g > self.inner)

    def draw_raw(self, rng: np.random.Generator, count: int):
        """Random ingredients (cone point, radial uniform); independent of t and h."""
        return self.window.cone_sample(rng, count), rng.random(count)

    def place(self, raw) -> np.ndarray:
        y, u = raw
        s = (self.t + u * self.h) ** (1.0 / self.dim)
        return s[:, None] * y

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return self.place(self.draw_raw(rng, count))

    def from_uniforms(self, u: np.ndarray) -> np.ndarray:
        """Map points of [0,1)^(cone_dims+1) to uniform points of the shell."""
        k = self.window.cone_dims
        if k is None:
            raise DomainError(f"no exact uniform map for window {self.window.name}")
        return self.place((self.window.cone_from_uniforms(u[:, :k]), u[:, k]))


def shell(window: Window, t: float, h: float) -> ShellRegion:
    return ShellRegion(window, float(t), float(h))


def sample_uniform(region: ShellRegion, count: int, seed: int) -> np.ndarray:
    """Uniform points in the region; chunk c of 2**16 indices uses its own substream."""
    if count < 0:
        raise DomainError("count must be nonnegative")
    parts = []
    for c, start in enumerate(range(0, count, CHUNK)):
        parts.append(region.sample(substream(seed, c), min(CHUNK, count - start)))
    return np.concatenate(parts) if parts else np.empty((0, region.dim))


@dataclass(frozen=True)
class BoundaryDensity:
    """Which shell boundary, and how points on it are weighted.

    ``weight="velocity"`` weights surface measure by the normal speed of
    the boundary under t -> Delta(t) (this is the cone measure);
    ``weight="surface"`` is plain surface measure.
    """

    which: str = "outer"
    weight: str = "velocity"

    def __post_init__(self):
        if self.which not in ("outer", "inner"):
            raise DomainError("which must be 'outer' or 'inner'")
        if self.weight not in ("velocity", "surface"):
            raise DomainError("weight must be 'velocity' or 'surface'")


def boundary_sample(window: Window, t: float, density: BoundaryDensity | str = "velocity",
                    count: int = 1, seed: int = 0) -> np.ndarray:
    """Points on the boundary of Delta(t).

    The velocity-weighted law is obtained from surface-uniform proposals
    accepted with probability <y, normal> / max <y, normal>.
    """
    if t <= 0:
        raise DomainError("t must be positive")
    if isinstance(density, str):
        density = BoundaryDensity(weight=density)
    rng = substream(seed, 0)
    scale = t ** (1.0 / window.dim)
    if density.weight == "surface":
        return scale * window.uniform_boundary(rng, count)
    if window.kind == "interval":
        return np.full((count, 1), scale)
    out = np.empty((count, window.dim))
    filled = 0
    top = window.max_support
    while filled < count:
        batch = int((count - filled) * top * 1.1) + 16
        y = window.uniform_boundary(rng, batch)
        speed = np.einsum("ij,ij->i", y, window.normal(y))
        got = y[rng.random(batch) * top < speed][: count - filled]
        out[filled:filled + len(got)] = got
        filled += len(got)
    return scale * out
