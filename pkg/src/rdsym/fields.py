"""Uniform square grids, grid-sampled fields and compactly supported data.

Array convention: ``values[i, j]`` is the value at ``x = -L + i*h``,
``y = -L + j*h`` (axis 0 is x, axis 1 is y).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import ContractViolation, DomainTooSmallError

PROFILES = ("smooth-bump", "mollified-indicator")

# snapping distance (in cells) below which a coordinate is treated as a node
_NODE_SNAP = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """The square ``[-L, L]^2`` sampled by ``n`` nodes per side (``n`` odd)."""

    half_width: float
    nodes_per_side: int

    def __post_init__(self):
        if not (self.half_width > 0 and math.isfinite(self.half_width)):
            raise ContractViolation("half_width must be a positive finite length")
        n = self.nodes_per_side
        if int(n) != n or n < 3:
            raise ContractViolation("nodes_per_side must be an integer >= 3")
        if n % 2 == 0:
            raise ContractViolation("nodes_per_side must be odd")
        object.__setattr__(self, "nodes_per_side", int(n))

    @classmethod
    def from_spacing(cls, half_width, spacing):
        n = 2 * half_width / spacing + 1
        if abs(n - round(n)) > 1e-9:
            raise ContractViolation("2*half_width must be a multiple of spacing")
        return cls(half_width, int(round(n)))

    @property
    def n(self):
        return self.nodes_per_side

    @property
    def h(self):
        return 2.0 * self.half_width / (self.nodes_per_side - 1)

    @property
    def center_index(self):
        return (self.nodes_per_side - 1) // 2

    def coords(self):
        """1-D node coordinates, with the centre node exactly 0."""
        k = np.arange(self.nodes_per_side) - self.center_index
        return k * self.h

    def mesh(self):
        c = self.coords()
        return np.meshgrid(c, c, indexing="ij")

    def node_position(self, i, j):
        return ((i - self.center_index) * self.h, (j - self.center_index) * self.h)

    def contains(self, x, y):
        L = self.half_width * (1 + 1e-12)
        return -L <= x <= L and -L <= y <= L

    def lattice_steps(self, vector):
        """Integer cell counts of a lattice vector; raises if off-lattice."""
        steps = []
        for comp in vector:
            k = comp / self.h
            if abs(k - round(k)) > 1e-9:
                raise ContractViolation(
                    f"shift component {comp} is not a multiple of h={self.h}")
            steps.append(int(round(k)))
        return tuple(steps)


@dataclass(frozen=True)
class ScalarField:
    """Immutable snapshot ``u(t, .)`` on a grid."""

    grid: GridSpec
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        n = self.grid.n
        if v.shape != (n, n):
            raise ContractViolation(f"values must have shape {(n, n)}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ContractViolation("field values must be finite")
        if self.time < 0:
            raise ContractViolation("time must be nonnegative")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def with_values(self, values, time=None):
        return ScalarField(self.grid, values, self.time if time is None else time)

    def __add__(self, other):
        if not isinstance(other, ScalarField):
            return NotImplemented
        if other.grid != self.grid:
            raise ContractViolation("fields live on different grids")
        return self.with_values(self.values + other.values)

    def max(self):
        return float(self.values.max())

    def mass(self):
        return float(self.values.sum() * self.grid.h ** 2)


@dataclass(frozen=True)
class Bump:
    center: tuple
    radius: float
    height: float = 1.0
    profile: str = "smooth-bump"

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.center) != 2:
            raise ContractViolation("bump center must be a 2-D point")
        if not self.radius > 0:
            raise ContractViolation("bump radius must be positive")
        if self.height < 0:
            raise ContractViolation("bump height must be nonnegative")
        if self.profile not in PROFILES:
            raise ContractViolation(f"unknown profile {self.profile!r}; expected one of {PROFILES}")

    def evaluate(self, X, Y):
        s2 = ((X - self.center[0]) ** 2 + (Y - self.center[1]) ** 2) / self.radius ** 2
        out = np.zeros(np.shape(X))
        inside = s2 < 1.0
        if self.profile == "smooth-bump":
            out[inside] = self.height * np.exp(1.0 - 1.0 / (1.0 - s2[inside]))
        else:
            s = np.sqrt(s2[inside])
            a = _psi(1.0 - s)
            b = _psi(s - 0.5)
            out[inside] = self.height * (a / (a + b))
        return out

    def translated(self, shift):
        return Bump((self.center[0] + shift[0], self.center[1] + shift[1]),
                    self.radius, self.height, self.profile)

    def reach(self, origin=(0.0, 0.0)):
        return math.hypot(self.center[0] - origin[0], self.center[1] - origin[1]) + self.radius


def _psi(x):
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


@dataclass(frozen=True)
class DatumSpec:
    """Initial datum: a finite sum of compactly supported bumps."""

    bumps: tuple = field(default_factory=tuple)

    def __post_init__(self):
        bumps = tuple(b if isinstance(b, Bump) else Bump(**b) for b in self.bumps)
        if not bumps:
            raise ContractViolation("a datum needs at least one bump")
        object.__setattr__(self, "bumps", bumps)

    def __or__(self, other):
        return DatumSpec(self.bumps + other.bumps)

    def translated(self, shift):
        return DatumSpec(tuple(b.translated(shift) for b in self.bumps))

    def scaled(self, factor):
        return DatumSpec(tuple(Bump(b.center, b.radius, b.height * factor, b.profile)
                               for b in self.bumps))

    @property
    def max_height(self):
        return max(b.height for b in self.bumps)

    def support_radius(self, origin=(0.0, 0.0)):
        """Radius of the smallest origin-centred ball containing the support."""
        live = [b for b in self.bumps if b.height > 0] or list(self.bumps)
        return max(b.reach(origin) for b in live)

    def delta(self, h, origin=(0.0, 0.0)):
        """Support radius inflated by one cell, used for the ``delta*pi`` bounds."""
        return self.support_radius(origin) + h


def make_field(grid: GridSpec, datum: DatumSpec) -> ScalarField:
    L = grid.half_width
    for b in datum.bumps:
        cx, cy = b.center
        if abs(cx) + b.radius >= L or abs(cy) + b.radius >= L:
            raise DomainTooSmallError(
                f"bump at {b.center} with radius {b.radius} does not fit strictly "
                f"inside [-{L}, {L}]^2")
    X, Y = grid.mesh()
    values = np.zeros((grid.n, grid.n))
    for b in datum.bumps:
        values += b.evaluate(X, Y)
    return ScalarField(grid, values, 0.0)


def sample_many(field: ScalarField, xs, ys) -> np.ndarray:
    """Vectorised bilinear interpolation; callers guarantee points are inside."""
    grid = field.grid
    n = grid.n
    fx = (np.asarray(xs, dtype=float) + grid.half_width) / grid.h
    fy = (np.asarray(ys, dtype=float) + grid.half_width) / grid.h
    fx = np.where(np.abs(fx - np.rint(fx)) < _NODE_SNAP, np.rint(fx), fx)
    fy = np.where(np.abs(fy - np.rint(fy)) < _NODE_SNAP, np.rint(fy), fy)
    i0 = np.clip(np.floor(fx).astype(np.intp), 0, n - 2)
    j0 = np.clip(np.floor(fy).astype(np.intp), 0, n - 2)
    tx = fx - i0
    ty = fy - j0
    v = field.values
    return ((1 - tx) * (1 - ty) * v[i0, j0] + tx * (1 - ty) * v[i0 + 1, j0]
            + (1 - tx) * ty * v[i0, j0 + 1] + tx * ty * v[i0 + 1, j0 + 1])


def sample(field: ScalarField, p) -> float:
    """Bilinear interpolation at point ``p``; exact at nodes and on affine fields."""
    x, y = p
    if not field.grid.contains(x, y):
        raise ContractViolation(f"point {p} lies outside the domain")
    return float(sample_many(field, [x], [y])[0])


def ray_length(grid: GridSpec, direction, origin=(0.0, 0.0)) -> float:
    """Distance from ``origin`` to the domain boundary along ``direction``."""
    L = grid.half_width
    lengths = []
    for e, o in zip(direction, origin):
        if e > 1e-15:
            lengths.append((L - o) / e)
        elif e < -1e-15:
            lengths.append((-L - o) / e)
    return min(lengths)


def ray_profile(field: ScalarField, direction: Sequence[float], step: float,
                origin=(0.0, 0.0)):
    """Samples ``rho -> u(t, origin + rho*e)`` for ``rho = 0, step, ...``.

    Returns ``(rho, values)`` arrays; the last sample is the last multiple of
    ``step`` that is still inside the domain.
    """
    if not step > 0:
        raise ContractViolation("step must be positive")
    e = np.asarray(direction, dtype=float)
    if abs(np.hypot(*e) - 1.0) > 1e-12:
        raise ContractViolation("direction must be a unit vector")
    if not field.grid.contains(*origin):
        raise ContractViolation("ray origin lies outside the domain")
    rho_max = ray_length(field.grid, e, origin)
    rho = np.arange(int(np.floor(rho_max / step * (1 + 1e-12))) + 1) * step
    vals = sample_many(field, origin[0] + rho * e[0], origin[1] + rho * e[1])
    return rho, vals
