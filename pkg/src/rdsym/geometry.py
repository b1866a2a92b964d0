"""Level-set measurements on grid fields.

Inscribed and enclosing balls are computed on the node lattice: the inscribed
radius from an exact Euclidean distance transform, the enclosing radius from the
minimal enclosing circle of the inside nodes, inflated by half a cell diagonal.
Origin-centred quantities (``r_origin``, star-shapedness, polar profile,
monotonicity) are measured along a fan of ``M`` equispaced rays through the
bilinear interpolant.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
from scipy import ndimage

from .exceptions import (ContractViolation, EmptyLevelSetError, LevelNotInvadedError,
                         ProfileUndefinedError)
from .fields import GridSpec, ScalarField, ray_length, sample, sample_many

DEFAULT_RAYS = 720
HYSTERESIS = 1e-9
MONOTONE_TOL = 1e-10


@dataclass(frozen=True)
class LevelSetMask:
    theta: float
    grid: GridSpec
    inside: np.ndarray
    time: float = 0.0

    @property
    def empty(self):
        return not self.inside.any()


def upper_level_set(field: ScalarField, theta: float, Z: float = math.inf) -> LevelSetMask:
    """Nodes where ``u > theta``."""
    if not 0 < theta < Z:
        raise ContractViolation(f"threshold {theta} outside (0, Z={Z})")
    inside = field.values > theta
    inside.flags.writeable = False
    return LevelSetMask(theta, field.grid, inside, field.time)


# -- inscribed ball -------------------------------------------------------------

def inscribed_ball(mask: LevelSetMask):
    """Largest lattice ball inside the mask: ``(R_i, (cx, cy))``.

    ``R_i`` is the largest distance from an inside node to the nearest outside
    node, with boundary nodes counted as outside.  Ties go to the smallest
    ``(i, j)`` index.
    """
    if mask.empty:
        raise EmptyLevelSetError("level set is empty")
    d2 = _squared_distance_to_outside(mask.inside)
    # with only boundary nodes inside, every candidate has radius 0: take the first inside node
    k = int(np.argmax(d2)) if d2.any() else int(np.argmax(mask.inside))
    i, j = np.unravel_index(k, d2.shape)
    return math.sqrt(d2[i, j]) * mask.grid.h, mask.grid.node_position(i, j)


def _squared_distance_to_outside(inside):
    core = np.array(inside, dtype=bool)
    core[0, :] = core[-1, :] = core[:, 0] = core[:, -1] = False
    if not core.any():
        return np.zeros(core.shape)
    d = ndimage.distance_transform_edt(core)
    # distances are square roots of integers; recover those integers exactly
    return np.rint(d * d)


# -- enclosing ball ---------------------------------------------------------

def convex_hull(points):
    """Andrew's monotone chain on integer points; returns hull vertices (CCW)."""
    pts = sorted(set(map(tuple, np.asarray(points, dtype=np.int64).tolist())))
    if len(pts) <= 2:
        return np.array(pts, dtype=np.int64).reshape(-1, 2)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1], dtype=np.int64)


def _circle2(a, b):
    cx, cy = (a[0] + b[0]) / 2, (a[1] + b[1]) / 2
    return cx, cy, math.hypot(a[0] - cx, a[1] - cy)


def _circle3(a, b, c):
    bx, by = b[0] - a[0], b[1] - a[1]
    cx, cy = c[0] - a[0], c[1] - a[1]
    d = 2 * (bx * cy - by * cx)
    if abs(d) < 1e-14 * max(1.0, bx * bx + by * by, cx * cx + cy * cy):
        return max((_circle2(a, b), _circle2(a, c), _circle2(b, c)), key=lambda s: s[2])
    b2, c2 = bx * bx + by * by, cx * cx + cy * cy
    ux = (cy * b2 - by * c2) / d
    uy = (bx * c2 - cx * b2) / d
    return ux + a[0], uy + a[1], math.hypot(ux, uy)


def _contains(circ, p):
    return math.hypot(p[0] - circ[0], p[1] - circ[1]) <= circ[2] * (1 + 1e-12) + 1e-12


def min_enclosing_circle(points, seed=0):
    """Smallest circle containing ``points``: ``(cx, cy, r)``.

    Randomised incremental construction (expected linear time) with the
    move-to-front rule: a point found outside the current circle is moved to
    the front of the processing order.
    """
    pts = [tuple(map(float, p)) for p in points]
    if not pts:
        raise EmptyLevelSetError("no points to enclose")
    random.Random(seed).shuffle(pts)
    circ = (pts[0][0], pts[0][1], 0.0)
    i = 1
    while i < len(pts):
        p = pts[i]
        if not _contains(circ, p):
            circ = (p[0], p[1], 0.0)
            for j in range(i):
                q = pts[j]
                if not _contains(circ, q):
                    circ = _circle2(p, q)
                    for k in range(j):
                        s = pts[k]
                        if not _contains(circ, s):
                            circ = _circle3(p, q, s)
            pts.insert(0, pts.pop(i))
        i += 1
    return circ


def _row_extremes(inside):
    """First and last inside node of every row; a superset of the hull vertices."""
    rows = np.flatnonzero(inside.any(axis=1))
    sub = inside[rows]
    first = np.argmax(sub, axis=1)
    last = sub.shape[1] - 1 - np.argmax(sub[:, ::-1], axis=1)
    return np.concatenate([np.column_stack([rows, first]), np.column_stack([rows, last])])


def enclosing_ball(mask: LevelSetMask, seed=0):
    """Smallest ball containing every inside cell: ``(R_e, (cx, cy))``."""
    if mask.empty:
        raise EmptyLevelSetError("level set is empty")
    grid = mask.grid
    hull = convex_hull(_row_extremes(mask.inside))
    coords = (hull - grid.center_index) * grid.h
    cx, cy, r = min_enclosing_circle(coords, seed)
    return r + grid.h / math.sqrt(2), (cx, cy)


def outer_radius(mask: LevelSetMask, origin=(0.0, 0.0)):
    """Radius of the smallest ``origin``-centred ball containing every inside cell."""
    if mask.empty:
        raise EmptyLevelSetError("level set is empty")
    grid = mask.grid
    idx = np.argwhere(mask.inside)
    x = (idx[:, 0] - grid.center_index) * grid.h - origin[0]
    y = (idx[:, 1] - grid.center_index) * grid.h - origin[1]
    return float(np.sqrt((x * x + y * y).max())) + grid.h / math.sqrt(2)


# -- ray fans -----------------------------------------------------------------

@dataclass
class RayFan:
    """Profiles of one field along ``M`` equispaced rays from ``origin``.

    ``values[k, s]`` is ``u(origin + rho[s] * e_k)``; entries beyond the ray's
    exit point are NaN and ``valid`` is False there.
    """

    field: ScalarField
    ray_count: int
    origin: tuple
    step: float
    angles: np.ndarray = dc_field(init=False)
    directions: np.ndarray = dc_field(init=False)
    lengths: np.ndarray = dc_field(init=False)
    rho: np.ndarray = dc_field(init=False)
    values: np.ndarray = dc_field(init=False)
    valid: np.ndarray = dc_field(init=False)

    def __post_init__(self):
        M = int(self.ray_count)
        if M < 3:
            raise ContractViolation("need at least 3 rays")
        grid = self.field.grid
        if not grid.contains(*self.origin):
            raise ContractViolation("ray origin lies outside the domain")
        self.angles = 2 * np.pi * np.arange(M) / M
        self.directions = np.column_stack([np.cos(self.angles), np.sin(self.angles)])
        self.lengths = np.array([ray_length(grid, e, self.origin) for e in self.directions])
        K = int(np.floor(self.lengths.max() / self.step * (1 + 1e-12))) + 1
        self.rho = np.arange(K) * self.step
        self.valid = self.rho[None, :] <= self.lengths[:, None] * (1 + 1e-12)
        xs = self.origin[0] + self.rho[None, :] * self.directions[:, 0:1]
        ys = self.origin[1] + self.rho[None, :] * self.directions[:, 1:2]
        L = grid.half_width
        vals = sample_many(self.field, np.clip(xs, -L, L), np.clip(ys, -L, L))
        self.values = np.where(self.valid, vals, np.nan)

    @classmethod
    def build(cls, field, ray_count=DEFAULT_RAYS, origin=(0.0, 0.0), step=None):
        return cls(field, ray_count, tuple(map(float, origin)),
                   field.grid.h / 2 if step is None else step)

    def center_value(self):
        return sample(self.field, self.origin)

    def crossings(self, theta):
        """Per-ray first radius with ``u <= theta``, refined by bisection to ``h/100``.

        Rays that never drop to ``theta`` report their exit distance.
        """
        if not self.center_value() > theta:
            raise LevelNotInvadedError(
                f"u(t={self.field.time:.6g}, {self.origin}) <= theta={theta}")
        below = (self.values <= theta) & self.valid
        has = below.any(axis=1)
        first = np.where(has, np.argmax(below, axis=1), 0)
        hi = np.where(has, self.rho[first], self.lengths)
        lo = np.where(has, self.rho[np.maximum(first - 1, 0)], self.lengths)
        tol = self.field.grid.h / 100
        ex, ey = self.directions[:, 0], self.directions[:, 1]
        while np.any(hi - lo > tol):
            mid = 0.5 * (lo + hi)
            v = sample_many(self.field, self.origin[0] + mid * ex, self.origin[1] + mid * ey)
            go_low = v <= theta
            hi = np.where(go_low, mid, hi)
            lo = np.where(go_low, lo, mid)
        return hi

    def reentry(self, theta):
        """Index of the first ray whose super-level set is not an interval from 0."""
        below = (self.values <= theta) & self.valid
        seen = np.logical_or.accumulate(below, axis=1)
        back = seen & (self.values > theta + HYSTERESIS) & self.valid
        rays = np.flatnonzero(back.any(axis=1))
        return int(rays[0]) if rays.size else None


def origin_inscribed_radius(field: ScalarField, theta: float, ray_count=DEFAULT_RAYS,
                            origin=(0.0, 0.0), fan: Optional[RayFan] = None) -> float:
    """Radius of the largest ``origin``-centred ball found inside ``{u > theta}``."""
    fan = fan or RayFan.build(field, ray_count, origin)
    return float(fan.crossings(theta).min())


def star_shaped_wrt_origin(field: ScalarField, theta: float, ray_count=DEFAULT_RAYS,
                           origin=(0.0, 0.0), fan: Optional[RayFan] = None) -> bool:
    fan = fan or RayFan.build(field, ray_count, origin)
    if not fan.center_value() > theta:
        raise LevelNotInvadedError(f"u(t={field.time:.6g}, {fan.origin}) <= theta={theta}")
    return fan.reentry(theta) is None


def polar_profile(field: ScalarField, theta: float, ray_count=DEFAULT_RAYS,
                  origin=(0.0, 0.0), fan: Optional[RayFan] = None):
    """``(angles, phi, max_slope)`` for the boundary ``phi(alpha)(cos alpha, sin alpha)``."""
    fan = fan or RayFan.build(field, ray_count, origin)
    if not star_shaped_wrt_origin(field, theta, fan=fan):
        raise ProfileUndefinedError(f"level {theta} is not star-shaped at t={field.time:.6g}")
    phi = fan.crossings(theta)
    dalpha = 2 * np.pi / fan.ray_count
    slope = np.abs(np.roll(phi, -1) - phi) / dalpha
    return fan.angles, phi, float(slope.max())


@dataclass(frozen=True)
class MonotoneCheck:
    passed: bool
    angle: Optional[float] = None
    rho: Optional[float] = None
    increase: float = 0.0

    def __bool__(self):
        return self.passed


def radial_monotone_outside(field: ScalarField, delta: float, ray_count=DEFAULT_RAYS,
                            origin=(0.0, 0.0), fan: Optional[RayFan] = None) -> MonotoneCheck:
    """Checks that every ray profile is decreasing for ``rho >= delta + h``."""
    if not delta < field.grid.half_width:
        raise ContractViolation("delta must be smaller than the half width")
    fan = fan or RayFan.build(field, ray_count, origin)
    start = delta + field.grid.h
    sel = fan.rho >= start
    if sel.sum() < 2:
        return MonotoneCheck(True)
    v = fan.values[:, sel]
    rho = fan.rho[sel]
    diff = v[:, 1:] - v[:, :-1]
    diff = np.where(np.isnan(diff), -np.inf, diff)
    k, s = np.unravel_index(int(np.argmax(diff)), diff.shape)
    worst = float(diff[k, s])
    if worst > MONOTONE_TOL:
        return MonotoneCheck(False, float(fan.angles[k]), float(rho[s + 1]), worst)
    return MonotoneCheck(True, increase=max(worst, 0.0))


def radial_deviation(field: ScalarField, center) -> float:
    """Distance from ``u`` to its angular average about ``center`` (sup norm).

    The average is taken over radial bins of width ``h``.
    """
    grid = field.grid
    if not grid.contains(*center):
        raise ContractViolation("center lies outside the domain")
    X, Y = grid.mesh()
    r = np.hypot(X - center[0], Y - center[1])
    bins = np.floor(r / grid.h).astype(np.intp).ravel()
    u = field.values.ravel()
    counts = np.bincount(bins)
    # average offsets from the bin minimum so that constant bins come out exact
    low = np.full(counts.size, np.inf)
    np.minimum.at(low, bins, u)
    off = u - low[bins]
    mean_off = np.bincount(bins, weights=off) / np.maximum(counts, 1)
    return float(np.abs(off - mean_off[bins]).max())


# -- per-time summary --------------------------------------------------------

@dataclass
class GeometrySummary:
    """One record of level-set geometry; ``None`` marks an absent measurement."""

    t: float
    theta: float
    R_i: Optional[float] = None
    center_i: Optional[tuple] = None
    R_e: Optional[float] = None
    center_e: Optional[tuple] = None
    r_origin: Optional[float] = None
    star_shaped: Optional[bool] = None
    max_polar_slope: Optional[float] = None
    radial_dev: Optional[float] = None
    solution_id: str = "u"
    # diagnostics kept in memory only
    max_phi: Optional[float] = None
    outer_radius: Optional[float] = None
    monotone_outside: Optional[MonotoneCheck] = None

    @property
    def gap(self):
        if self.R_i is None or self.R_e is None:
            return None
        return self.R_e - self.R_i


def summarize(field: ScalarField, theta: float, delta: float, ray_count=DEFAULT_RAYS,
              origin=(0.0, 0.0), seed=0, fan: Optional[RayFan] = None,
              solution_id="u", Z=math.inf) -> GeometrySummary:
    """All level-set measurements for one field and threshold.

    Probes that do not apply yet (empty level set, origin not invaded, not
    star-shaped) leave their fields as ``None``.
    """
    rec = GeometrySummary(field.time, theta, solution_id=solution_id)
    mask = upper_level_set(field, theta, Z)
    if mask.empty:
        return rec
    rec.R_i, rec.center_i = inscribed_ball(mask)
    rec.R_e, rec.center_e = enclosing_ball(mask, seed)
    rec.outer_radius = outer_radius(mask, origin)
    rec.radial_dev = radial_deviation(field, rec.center_i)
    fan = fan or RayFan.build(field, ray_count, origin)
    if delta < field.grid.half_width:
        rec.monotone_outside = radial_monotone_outside(field, delta, fan=fan)
    if fan.center_value() > theta:
        phi = fan.crossings(theta)
        rec.r_origin = float(phi.min())
        rec.star_shaped = fan.reentry(theta) is None
        if rec.star_shaped:
            dalpha = 2 * np.pi / fan.ray_count
            rec.max_polar_slope = float((np.abs(np.roll(phi, -1) - phi) / dalpha).max())
            rec.max_phi = float(phi.max())
    return rec
