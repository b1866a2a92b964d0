"""Monotone explicit finite differences for u_t = Lap u + f(t, u).

The 2-D scheme is forward Euler with the 5-point Laplacian and zero ghost values
outside ``[-L, L]^2``. Under ``dt <= h^2/4`` (and ``dt * Lip(f)`` small) the update
is a nondecreasing map of the nodal values, so discrete comparison holds exactly
up to rounding; every comparison experiment relies on this.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numba
import numpy as np

from .exceptions import ContractViolation, DomainTooSmallError, NumericalBlowupError
from .fields import DatumSpec, GridSpec, ScalarField, make_field
from .reactions import ReactionTerm

_DT_SLACK = 1 + 1e-12


@numba.njit(nogil=True, cache=True)
def _reaction(code, coef, param, z):
    # mirrors ReactionTerm.__call__ for each variant code
    if code == 0:
        return coef * z
    if code == 1:
        return coef * z * (1.0 - z)
    if code == 2:
        if z > param and z <= 1.0:
            return (z - param) * (1.0 - z)
        return 0.0
    return z * (1.0 - z) * (z - param)


@numba.njit(nogil=True, cache=True)
def _stencil_rows(u, out, dt, h2, code, coef, param, r0, r1):
    n, m = u.shape
    for i in range(r0, r1):
        for j in range(m):
            up = u[i + 1, j] if i + 1 < n else 0.0
            dn = u[i - 1, j] if i > 0 else 0.0
            rt = u[i, j + 1] if j + 1 < m else 0.0
            lf = u[i, j - 1] if j > 0 else 0.0
            c = u[i, j]
            lap = (up + dn + rt + lf - 4.0 * c) / h2
            out[i, j] = c + dt * (lap + _reaction(code, coef, param, c))


def _row_blocks(n, parts):
    parts = max(1, min(parts, n))
    edges = np.linspace(0, n, parts + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


class _Stepper:
    """Reusable buffers and worker pool for repeated 2-D steps.

    Every output node is written once from the previous field only, so the
    result does not depend on how rows are split across workers.
    """

    def __init__(self, grid: GridSpec, f: ReactionTerm, threads=1):
        self.grid = grid
        self.f = f
        self.h2 = grid.h * grid.h
        self.blocks = _row_blocks(grid.n, threads)
        self.pool = ThreadPoolExecutor(len(self.blocks)) if len(self.blocks) > 1 else None

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()

    def step(self, u, out, t, dt):
        code, coef, param = self.f.stencil_form(t)
        args = (u, out, dt, self.h2, code, coef, param)
        if self.pool is None:
            _stencil_rows(*args, 0, u.shape[0])
        else:
            futures = [self.pool.submit(_stencil_rows, *args, a, b) for a, b in self.blocks]
            for fut in futures:
                fut.result()
        return out

    def advance(self, u, t, dt, nsteps):
        u = np.array(u, dtype=np.float64, order="C")
        out = np.empty_like(u)
        for k in range(nsteps):
            self.step(u, out, t + k * dt, dt)
            u, out = out, u
        if not np.all(np.isfinite(u)):
            raise NumericalBlowupError(f"non-finite values before t={t + nsteps * dt:.6g}",
                                       time=t + nsteps * dt)
        return u


def step_2d(field: ScalarField, f: ReactionTerm, dt: float, threads=1) -> ScalarField:
    """One forward-Euler step of the 5-point scheme."""
    h = field.grid.h
    if not 0 < dt <= h * h / 4 * _DT_SLACK:
        raise ContractViolation(f"dt={dt} violates the stability bound h^2/4={h * h / 4}")
    stepper = _Stepper(field.grid, f, threads)
    try:
        out = stepper.step(np.array(field.values), np.empty((field.grid.n,) * 2),
                           field.time, dt)
    finally:
        stepper.close()
    if not np.all(np.isfinite(out)):
        raise NumericalBlowupError(f"non-finite values at t={field.time + dt:.6g}",
                                   time=field.time + dt)
    return ScalarField(field.grid, out, field.time + dt)


# -- radial reduction -------------------------------------------------------

@dataclass(frozen=True)
class RadialProfile:
    """Radially symmetric solution sampled at ``r_k = k*h``, ``k = 0..m``.

    The last node carries the homogeneous Dirichlet condition.
    """

    dimension: int
    h: float
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ContractViolation("dimension must be an integer >= 1")
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 1 or v.size < 3:
            raise ContractViolation("radial profile needs at least 3 nodes")
        if not np.all(np.isfinite(v)):
            raise ContractViolation("radial values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def radii(self):
        return np.arange(self.values.size) * self.h

    @classmethod
    def from_function(cls, dimension, h, radius, func, time=0.0):
        m = int(round(radius / h))
        r = np.arange(m + 1) * h
        v = np.asarray(func(r), dtype=float)
        v[-1] = 0.0
        return cls(dimension, h, v, time)

    def interpolate(self, r):
        return np.interp(r, self.radii, self.values, right=0.0)


def _radial_update(u, fu, dim, h, dt):
    out = np.empty_like(u)
    r = np.arange(1, u.size - 1) * h
    upr = u[2:]
    dnr = u[:-2]
    urr = (upr - 2.0 * u[1:-1] + dnr) / (h * h)
    ur = (upr - dnr) / (2.0 * h)
    out[1:-1] = u[1:-1] + dt * (urr + (dim - 1) / r * ur + fu[1:-1])
    # symmetry ghost u_{-1} = u_1 and Lap u(0) = N u''(0)
    out[0] = u[0] + dt * (2.0 * dim * (u[1] - u[0]) / (h * h) + fu[0])
    out[-1] = 0.0
    return out


def step_radial(profile: RadialProfile, f: ReactionTerm, dt: float) -> RadialProfile:
    """One forward-Euler step of ``u_rr + (N-1)/r u_r + f``.

    The centre stencil is monotone only for ``dt <= h^2/(2N)``; callers that need
    positivity for ``N > 1`` should stay below that.
    """
    h = profile.h
    if not 0 < dt <= h * h / 2 * _DT_SLACK:
        raise ContractViolation(f"dt={dt} violates the stability bound h^2/2={h * h / 2}")
    u = np.array(profile.values)
    out = _radial_update(u, f(profile.time, u), profile.dimension, h, dt)
    if not np.all(np.isfinite(out)):
        raise NumericalBlowupError(f"non-finite radial values at t={profile.time + dt:.6g}",
                                   time=profile.time + dt)
    return RadialProfile(profile.dimension, h, out, profile.time + dt)


def run_radial(profile: RadialProfile, f: ReactionTerm, t_end: float,
               dt_max: float) -> RadialProfile:
    nsteps = max(1, math.ceil((t_end - profile.time) / dt_max - 1e-9))
    dt = (t_end - profile.time) / nsteps
    u = np.array(profile.values)
    t0 = profile.time
    for k in range(nsteps):
        u = _radial_update(u, f(t0 + k * dt, u), profile.dimension, profile.h, dt)
    if not np.all(np.isfinite(u)):
        raise NumericalBlowupError("non-finite radial values", time=t_end)
    return RadialProfile(profile.dimension, profile.h, u, t_end)


# -- time loop --------------------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    grid: GridSpec
    t_end: float
    record_interval: float
    cfl_fraction: float = 0.8
    boundary_tolerance: float = 1e-6
    boundary: str = "dirichlet"

    def __post_init__(self):
        if not 0 < self.cfl_fraction < 1:
            raise ContractViolation("cfl_fraction must lie in (0, 1)")
        if self.t_end < 0:
            raise ContractViolation("t_end must be nonnegative")
        if not self.record_interval >= self.dt:
            raise ContractViolation("record_interval must be at least one time step")
        if self.boundary != "dirichlet":
            raise ContractViolation("only homogeneous Dirichlet boundaries are supported")
        if not self.boundary_tolerance > 0:
            raise ContractViolation("boundary_tolerance must be positive")

    @property
    def dt(self):
        return self.cfl_fraction * self.grid.h ** 2 / 4

    def record_times(self):
        times = [0.0]
        k = 1
        while k * self.record_interval < self.t_end - 1e-9 * self.record_interval:
            times.append(k * self.record_interval)
            k += 1
        if self.t_end > 0:
            times.append(float(self.t_end))
        return times


@dataclass
class Trajectory:
    """Record-time output of a run: probe payloads, optional snapshots, metadata."""

    times: list = field(default_factory=list)
    records: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def append(self, time, payload):
        if self.times and not time > self.times[-1]:
            raise ContractViolation("trajectory times must increase")
        if not self.times and time != 0:
            raise ContractViolation("a trajectory starts at t=0")
        self.times.append(time)
        self.records.append(payload)


def boundary_guard(field: ScalarField, tol: float = 1e-6) -> None:
    """Raises :class:`DomainTooSmallError` if any boundary node exceeds ``tol``."""
    v = field.values
    edges = [(v[0, :], lambda k: (0, k)), (v[-1, :], lambda k: (v.shape[0] - 1, k)),
             (v[:, 0], lambda k: (k, 0)), (v[:, -1], lambda k: (k, v.shape[1] - 1))]
    worst, where = -1.0, None
    for edge, index in edges:
        k = int(np.argmax(np.abs(edge)))
        if abs(edge[k]) > worst:
            worst, where = float(abs(edge[k])), index(k)
    if worst > tol:
        pos = field.grid.node_position(*where)
        raise DomainTooSmallError(
            f"|u|={worst:.3g} > {tol:g} on the boundary at x={pos} (t={field.time:.6g})",
            max_value=worst, location=pos, time=field.time)


def _initial_field(config: SolverConfig, initial) -> ScalarField:
    if isinstance(initial, DatumSpec):
        return make_field(config.grid, initial)
    if isinstance(initial, ScalarField):
        if initial.grid != config.grid:
            raise ContractViolation("initial field lives on a different grid")
        return initial
    raise ContractViolation("initial datum must be a DatumSpec or a ScalarField")


def iterate(config: SolverConfig, initial, f: ReactionTerm, threads=1) -> Iterator[ScalarField]:
    """Yields the solution at every record time, guarding the boundary each time."""
    u0 = _initial_field(config, initial)
    boundary_guard(u0, config.boundary_tolerance)
    yield u0
    stepper = _Stepper(config.grid, f, threads)
    try:
        times = config.record_times()
        u = u0.values
        for t0, t1 in zip(times[:-1], times[1:]):
            nsteps = max(1, math.ceil((t1 - t0) / config.dt - 1e-9))
            try:
                u = stepper.advance(u, t0, (t1 - t0) / nsteps, nsteps)
            except NumericalBlowupError as err:
                raise NumericalBlowupError(f"{err} (segment ending at t={t1:.6g})", time=t1)
            snap = ScalarField(config.grid, u, t1)
            boundary_guard(snap, config.boundary_tolerance)
            yield snap
    finally:
        stepper.close()


def run(config: SolverConfig, datum, f: ReactionTerm,
        probes: Sequence[Callable[[ScalarField], object]] = (), threads=1,
        keep_snapshots=False) -> Trajectory:
    traj = Trajectory(metadata={"config": config, "reaction": f, "datum": datum})
    for snap in iterate(config, datum, f, threads):
        traj.append(snap.time, [probe(snap) for probe in probes])
        if keep_snapshots:
            traj.snapshots[snap.time] = snap
    return traj


# -- comparisons and translations -----------------------------------------

@dataclass(frozen=True)
class Comparison:
    passed: bool
    max_excess: float
    location: tuple

    def __bool__(self):
        return self.passed


def pointwise_leq(a: ScalarField, b: ScalarField, tol: float = 0.0) -> Comparison:
    """Checks ``a <= b + tol`` nodewise and reports the worst excess ``max(a - b)``."""
    if a.grid != b.grid:
        raise ContractViolation("fields live on different grids")
    if abs(a.time - b.time) > 1e-9 * max(1.0, abs(a.time)):
        raise ContractViolation("fields are recorded at different times")
    d = a.values - b.values
    k = np.unravel_index(int(np.argmax(d)), d.shape)
    excess = float(d[k])
    return Comparison(excess <= tol, excess, a.grid.node_position(*k))


def translate_field(field: ScalarField, shift) -> ScalarField:
    """``(tau_shift u)(x) = u(x - shift)`` for a lattice ``shift``; zeros flow in."""
    si, sj = field.grid.lattice_steps(shift)
    v = field.values
    n = field.grid.n
    out = np.zeros_like(v)
    if abs(si) < n and abs(sj) < n:
        src_i = slice(max(0, -si), n - max(0, si))
        dst_i = slice(max(0, si), n - max(0, -si))
        src_j = slice(max(0, -sj), n - max(0, sj))
        dst_j = slice(max(0, sj), n - max(0, -sj))
        out[dst_i, dst_j] = v[src_i, src_j]
    return field.with_values(out)


def pointwise_max(*fields: ScalarField) -> ScalarField:
    return fields[0].with_values(np.maximum.reduce([f.values for f in fields]))


def pointwise_min(*fields: ScalarField) -> ScalarField:
    return fields[0].with_values(np.minimum.reduce([f.values for f in fields]))
