"""Reaction terms f(t, z) and sampling-based checks of their structural hypotheses.

The checks are universally quantified statements tested on fixed sample grids:
a pass means that no counterexample was found on those grids.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import ContractViolation

TOL = 1e-12


@dataclass(frozen=True)
class Coefficient:
    """``zeta(t) = a + b*sin(omega*t)`` with ``a > b >= 0``; ``a = b = 0`` gives pure diffusion."""

    a: float
    b: float = 0.0
    omega: float = 1.0

    def __post_init__(self):
        if not (0 <= self.b < self.a or self.a == self.b == 0):
            raise ContractViolation("coefficient needs a > b >= 0 (or a = b = 0)")
        if self.b and not self.omega > 0:
            raise ContractViolation("omega must be positive")

    def __call__(self, t):
        if self.b == 0:
            return self.a + 0.0 * np.asarray(t, dtype=float)
        return self.a + self.b * np.sin(self.omega * np.asarray(t, dtype=float))

    @property
    def sup(self):
        return self.a + self.b

    @property
    def inf(self):
        return self.a - self.b

    @property
    def time_independent(self):
        return self.b == 0

    @property
    def period(self):
        return 2 * math.pi / self.omega if self.b else None

    def to_dict(self):
        return {"a": self.a, "b": self.b, "omega": self.omega}


class ReactionTerm:
    """Base for the closed family of nonlinearities.

    Subclasses implement ``__call__(t, z)`` elementwise on arrays, and expose the
    saturation level ``Z`` and the ignition threshold ``theta0`` (0 when ``f > 0``
    on ``(0, Z)``).
    """

    name = "reaction"
    Z = 1.0
    theta0 = 0.0
    time_independent = True
    period = None

    def __call__(self, t, z):
        raise NotImplementedError

    def sup_slope(self):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError

    def stencil_form(self, t):
        """``(code, coefficient, parameter)`` consumed by the compiled solver kernel."""
        raise NotImplementedError


@dataclass(frozen=True)
class Linear(ReactionTerm):
    zeta: Coefficient = Coefficient(1.0)
    name = "linear"
    Z = math.inf

    def __post_init__(self):
        if not isinstance(self.zeta, Coefficient):
            object.__setattr__(self, "zeta", Coefficient(float(self.zeta)))

    def __call__(self, t, z):
        return self.zeta(t) * z

    def sup_slope(self):
        return self.zeta.sup

    @property
    def time_independent(self):
        return self.zeta.time_independent

    @property
    def period(self):
        return self.zeta.period

    def to_dict(self):
        return {"variant": self.name, "zeta": self.zeta.to_dict()}

    def stencil_form(self, t):
        return 0, float(self.zeta(t)), 0.0


@dataclass(frozen=True)
class FisherKPP(ReactionTerm):
    rho: float = 1.0
    name = "fisher_kpp"

    def __post_init__(self):
        if not self.rho > 0:
            raise ContractViolation("rho must be positive")

    def __call__(self, t, z):
        return self.rho * z * (1.0 - z)

    def sup_slope(self):
        return self.rho

    def to_dict(self):
        return {"variant": self.name, "rho": self.rho}

    def stencil_form(self, t):
        return 1, float(self.rho), 0.0


@dataclass(frozen=True)
class TimePeriodicKPP(ReactionTerm):
    zeta: Coefficient = Coefficient(1.0)
    name = "time_periodic_kpp"

    def __post_init__(self):
        if not isinstance(self.zeta, Coefficient):
            object.__setattr__(self, "zeta", Coefficient(float(self.zeta)))

    def __call__(self, t, z):
        return self.zeta(t) * z * (1.0 - z)

    def sup_slope(self):
        return self.zeta.sup

    @property
    def time_independent(self):
        return self.zeta.time_independent

    @property
    def period(self):
        return self.zeta.period

    def to_dict(self):
        return {"variant": self.name, "zeta": self.zeta.to_dict()}

    def stencil_form(self, t):
        return 1, float(self.zeta(t)), 0.0


@dataclass(frozen=True)
class Combustion(ReactionTerm):
    ignition: float = 0.25
    name = "combustion"

    def __post_init__(self):
        if not 0 < self.ignition < 1:
            raise ContractViolation("ignition threshold must lie in (0, 1)")

    @property
    def theta0(self):
        return self.ignition

    def __call__(self, t, z):
        z = np.asarray(z, dtype=float)
        return np.where((z > self.ignition) & (z <= 1.0),
                        (z - self.ignition) * (1.0 - z), 0.0)

    def sup_slope(self):
        # max of (z - a)(1 - z)/z is attained at z = sqrt(a)
        return (1.0 - math.sqrt(self.ignition)) ** 2

    def to_dict(self):
        return {"variant": self.name, "theta0": self.ignition}

    def stencil_form(self, t):
        return 2, 1.0, float(self.ignition)


@dataclass(frozen=True)
class Bistable(ReactionTerm):
    """``z(1-z)(z-a)``; negative control only."""

    a: float = 0.25
    name = "bistable"

    def __post_init__(self):
        if not 0 < self.a < 0.5:
            raise ContractViolation("bistable a must lie in (0, 1/2)")

    @property
    def theta0(self):
        return self.a

    def __call__(self, t, z):
        return z * (1.0 - z) * (z - self.a)

    def sup_slope(self):
        return ((1.0 - self.a) / 2.0) ** 2

    def to_dict(self):
        return {"variant": self.name, "a": self.a}

    def stencil_form(self, t):
        return 3, 1.0, float(self.a)


VARIANTS = {cls.name: cls for cls in (Linear, FisherKPP, TimePeriodicKPP, Combustion, Bistable)}


def reaction_from_dict(d) -> ReactionTerm:
    d = dict(d)
    variant = d.pop("variant", None)
    if variant not in VARIANTS:
        raise ContractViolation(f"unknown reaction variant {variant!r}")
    if variant in ("linear", "time_periodic_kpp") and "zeta" in d:
        z = d.pop("zeta")
        d["zeta"] = Coefficient(**z) if isinstance(z, dict) else Coefficient(float(z))
    if variant == "combustion" and "theta0" in d:
        d["ignition"] = d.pop("theta0")
    return VARIANTS[variant](**d)


def evaluate(f: ReactionTerm, t, z):
    """``f(t, z)`` for ``z >= 0``."""
    if np.any(np.asarray(z) < 0):
        raise ContractViolation("z must be nonnegative")
    return f(t, z)


# -- sampling grids ---------------------------------------------------------

def default_z_samples(f: ReactionTerm, count=10_000):
    top = 10.0 if math.isinf(f.Z) else f.Z
    return np.logspace(-6, math.log10(top), count)


def default_t_samples(f: ReactionTerm, count=1000):
    span = f.period if f.period else 10.0
    return np.linspace(0.0, span, count)


def default_pairs(f: ReactionTerm, count=200):
    """All pairs ``alpha <= beta`` from a log grid spanning ``(0, Z]``."""
    z = default_z_samples(f, count)
    i, j = np.triu_indices(count)
    return np.column_stack([z[i], z[j]])


@dataclass(frozen=True)
class Witness:
    reason: str
    t: float
    z1: float
    z2: Optional[float] = None

    def __str__(self):
        pts = f"z={self.z1:.6g}" if self.z2 is None else f"z1={self.z1:.6g}, z2={self.z2:.6g}"
        return f"{self.reason} at t={self.t:.6g}, {pts}"


@dataclass(frozen=True)
class CheckResult:
    hypothesis: str
    passed: bool
    witness: Optional[Witness] = None

    def __bool__(self):
        return self.passed

    def __str__(self):
        if self.passed:
            return f"{self.hypothesis}: pass"
        return f"{self.hypothesis}: FAIL ({self.witness})"


def _grids(z_samples, t_samples):
    z = np.asarray(z_samples, dtype=float).ravel()
    t = np.asarray(t_samples, dtype=float).ravel()
    if z.size == 0 or t.size == 0:
        raise ContractViolation("sample grids must be nonempty")
    return z, t


def check_kpp(f: ReactionTerm, z_samples=None, t_samples=None) -> CheckResult:
    """Positivity on ``(0, Z)`` uniformly in t, and ``z -> f(t,z)/z`` nonincreasing."""
    z, t = _grids(default_z_samples(f) if z_samples is None else z_samples,
                  default_t_samples(f) if t_samples is None else t_samples)
    if np.any(z <= 0) or np.any(np.diff(z) <= 0) or np.any(np.diff(t) < 0):
        raise ContractViolation("z samples must be positive and increasing, t sorted")
    F = np.broadcast_to(f(t[:, None], z[None, :]), (t.size, z.size))
    interior = z < f.Z
    low = F[:, interior].min(axis=0)
    bad = np.flatnonzero(low <= 0)
    if bad.size:
        k = bad[0]
        ti = int(np.argmin(F[:, interior][:, k]))
        return CheckResult("KPP", False,
                           Witness("f(t,z) <= 0 inside (0,Z)", float(t[ti]), float(z[interior][k])))
    q = F / z[None, :]
    # for each z2, the smallest ratio over all z1 < z2
    run_min = np.minimum.accumulate(q, axis=1)
    prev = np.concatenate([np.full((t.size, 1), np.inf), run_min[:, :-1]], axis=1)
    viol = prev < q - TOL
    if viol.any():
        ti, j = np.argwhere(viol)[0]
        i1 = int(np.argmin(q[ti, :j]))
        return CheckResult("KPP", False,
                           Witness("f(t,z)/z increases", float(t[ti]), float(z[i1]), float(z[j])))
    return CheckResult("KPP", True)


def check_superposition(f: ReactionTerm, pairs=None, t_samples=None) -> CheckResult:
    """``f(t, a+b) <= f(t, a) + f(t, b)`` for the sampled ``0 < a <= b``."""
    P = np.asarray(default_pairs(f) if pairs is None else pairs, dtype=float).reshape(-1, 2)
    _, t = _grids(P.ravel(), default_t_samples(f) if t_samples is None else t_samples)
    a, b = P[:, 0], P[:, 1]
    if np.any(a <= 0) or np.any(a > b):
        raise ContractViolation("pairs must satisfy 0 < alpha <= beta")
    T = t[:, None]
    excess = np.broadcast_to(f(T, a + b) - (f(T, a) + f(T, b)), (t.size, a.size))
    if np.any(excess > TOL):
        ti, k = np.unravel_index(int(np.argmax(excess)), excess.shape)
        return CheckResult("superposition", False,
                           Witness("f(t,a+b) > f(t,a) + f(t,b)", float(t[ti]),
                                   float(a[k]), float(b[k])))
    return CheckResult("superposition", True)


def check_lower_bound(f: ReactionTerm, g: ReactionTerm, z_samples=None,
                      t_samples=None) -> CheckResult:
    """``f(t,z) >= g(z)`` plus the sign pattern and positive integral of ``g``."""
    if not g.time_independent:
        raise ContractViolation("g must be time-independent")
    Z = g.Z
    if math.isinf(Z):
        raise ContractViolation("g needs a finite saturation level Z")
    z, t = _grids(np.linspace(0.0, Z, 10_001)[1:] if z_samples is None else z_samples,
                  default_t_samples(f) if t_samples is None else t_samples)
    G = np.broadcast_to(g(0.0, z), z.shape)
    F = np.broadcast_to(f(t[:, None], z[None, :]), (t.size, z.size))
    short = F < G[None, :] - TOL
    if short.any():
        ti, k = np.argwhere(short)[0]
        return CheckResult("lower bound", False,
                           Witness("f(t,z) < g(z)", float(t[ti]), float(z[k])))
    th0 = g.theta0
    below = (z > 0) & (z < th0)
    between = (z > th0) & (z < Z)
    if np.any(G[below] > 0):
        k = np.flatnonzero(below & (G > 0))[0]
        return CheckResult("lower bound", False, Witness("g > 0 below theta0", 0.0, float(z[k])))
    if np.any(G[between] <= 0):
        k = np.flatnonzero(between & (G <= 0))[0]
        return CheckResult("lower bound", False,
                           Witness("g <= 0 on (theta0, Z)", 0.0, float(z[k])))
    zz = np.linspace(0.0, Z, 10_001)
    if not np.trapezoid(g(0.0, zz), zz) > 0:
        return CheckResult("lower bound", False,
                           Witness("integral of g over (0,Z) is not positive", 0.0, float(Z)))
    return CheckResult("lower bound", True)
