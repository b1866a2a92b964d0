"""Declarative scenarios and their verdicts.

A scenario is run once (several solutions in lockstep when it compares
solutions); every record time yields :class:`GeometrySummary` rows.  Verdicts
are split in two groups:

* row verdicts, pure functions of the rows (and therefore recomputable from
  ``report.csv``), built by :func:`derive_verdicts`;
* run-time verdicts that need whole fields (pointwise comparisons, radial
  monotonicity), attached by the ``run_*`` functions.

Asymptotic statements are replaced by finite proxies: "t large enough" means
after the first record where the origin-centred radius exceeds the support
radius, and a ``liminf`` is the minimum over the late window
``[t_end * (1 - late_fraction), t_end]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import ContractViolation, NumericalBlowupError
from .fields import Bump, DatumSpec, GridSpec, ScalarField, make_field
from .geometry import DEFAULT_RAYS, GeometrySummary, RayFan, summarize
from .reactions import ReactionTerm, check_kpp, check_lower_bound
from .solver import SolverConfig, iterate, pointwise_leq, pointwise_max, pointwise_min

COMPARISON_TOL = 1e-9
# unbounded growth (Z = inf) keeps level sets meaningful only while values stay representable
GROWTH_CAP = 1e15


# -- scenarios ------------------------------------------------------------------

@dataclass(frozen=True)
class Symmetrization:
    """``invasion_radius`` certifies invasion for non-KPP reactions (datum above every
    threshold on that ball)."""

    datum: DatumSpec
    thetas: tuple = (0.5,)
    invasion_radius: Optional[float] = None
    kind = "symmetrization"


@dataclass(frozen=True)
class AntiSymmetrization:
    """Solution from ``u1 + u2(. + xi)`` against the references from ``u1`` and ``u2(. + xi)``.

    ``origin`` is the reference point of ``u1`` (centre of its support ball).
    """

    u1: DatumSpec
    u2: DatumSpec
    xi: tuple
    theta: float = 0.5
    theta_prime: float = 0.25
    origin: tuple = (0.0, 0.0)
    kind = "anti_symmetrization"

    @property
    def xi_norm(self):
        return math.hypot(*self.xi)

    def combined(self):
        return self.u1 | self.second()

    def second(self):
        return self.u2.translated((-self.xi[0], -self.xi[1]))

    @property
    def center(self):
        """Midpoint between the two support centres; origin for ``u``'s rays."""
        return (self.origin[0] - self.xi[0] / 2, self.origin[1] - self.xi[1] / 2)


@dataclass(frozen=True)
class Steepness:
    datum: DatumSpec
    theta_prime: float
    theta: float
    g: Optional[ReactionTerm] = None
    width_cap: float = 5.0
    shift_T: float = 1.0
    invasion_radius: Optional[float] = None
    kind = "steepness"


@dataclass(frozen=True)
class SpreadingSpeed:
    datum: DatumSpec
    theta: float
    window: tuple
    slack: float = 0.05
    kind = "spreading_speed"


@dataclass(frozen=True)
class TwoSolutionComparison:
    datum1: DatumSpec
    datum2: DatumSpec
    theta: float
    theta_prime: float
    shift: tuple = (0.0, 0.0)
    cap: float = 5.0
    kind = "two_solution"


SCENARIOS = {cls.kind: cls for cls in
             (Symmetrization, AntiSymmetrization, Steepness, SpreadingSpeed, TwoSolutionComparison)}


@dataclass(frozen=True)
class Setting:
    """Everything besides the scenario that determines a run."""

    solver: SolverConfig
    reaction: ReactionTerm
    ray_count: int = DEFAULT_RAYS
    seed: int = 0
    threads: int = 1
    late_fraction: float = 0.5

    @property
    def grid(self) -> GridSpec:
        return self.solver.grid

    @property
    def h(self):
        return self.grid.h

    @property
    def late_start(self):
        return self.solver.t_end * (1 - self.late_fraction)

    def tol_geom(self, phi_max):
        return 5 * self.h + 2 * math.pi * phi_max / self.ray_count


# -- reports --------------------------------------------------------------------

@dataclass
class Verdict:
    name: str
    inequality: str
    measured: Optional[float]
    bound: Optional[float]
    status: str
    expected: str = "pass"
    note: str = ""

    @property
    def ok(self):
        return self.expected == "none" or self.status in ("inconclusive", self.expected)


@dataclass
class Report:
    scenario: object
    rows: list
    verdicts: list = field(default_factory=list)
    derived: dict = field(default_factory=dict)

    @property
    def failures(self):
        return [v for v in self.verdicts if not v.ok]

    def verdict(self, name):
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    def series(self, solution_id, theta, attr):
        rows = [r for r in self.rows if r.solution_id == solution_id and r.theta == theta]
        return (np.array([r.t for r in rows]),
                np.array([np.nan if getattr(r, attr) is None else getattr(r, attr) for r in rows],
                         dtype=float))


def _status(ok):
    return "pass" if ok else "fail"


def _inconclusive(name, inequality, note):
    return Verdict(name, inequality, None, None, "inconclusive", note=note)


def _phi_bound(row, origin):
    """Upper bound for the farthest boundary point from ``origin``."""
    return math.hypot(row.center_e[0] - origin[0], row.center_e[1] - origin[1]) + row.R_e


def _index(rows):
    return {(r.solution_id, r.theta, round(r.t, 9)): r for r in rows}


def _times(rows):
    return sorted({round(r.t, 9) for r in rows})


# -- simulation plumbing ---------------------------------------------------------

def _simulate(setting: Setting, initials: dict, measure: dict, origins: dict, deltas: dict,
              on_record=None):
    """Runs all ``initials`` in lockstep and measures ``measure[sid]`` thresholds.

    ``on_record(fields, rows)`` sees every record (fields keyed by solution id).
    """
    iters = {sid: iterate(setting.solver, init, setting.reaction, setting.threads)
             for sid, init in initials.items()}
    rows = []
    for fields in zip(*iters.values()):
        snap = dict(zip(iters, fields))
        for sid, fld in snap.items():
            top = float(fld.values.max())
            if top > GROWTH_CAP:
                raise NumericalBlowupError(
                    f"max {sid} = {top:.3g} exceeds {GROWTH_CAP:g}; shorten t_end",
                    time=fld.time)
        new = []
        for sid, thetas in measure.items():
            fan = RayFan.build(snap[sid], setting.ray_count, origins.get(sid, (0.0, 0.0)))
            for theta in thetas:
                new.append(summarize(snap[sid], theta, deltas[sid], seed=setting.seed, fan=fan,
                                     solution_id=sid, Z=setting.reaction.Z))
        rows.extend(new)
        if on_record is not None:
            on_record(snap, new)
    return rows


def _check_thresholds(f: ReactionTerm, *thetas):
    for th in thetas:
        if not 0 < th < f.Z:
            raise ContractViolation(f"threshold {th} outside (0, Z={f.Z})")


class _ComparisonLog:
    """Worst excess of each named pointwise inequality over all record times."""

    def __init__(self, pairs):
        self.pairs = pairs
        self.worst = {name: -math.inf for name, _, _ in pairs}
        self.where = {}

    def __call__(self, snap, rows):
        for name, lo, hi in self.pairs:
            cmp = pointwise_leq(lo(snap), hi(snap), COMPARISON_TOL)
            if cmp.max_excess > self.worst[name]:
                self.worst[name] = cmp.max_excess
                self.where[name] = (snap[next(iter(snap))].time, cmp.location)

    def verdicts(self):
        out = []
        for name, _, _ in self.pairs:
            w = self.worst[name]
            t, loc = self.where.get(name, (None, None))
            out.append(Verdict(f"comparison:{name}", name, w, COMPARISON_TOL,
                               _status(w <= COMPARISON_TOL),
                               note=f"worst excess at t={t:g}, x=({loc[0]:.6g}, {loc[1]:.6g})"))
        return out


def _monotone_verdict(rows, start_times, delta):
    checked = [r for r in rows if r.monotone_outside is not None
               and r.t >= start_times.get(r.theta, math.inf)]
    if not checked:
        return _inconclusive("radial_monotone", "x.grad u < 0 outside B_delta",
                             "no post-transient record")
    bad = [r for r in checked if not r.monotone_outside.passed]
    worst = max(r.monotone_outside.increase for r in checked)
    note = ""
    if bad:
        m = bad[0].monotone_outside
        note = f"t={bad[0].t}: ray angle {m.angle:.4f}, rho={m.rho:.4f}"
    return Verdict("radial_monotone", f"u decreasing along rays for rho >= {delta:.6g} + h",
                   worst, 1e-10, _status(not bad), note=note)


# -- row verdicts -------------------------------------------------------------------

def derive_verdicts(scenario, rows, setting: Setting):
    """Verdicts that depend on the summary rows only."""
    kind = scenario.kind
    if kind == "symmetrization":
        return _symmetrization_verdicts(scenario, rows, setting)[0]
    if kind == "anti_symmetrization":
        return _antisym_verdicts(scenario, rows, setting)[0]
    if kind == "steepness":
        return _steepness_verdicts(scenario, rows, setting)[0]
    if kind == "spreading_speed":
        return _speed_verdicts(scenario, rows, setting)[0]
    if kind == "two_solution":
        return _two_solution_verdicts(scenario, rows, setting)[0]
    raise ContractViolation(f"unknown scenario kind {kind!r}")


def transient_end(rows, solution_id, theta, delta):
    """First record time where ``r_origin >= delta`` (``None`` if never)."""
    for r in sorted(rows, key=lambda r: r.t):
        if r.solution_id == solution_id and r.theta == theta and r.r_origin is not None \
                and r.r_origin >= delta:
            return r.t
    return None


def _symmetrization_verdicts(s: Symmetrization, rows, setting: Setting):
    delta = s.datum.delta(setting.h)
    out, starts = [], {}
    for theta in s.thetas:
        t0 = transient_end(rows, "u", theta, delta)
        tag = f"[theta={theta:g}]"
        if t0 is None:
            note = f"level {theta} never contains B_delta before t_end"
            out += [_inconclusive(f"star_shaped{tag}", "U_theta star-shaped", note),
                    _inconclusive(f"gap{tag}", "R_e - R_i <= delta*pi + tol_geom", note),
                    _inconclusive(f"annulus{tag}", "U_theta in B(r_origin + delta*pi + tol_geom)",
                                  note)]
            continue
        starts[theta] = t0
        post = [r for r in rows if r.solution_id == "u" and r.theta == theta and r.t >= t0]
        not_star = [r.t for r in post if not r.star_shaped]
        out.append(Verdict(f"star_shaped{tag}", "U_theta star-shaped w.r.t. the origin",
                           float(len(not_star)), 0.0, _status(not not_star),
                           note=f"transient end t0={t0}" + (f"; fails at t={not_star[0]}"
                                                            if not_star else "")))
        excess_gap, excess_ann = [], []
        for r in post:
            phi = _phi_bound(r, (0.0, 0.0))
            tol = setting.tol_geom(phi)
            excess_gap.append((r.gap - delta * math.pi - tol, r))
            excess_ann.append((phi - r.r_origin - delta * math.pi - tol, r))
        e, r = max(excess_gap, key=lambda p: p[0])
        out.append(Verdict(f"gap{tag}", "R_e - R_i <= delta*pi + tol_geom", r.gap,
                           r.gap - e, _status(e <= 0), note=f"worst at t={r.t}"))
        e, r = max(excess_ann, key=lambda p: p[0])
        out.append(Verdict(f"annulus{tag}",
                           "|c_e| + R_e <= r_origin + delta*pi + tol_geom", e, 0.0,
                           _status(e <= 0), note=f"worst excess at t={r.t}"))
    return out, starts


def _late(rows, setting):
    return [r for r in rows if r.t >= setting.late_start - 1e-9]


def _antisym_verdicts(s: AntiSymmetrization, rows, setting: Setting):
    h = setting.h
    d_ref = s.u1.delta(h, s.origin)
    idx = _index(rows)
    th, th2 = s.theta, s.theta / 2
    half = s.xi_norm / 2
    out = []
    post, derived = [], {}
    for t in _times(rows):
        u = idx.get(("u", th, t))
        w = idx.get(("w1", th, t))
        w2 = idx.get(("w1", th2, t))
        if None in (u, w, w2) or u.R_e is None or w.r_origin is None or w2.r_origin is None:
            continue
        if w.r_origin < d_ref:
            continue
        post.append((t, u, w, w2))
    if not post:
        note = "reference level never contains its support ball"
        return [_inconclusive("re_lower", "R_e(u) >= r_ref(theta) + |xi|/2 - tol_geom", note),
                _inconclusive("ri_upper", "R_i(u) <= r_ref(theta/2) + delta_ref*pi + tol_geom",
                              note)], derived
    ex_re, ex_ri = [], []
    for t, u, w, w2 in post:
        tol = setting.tol_geom(max(_phi_bound(u, s.center), _phi_bound(w2, s.origin)))
        ex_re.append((w.r_origin + half - tol - u.R_e, t))
        ex_ri.append((u.R_i - w2.r_origin - d_ref * math.pi - tol, t))
    e, t = max(ex_re)
    out.append(Verdict("re_lower", "R_e(u) >= r_ref(theta) + |xi|/2 - tol_geom", e, 0.0,
                       _status(e <= 0), note=f"worst excess at t={t}"))
    e, t = max(ex_ri)
    out.append(Verdict("ri_upper", "R_i(u) <= r_ref(theta/2) + delta_ref*pi + tol_geom", e, 0.0,
                       _status(e <= 0), note=f"worst excess at t={t}"))

    late_u = [r for r in _late(rows, setting) if r.solution_id == "u" and r.theta == th
              and r.gap is not None]
    late_w = [r for r in _late(rows, setting) if r.solution_id == "w1" and r.theta == th
              and r.gap is not None]
    if late_u and late_w:
        gap_u = min(r.gap for r in late_u)
        gap_w = max(r.gap for r in late_w)
        tol = setting.tol_geom(max(_phi_bound(r, s.origin) for r in late_w))
        derived.update(late_min_gap=gap_u, reference_late_max_gap=gap_w)
        out.append(Verdict("reference_gap", "late gap(w1) <= delta_ref*pi + tol_geom", gap_w,
                           d_ref * math.pi + tol, _status(gap_w <= d_ref * math.pi + tol)))
        out.append(Verdict("sphericality", "late min gap(u) <= delta_ref*pi + tol_geom", gap_u,
                           d_ref * math.pi + tol, _status(gap_u <= d_ref * math.pi + tol),
                           expected="none",
                           note="informational; fail means non-sphericality detected"))
        derived["late_min_ri_minus_re"] = min(
            r_p.R_i - r.R_e for r in late_u
            for r_p in [idx.get(("u", s.theta_prime, round(r.t, 9)))]
            if r_p is not None and r_p.R_i is not None)
    return out, derived


def _steepness_verdicts(s: Steepness, rows, setting: Setting):
    delta = s.datum.delta(setting.h)
    idx = _index(rows)
    out, derived = [], {}
    widths = []
    for t in _times(rows):
        a = idx.get(("u", s.theta_prime, t))
        b = idx.get(("u", s.theta, t))
        if a is None or b is None or a.r_origin is None or b.r_origin is None:
            continue
        if b.r_origin < delta:
            continue
        widths.append((t, a.r_origin - b.r_origin))
    late = [(t, w) for t, w in widths if t >= setting.late_start - 1e-9]
    ineq = f"min over late window of r_{s.theta_prime:g} - r_{s.theta:g} <= {s.width_cap:g}"
    if not late:
        out.append(_inconclusive("width_liminf", ineq, "level pair not invaded in late window"))
        return out, derived
    wmin = min(w for _, w in late)
    derived.update(late_min_width=wmin, late_max_width=max(w for _, w in late))
    out.append(Verdict("width_liminf", ineq, wmin, s.width_cap, _status(wmin <= s.width_cap)))
    out.append(Verdict("width_sup", "late-window maximum width (reported, no bound asserted)",
                       derived["late_max_width"], None, "info", expected="none"))
    cstar = 2 * math.sqrt(setting.reaction.sup_slope())
    T = s.shift_T
    jumps = []
    for t, _ in late:
        a = idx.get(("u", s.theta, t))
        b = idx.get(("u", s.theta, round(t + T, 9)))
        if b is not None and b.r_origin is not None and a.r_origin is not None:
            jumps.append(b.r_origin - a.r_origin)
    ineq = f"r_theta(t+{T:g}) - r_theta(t) <= (c*+1)*{T:g}, c*={cstar:.6g}"
    if jumps:
        out.append(Verdict("time_variation", ineq, max(jumps), (cstar + 1) * T,
                           _status(max(jumps) <= (cstar + 1) * T)))
    else:
        out.append(_inconclusive("time_variation", ineq, "no record pair T apart in late window"))
    return out, derived


@dataclass(frozen=True)
class SpeedFit:
    slope: float
    intercept: float
    max_residual: float
    count: int


def estimate_speed(times, radii, window) -> SpeedFit:
    """Least-squares line through ``(t, r)`` restricted to ``window``."""
    t = np.asarray(times, dtype=float)
    r = np.asarray(radii, dtype=float)
    a, b = window
    sel = (t >= a - 1e-9) & (t <= b + 1e-9) & np.isfinite(r)
    if sel.sum() < 3:
        raise ContractViolation("need at least 3 defined radii inside the fit window")
    A = np.column_stack([t[sel], np.ones(sel.sum())])
    (slope, intercept), *_ = np.linalg.lstsq(A, r[sel], rcond=None)
    resid = r[sel] - (slope * t[sel] + intercept)
    return SpeedFit(float(slope), float(intercept), float(np.abs(resid).max()), int(sel.sum()))


def estimate_speed_from_rows(rows, theta, window, solution_id="u") -> SpeedFit:
    sel = sorted((r for r in rows if r.solution_id == solution_id and r.theta == theta),
                 key=lambda r: r.t)
    t = [r.t for r in sel if window[0] - 1e-9 <= r.t <= window[1] + 1e-9]
    rr = [r.r_origin for r in sel if window[0] - 1e-9 <= r.t <= window[1] + 1e-9]
    if any(v is None for v in rr):
        raise ContractViolation("r_origin undefined inside the fit window")
    return estimate_speed(t, rr, window)


def _speed_verdicts(s: SpreadingSpeed, rows, setting: Setting):
    cstar = 2 * math.sqrt(setting.reaction.sup_slope())
    ineq = f"fitted speed <= c* = 2*sqrt(sup f/z) = {cstar:.6g} (+{s.slack:g})"
    try:
        fit = estimate_speed_from_rows(rows, s.theta, s.window)
    except ContractViolation as err:
        return [_inconclusive("speed_upper_bound", ineq, str(err))], {}
    derived = {"speed": fit.slope, "intercept": fit.intercept,
               "max_residual": fit.max_residual, "c_star": cstar}
    return [Verdict("speed_upper_bound", ineq, fit.slope, cstar + s.slack,
                    _status(fit.slope <= cstar + s.slack),
                    note=f"max residual {fit.max_residual:.3g} over {fit.count} records")], derived


def _two_solution_levels(s: TwoSolutionComparison):
    lo, hi = min(s.theta, s.theta_prime), max(s.theta, s.theta_prime)
    return {"u1": (s.theta,), "u2": (s.theta_prime,), "u_low": (hi,), "u_high": (lo,)}


def _two_solution_verdicts(s: TwoSolutionComparison, rows, setting: Setting):
    h = setting.h
    d1, d2 = s.datum1.delta(h), s.datum2.delta(h)
    dbar = max(d1, d2)
    lo, hi = min(s.theta, s.theta_prime), max(s.theta, s.theta_prime)
    zeta = math.hypot(*s.shift)
    idx = _index(rows)
    post = []
    for t in _times(rows):
        r1 = idx.get(("u1", s.theta, t))
        r2 = idx.get(("u2", s.theta_prime, t))
        rl = idx.get(("u_low", hi, t))
        rh = idx.get(("u_high", lo, t))
        if None in (r1, r2, rl, rh) or None in (r1.r_origin, r2.r_origin, rl.r_origin, rh.r_origin):
            continue
        if r1.r_origin < d1 or r2.r_origin < d2 or rl.r_origin < d2 or rh.r_origin < dbar:
            continue
        post.append((t, r1, r2, rl, rh))
    names = {
        "low_vs_second": "r_low(max theta) <= r2(theta') + delta2*pi + tol_geom",
        "low_vs_shifted_first": "r_low(max theta) <= |zeta| + r1(theta) + delta1*pi + tol_geom",
        "high_vs_both":
            "max(r1(theta), r2(theta')) <= r_high(min theta) + delta_bar*pi + tol_geom",
    }
    out, derived = [], {}
    if not post:
        return [_inconclusive(k, v, "not all levels invaded") for k, v in names.items()] + \
            [_inconclusive("distance_liminf", f"late min |r1 - r2| <= {s.cap:g}",
                           "not all levels invaded")], derived
    ex = {k: [] for k in names}
    for t, r1, r2, rl, rh in post:
        tol = setting.tol_geom(max(_phi_bound(r, (0.0, 0.0)) for r in (r1, r2, rl, rh)))
        ex["low_vs_second"].append((rl.r_origin - r2.r_origin - d2 * math.pi - tol, t))
        ex["low_vs_shifted_first"].append(
            (rl.r_origin - zeta - r1.r_origin - d1 * math.pi - tol, t))
        ex["high_vs_both"].append(
            (max(r1.r_origin, r2.r_origin) - rh.r_origin - dbar * math.pi - tol, t))
    for k, ineq in names.items():
        e, t = max(ex[k])
        out.append(Verdict(k, ineq, e, 0.0, _status(e <= 0), note=f"worst excess at t={t}"))
    late = [abs(r1.r_origin - r2.r_origin) for t, r1, r2, _, _ in post
            if t >= setting.late_start - 1e-9]
    ineq = f"late min |r1(theta) - r2(theta')| <= {s.cap:g}"
    if late:
        derived["late_min_distance"] = min(late)
        out.append(Verdict("distance_liminf", ineq, min(late), s.cap, _status(min(late) <= s.cap)))
    else:
        out.append(_inconclusive("distance_liminf", ineq, "no post-transient late record"))
    return out, derived


# -- runners ------------------------------------------------------------------------

def _certify_invasion(datum, radius, theta, grid):
    u0 = make_field(grid, datum)
    X, Y = grid.mesh()
    core = np.hypot(X, Y) <= radius
    if u0.values[core].min() <= theta:
        raise ContractViolation(f"datum must exceed {theta} on the ball of radius {radius}")


def run_symmetrization(s: Symmetrization, setting: Setting, on_record=None) -> Report:
    f = setting.reaction
    _check_thresholds(f, *s.thetas)
    if s.invasion_radius is not None:
        _certify_invasion(s.datum, s.invasion_radius, max(s.thetas), setting.grid)
    elif not check_kpp(f):
        raise ContractViolation("symmetrization needs a KPP reaction or an invasion_radius "
                                "certifying a large datum")
    delta = s.datum.delta(setting.h)
    rows = _simulate(setting, {"u": s.datum}, {"u": tuple(s.thetas)}, {}, {"u": delta}, on_record)
    verdicts, starts = _symmetrization_verdicts(s, rows, setting)
    verdicts.append(_monotone_verdict(rows, starts, delta))
    derived = {"delta": delta, "transient_end": starts}
    return Report(s, rows, verdicts, derived)


def run_antisymmetrization(s: AntiSymmetrization, setting: Setting, references=True,
                           on_record=None) -> Report:
    f = setting.reaction
    kpp = check_kpp(f)
    if not kpp:
        raise ContractViolation(f"anti-symmetrization needs a KPP reaction: {kpp}")
    _check_thresholds(f, s.theta, s.theta_prime)
    if not s.theta_prime < s.theta:
        raise ContractViolation("theta_prime must be smaller than theta")
    h = setting.h
    initials = {"u": s.combined()}
    measure = {"u": (s.theta, s.theta_prime)}
    origins = {"u": s.center}
    deltas = {"u": s.combined().delta(h, s.center)}
    log = None
    if references:
        initials.update(w1=s.u1, w2=s.second())
        measure["w1"] = (s.theta, s.theta / 2)
        origins["w1"] = s.origin
        deltas.update(w1=s.u1.delta(h, s.origin), w2=0.0)
        log = _ComparisonLog([
            ("max(w1, w2) <= u", lambda q: pointwise_max(q["w1"], q["w2"]), lambda q: q["u"]),
            ("u <= w1 + w2", lambda q: q["u"], lambda q: q["w1"] + q["w2"]),
        ])

    def hook(snap, rows):
        if log is not None:
            log(snap, rows)
        if on_record is not None:
            on_record(snap, rows)

    rows = _simulate(setting, initials, measure, origins, deltas, hook)
    if references:
        verdicts, derived = _antisym_verdicts(s, rows, setting)
        verdicts = log.verdicts() + verdicts
    else:
        verdicts = []
        late = [r.gap for r in _late(rows, setting)
                if r.solution_id == "u" and r.theta == s.theta and r.gap is not None]
        derived = {"late_min_gap": min(late)} if late else {}
    return Report(s, rows, verdicts, derived)


def centered_twins(bump: Bump, xi_norm: float, **kw) -> AntiSymmetrization:
    """Twin data ``u1 = u2 = bump`` with ``xi = (xi_norm, 0)``, centred on the origin."""
    c = (xi_norm / 2, 0.0)
    d = DatumSpec((Bump(c, bump.radius, bump.height, bump.profile),))
    return AntiSymmetrization(d, d, (xi_norm, 0.0), origin=c, **kw)


def xi_sweep(bump: Bump, xi_norms, setting: Setting, theta=0.5, theta_prime=0.25,
             references=False, on_record=None):
    """Late-window minimum gap of ``u`` for each ``|xi|`` and the fitted slope against ``|xi|``.

    The per-shift reports are returned under ``"reports"``; ``"flip_xi"`` is the smallest
    swept ``|xi|`` whose sphericality diagnostic detects a non-spherical level set.
    """
    gaps, reports = [], []
    for x in xi_norms:
        s = centered_twins(bump, x, theta=theta, theta_prime=theta_prime)
        rep = run_antisymmetrization(s, setting, references=references, on_record=on_record)
        reports.append(rep)
        gaps.append(rep.derived.get("late_min_gap", math.nan))
    slope, intercept = np.polyfit(np.asarray(xi_norms, float), np.asarray(gaps), 1)
    flipped = [x for x, rep in zip(xi_norms, reports)
               if any(v.name == "sphericality" and v.status == "fail" for v in rep.verdicts)]
    return {"xi": list(xi_norms), "late_min_gap": gaps, "slope": float(slope),
            "intercept": float(intercept), "flip_xi": min(flipped, default=None),
            "reports": reports}


def run_steepness(s: Steepness, setting: Setting, on_record=None) -> Report:
    f = setting.reaction
    g = s.g if s.g is not None else f
    lb = check_lower_bound(f, g)
    if not lb:
        raise ContractViolation(f"steepness needs f >= g: {lb}")
    if not g.theta0 < s.theta_prime < s.theta < g.Z:
        raise ContractViolation("need theta0 < theta_prime < theta < Z")
    if s.invasion_radius is not None:
        _certify_invasion(s.datum, s.invasion_radius, s.theta, setting.grid)
    delta = s.datum.delta(setting.h)
    rows = _simulate(setting, {"u": s.datum}, {"u": (s.theta_prime, s.theta)}, {},
                     {"u": delta}, on_record)
    verdicts, derived = _steepness_verdicts(s, rows, setting)
    return Report(s, rows, verdicts, derived)


def run_spreading_speed(s: SpreadingSpeed, setting: Setting, on_record=None) -> Report:
    _check_thresholds(setting.reaction, s.theta)
    if not s.window[0] < s.window[1]:
        raise ContractViolation("fit window must be nonempty")
    delta = s.datum.delta(setting.h)
    rows = _simulate(setting, {"u": s.datum}, {"u": (s.theta,)}, {}, {"u": delta}, on_record)
    verdicts, derived = _speed_verdicts(s, rows, setting)
    return Report(s, rows, verdicts, derived)


def two_solution_initials(s: TwoSolutionComparison, grid: GridSpec):
    grid.lattice_steps(s.shift)
    u1 = make_field(grid, s.datum1)
    u2 = make_field(grid, s.datum2)
    u1s = make_field(grid, s.datum1.translated(s.shift))
    low = pointwise_min(u1s, u2)
    if not low.values.any():
        raise ContractViolation("min(shifted u1_0, u2_0) vanishes identically; change the shift")
    return {"u1": u1, "u2": u2, "u1_shift": u1s, "u_low": low, "u_high": pointwise_max(u1, u2)}


def run_two_solution(s: TwoSolutionComparison, setting: Setting, on_record=None) -> Report:
    f = setting.reaction
    kpp = check_kpp(f)
    if not kpp:
        raise ContractViolation(f"two-solution comparison needs a KPP reaction: {kpp}")
    _check_thresholds(f, s.theta, s.theta_prime)
    h = setting.h
    initials = two_solution_initials(s, setting.grid)
    d1, d2 = s.datum1.delta(h), s.datum2.delta(h)
    deltas = {"u1": d1, "u2": d2, "u_low": d2, "u_high": max(d1, d2)}
    log = _ComparisonLog([
        ("u_low <= shifted u1", lambda q: q["u_low"], lambda q: q["u1_shift"]),
        ("u_low <= u2", lambda q: q["u_low"], lambda q: q["u2"]),
        ("u1 <= u_high", lambda q: q["u1"], lambda q: q["u_high"]),
        ("u2 <= u_high", lambda q: q["u2"], lambda q: q["u_high"]),
    ])

    def hook(snap, rows):
        log(snap, rows)
        if on_record is not None:
            on_record(snap, rows)

    rows = _simulate(setting, initials, _two_solution_levels(s), {}, deltas, hook)
    verdicts, derived = _two_solution_verdicts(s, rows, setting)
    return Report(s, rows, log.verdicts() + verdicts, derived)


RUNNERS = {
    "symmetrization": run_symmetrization,
    "anti_symmetrization": run_antisymmetrization,
    "steepness": run_steepness,
    "spreading_speed": run_spreading_speed,
    "two_solution": run_two_solution,
}


def run_scenario(scenario, setting: Setting, on_record=None) -> Report:
    return RUNNERS[scenario.kind](scenario, setting, on_record=on_record)
