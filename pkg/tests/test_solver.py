import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.signal import fftconvolve

from rdsym.exceptions import ContractViolation, DomainTooSmallError, NumericalBlowupError
from rdsym.fields import Bump, DatumSpec, GridSpec, ScalarField, make_field
from rdsym.reactions import Coefficient, FisherKPP, Linear, TimePeriodicKPP, Bistable, Combustion
from rdsym.solver import (RadialProfile, SolverConfig, Trajectory, boundary_guard, iterate,
                          pointwise_leq, pointwise_max, pointwise_min, run, run_radial,
                          step_2d, step_radial, translate_field)

from conftest import field_from

G = GridSpec(2.0, 41)
DT = 0.8 * G.h ** 2 / 4


def _reference_step(u, f, t, dt, h):
    # plain numpy transcription of the 5-point scheme with zero ghosts
    p = np.pad(u, 1)
    lap = (p[2:, 1:-1] + p[:-2, 1:-1] + p[1:-1, 2:] + p[1:-1, :-2] - 4 * u) / h ** 2
    return u + dt * (lap + f(t, u))


def test_zero_field_is_stationary():
    z = ScalarField(G, np.zeros((41, 41)))
    assert not step_2d(z, FisherKPP(), DT).values.any()


def test_ones_interior_unchanged():
    one = ScalarField(G, np.ones((41, 41)))
    out = step_2d(one, FisherKPP(), DT).values
    assert np.all(out[2:-2, 2:-2] == 1.0)
    assert out[0, 20] < 1.0


def test_impulse_spreads_to_neighbours():
    v = np.zeros((41, 41))
    v[20, 20] = 2.0
    out = step_2d(ScalarField(G, v), Linear(), DT).values
    for i, j in [(19, 20), (21, 20), (20, 19), (20, 21)]:
        assert out[i, j] == pytest.approx(DT * 2.0 / G.h ** 2, rel=1e-14)
    assert out[20, 20] == pytest.approx(2.0 + DT * (-4 * 2.0 / G.h ** 2 + 2.0), rel=1e-14)
    assert np.count_nonzero(out) == 5


@pytest.mark.parametrize("f", [FisherKPP(1.5), Linear(Coefficient(1.0, 0.5)),
                               TimePeriodicKPP(Coefficient(1.0, 0.3, 2.0)), Combustion(0.3),
                               Bistable(0.2)], ids=lambda f: f.name)
def test_step_matches_reference_transcription(f, rng):
    u = ScalarField(G, rng.random((41, 41)), time=0.37)
    got = step_2d(u, f, DT).values
    ref = _reference_step(u.values, f, 0.37, DT, G.h)
    assert np.allclose(got, ref, rtol=1e-13, atol=1e-15)
    assert step_2d(u, f, DT).time == pytest.approx(0.37 + DT)


def test_step_rejects_unstable_dt():
    with pytest.raises(ContractViolation):
        step_2d(ScalarField(G, np.zeros((41, 41))), FisherKPP(), G.h ** 2 / 4 * 1.01)


def test_step_blowup():
    big = ScalarField(G, np.full((41, 41), 1e308))
    with pytest.raises(NumericalBlowupError):
        step_2d(big, Linear(Coefficient(5.0)), DT)


@given(st.integers(0, 2**32 - 1), st.integers(2, 9))
def test_thread_count_does_not_change_results(seed, threads):
    u = ScalarField(G, np.random.default_rng(seed).random((41, 41)))
    a = step_2d(u, FisherKPP(), DT, threads=1).values
    b = step_2d(u, FisherKPP(), DT, threads=threads).values
    assert np.array_equal(a, b)


def _steps(u, f, k):
    for _ in range(k):
        u = step_2d(u, f, DT)
    return u


@given(st.integers(0, 2**32 - 1))
def test_positivity_preserved(seed):
    rng = np.random.default_rng(seed)
    v = rng.random((41, 41)) * (rng.random((41, 41)) < 0.3)
    out = _steps(ScalarField(G, v), FisherKPP(), 20)
    assert out.values.min() >= 0.0


@given(st.integers(0, 2**32 - 1))
def test_discrete_comparison(seed):
    rng = np.random.default_rng(seed)
    a0 = rng.random((41, 41)) * 0.5
    b0 = np.minimum(a0 + rng.random((41, 41)) * 0.5, 1.0)
    a = _steps(ScalarField(G, a0), FisherKPP(), 15)
    b = _steps(ScalarField(G, b0), FisherKPP(), 15)
    assert pointwise_leq(a, b, 0.0).passed


def test_superposition_supersolution():
    g = GridSpec(12.0, 121)
    cfg = SolverConfig(g, 3.0, 0.5, boundary_tolerance=1e-2)
    w0 = DatumSpec([dict(center=(2.0, 0.0), radius=1.5)])
    shift = (4.0, 0.0)
    u0 = w0 | w0.translated((-shift[0], -shift[1]))
    w = list(iterate(cfg, w0, FisherKPP()))
    w_shift = list(iterate(cfg, w0.translated((-4.0, 0.0)), FisherKPP()))
    u = list(iterate(cfg, u0, FisherKPP()))
    for a, b, c in zip(u, w, w_shift):
        assert pointwise_leq(a, b + c, 1e-9).passed
        assert pointwise_leq(pointwise_max(b, c), a, 1e-9).passed


def test_radial_zero_and_constant():
    z = RadialProfile(2, 0.1, np.zeros(50))
    assert not step_radial(z, FisherKPP(), 0.002).values.any()
    one = RadialProfile(2, 0.1, np.r_[np.ones(49), 0.0])
    out = step_radial(one, FisherKPP(), 0.002).values
    assert np.all(out[:47] == 1.0)
    with pytest.raises(ContractViolation):
        step_radial(z, FisherKPP(), 0.1 ** 2 / 2 * 1.01)


def test_radial_center_stencil_uses_symmetry_limit():
    # u = r^2 has Laplacian 2N everywhere
    for N in (1, 2, 3):
        prof = RadialProfile(N, 0.1, np.r_[(np.arange(40) * 0.1) ** 2, 0.0])
        dt = 1e-4
        out = step_radial(prof, Linear(Coefficient(0.0)), dt).values
        assert (out[0] - prof.values[0]) / dt == pytest.approx(2 * N, rel=1e-10)
        assert (out[10] - prof.values[10]) / dt == pytest.approx(2 * N, rel=1e-9)


def test_radial_vs_2d_short_time():
    g = GridSpec(12.0, 241)
    bump = Bump((0, 0), 3.0)
    datum = DatumSpec((bump,))
    cfg = SolverConfig(g, 1.0, 1.0)
    u2d = list(iterate(cfg, datum, FisherKPP()))[-1]
    prof = RadialProfile.from_function(2, g.h, 16.0, lambda r: bump.evaluate(r, 0 * r))
    rad = run_radial(prof, FisherKPP(), 1.0, cfg.dt)
    X, Y = g.mesh()
    err = np.abs(u2d.values - rad.interpolate(np.hypot(X, Y))).max()
    assert err < 2 * g.h


def test_linear_growth_matches_heat_kernel():
    g = GridSpec(14.0, 281)
    datum = DatumSpec([dict(center=(0, 0), radius=1.5)])
    u0 = make_field(g, datum).values
    cfg = SolverConfig(g, 2.0, 1.0)
    rec = list(iterate(cfg, datum, Linear()))
    X, Y = g.mesh()
    for snap in rec[1:]:
        t = snap.time
        kernel = np.exp(-(X ** 2 + Y ** 2) / (4 * t)) / (4 * math.pi * t) * g.h ** 2
        exact = math.exp(t) * fftconvolve(u0, kernel, mode="same")
        assert np.abs(snap.values - exact).max() <= 0.01 * exact.max()
    # growth rate over [1, 2] once the heat-semigroup decay of the maximum is divided out
    heat = [fftconvolve(u0, np.exp(-(X ** 2 + Y ** 2) / (4 * t)) / (4 * math.pi * t) * g.h ** 2,
                        mode="same").max() for t in (1.0, 2.0)]
    growth = math.log(rec[2].max() / rec[1].max()) - math.log(heat[1] / heat[0])
    assert growth == pytest.approx(1.0, abs=0.2)


def test_pure_heat_mass_nonincreasing():
    g = GridSpec(16.0, 161)
    cfg = SolverConfig(g, 4.0, 0.25)
    masses = [s.mass() for s in iterate(cfg, DatumSpec([dict(center=(0, 0), radius=2)]),
                                        Linear(Coefficient(0.0)))]
    # summation rounding is the only source of increase
    assert all(b <= a * (1 + 1e-13) for a, b in zip(masses, masses[1:]))
    assert masses[-1] < masses[0]
    assert masses[-1] > masses[0] * (1 - 1e-6)


def test_run_zero_horizon_and_probes():
    g = GridSpec(5.0, 51)
    cfg = SolverConfig(g, 0.0, 0.5)
    traj = run(cfg, DatumSpec([dict(center=(0, 0), radius=1)]), FisherKPP(),
               probes=[lambda u: u.max()])
    assert traj.times == [0.0] and traj.records == [[1.0]]


def test_record_times_end_exactly():
    cfg = SolverConfig(G, 1.0, 0.3, boundary_tolerance=1.0)
    assert cfg.record_times()[-1] == 1.0
    assert np.allclose(np.diff(cfg.record_times())[:-1], 0.3)
    recs = list(iterate(cfg, DatumSpec([dict(center=(0, 0), radius=0.5)]), FisherKPP()))
    assert [r.time for r in recs] == cfg.record_times()


def test_solver_config_contracts():
    with pytest.raises(ContractViolation):
        SolverConfig(G, 1.0, 0.5, cfl_fraction=1.0)
    with pytest.raises(ContractViolation):
        SolverConfig(G, 1.0, 1e-6)
    with pytest.raises(ContractViolation):
        SolverConfig(G, 1.0, 0.5, boundary="neumann")


def test_trajectory_invariants():
    tr = Trajectory()
    with pytest.raises(ContractViolation):
        tr.append(0.5, None)
    tr.append(0.0, None)
    with pytest.raises(ContractViolation):
        tr.append(0.0, None)


def test_boundary_guard():
    boundary_guard(make_field(G, DatumSpec([dict(center=(0, 0), radius=1)])))
    with pytest.raises(DomainTooSmallError) as err:
        boundary_guard(ScalarField(G, np.ones((41, 41))))
    assert err.value.max_value == 1.0


def test_front_reaching_boundary_is_reported_with_time():
    g = GridSpec(6.0, 61)
    cfg = SolverConfig(g, 20.0, 0.5)
    with pytest.raises(DomainTooSmallError) as err:
        list(iterate(cfg, DatumSpec([dict(center=(0, 0), radius=1.5)]), FisherKPP()))
    assert 0 < err.value.time < 20.0
    assert f"t={err.value.time:g}" in str(err.value)


def test_invasion_of_origin():
    g = GridSpec(40.0, 401)
    cfg = SolverConfig(g, 15.0, 1.0)
    datum = DatumSpec([dict(center=(0, 0), radius=2, height=0.5)])
    centre = [s.values[200, 200] for s in iterate(cfg, datum, FisherKPP())]
    k = next(i for i, v in enumerate(centre) if v >= 0.99)
    assert all(v >= 0.99 for v in centre[k:])
    assert all(b >= a for a, b in zip(centre[k:], centre[k + 1:]))


def test_pointwise_leq_examples(rng):
    a = ScalarField(G, rng.random((41, 41)))
    res = pointwise_leq(a, a)
    assert res.passed and res.max_excess == 0.0
    assert pointwise_leq(a.with_values(a.values - 1), a).passed
    b = a.with_values(a.values.copy())
    v = b.values.copy()
    v[3, 7] -= 0.5
    res = pointwise_leq(a, a.with_values(v), 1e-9)
    assert not res.passed and res.location == G.node_position(3, 7)
    with pytest.raises(ContractViolation):
        pointwise_leq(a, ScalarField(GridSpec(2.0, 21), np.zeros((21, 21))))


def test_max_min_are_nodewise(rng):
    a = ScalarField(G, rng.random((41, 41)))
    b = ScalarField(G, rng.random((41, 41)))
    assert np.array_equal(pointwise_max(a, b).values, np.maximum(a.values, b.values))
    assert np.array_equal(pointwise_min(a, b).values, np.minimum(a.values, b.values))


def test_translate_identity_group_and_bump():
    g = GridSpec(10.0, 101)
    d = DatumSpec([dict(center=(1.0, -2.0), radius=2.0)])
    u = make_field(g, d)
    assert np.array_equal(translate_field(u, (0.0, 0.0)).values, u.values)
    there = translate_field(u, (3.0, 1.4))
    assert np.array_equal(translate_field(there, (-3.0, -1.4)).values, u.values)
    assert np.allclose(there.values, make_field(g, d.translated((3.0, 1.4))).values,
                       rtol=0, atol=1e-15)
    with pytest.raises(ContractViolation):
        translate_field(u, (0.05, 0.0))
