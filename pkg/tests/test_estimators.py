import numpy as np
import pytest
from sklearn.base import clone

from rdsym.estimators import (SUMMARY_COLUMNS, FrontSimulator, LevelSetGeometry,
                              SpreadingSpeedEstimator)
from rdsym.exceptions import ContractViolation
from rdsym.fields import Bump, DatumSpec, GridSpec, ScalarField
from rdsym.reactions import Linear


def test_speed_estimator_recovers_line():
    t = np.linspace(0, 10, 21)
    est = SpreadingSpeedEstimator(window=(2, 8)).fit(t, 1.5 * t + 0.25)
    assert est.speed_ == pytest.approx(1.5) and est.intercept_ == pytest.approx(0.25)
    assert est.n_samples_ == 13
    assert est.predict([4.0])[0] == pytest.approx(6.25)
    assert est.score(t, 1.5 * t + 0.25) == pytest.approx(1.0)


def test_speed_estimator_ignores_nan_and_needs_samples():
    t = np.arange(5.0)
    r = np.array([np.nan, np.nan, np.nan, 1.0, 2.0])
    with pytest.raises(ContractViolation):
        SpreadingSpeedEstimator().fit(t, r)
    with pytest.raises(ValueError):
        SpreadingSpeedEstimator().fit(t, r[:3])


def test_estimators_follow_sklearn_parameter_protocol():
    for est in (SpreadingSpeedEstimator(window=(1, 2)), LevelSetGeometry(theta=0.3, ray_count=90),
                FrontSimulator(half_width=10, spacing=0.5)):
        twin = clone(est)
        assert twin.get_params() == est.get_params()
        assert twin is not est


def test_level_set_geometry_transform():
    grid = GridSpec(6.0, 61)
    X, Y = grid.mesh()
    field = ScalarField(grid, np.exp(-(X ** 2 + Y ** 2) / 4), time=1.0)
    geo = LevelSetGeometry(theta=0.5, ray_count=180)
    out = geo.fit_transform([field])
    assert out.shape == (1, len(SUMMARY_COLUMNS))
    cols = dict(zip(geo.get_feature_names_out(), out[0]))
    radius = 2 * np.sqrt(np.log(2))
    assert abs(cols["R_i"] - radius) <= grid.h and abs(cols["R_e"] - radius) <= grid.h
    assert cols["t"] == 1.0 and cols["star_shaped"] == 1.0
    empty = geo.transform(ScalarField(grid, np.zeros((grid.n, grid.n))))
    assert np.isnan(empty[0, 2]) and np.isnan(empty[0, 5])


def test_level_set_geometry_rejects_bad_threshold():
    with pytest.raises(ContractViolation):
        LevelSetGeometry(theta=1.2, saturation=1.0).fit()


def test_front_simulator_records_snapshots():
    sim = FrontSimulator(half_width=10, spacing=0.25, t_end=1.0, record_interval=0.5,
                         reaction=Linear(1.0))
    sim.fit(DatumSpec([Bump((0, 0), 1.0)]))
    assert list(sim.times_) == [0.0, 0.5, 1.0]
    arr = sim.transform()
    assert arr.shape == (3, 81, 81) and np.all(arr >= 0)
