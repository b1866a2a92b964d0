"""Scikit-learn style front ends for the simulator, the geometry probes and the speed fit."""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, column_or_1d

from .exceptions import ContractViolation
from .fields import DatumSpec, GridSpec, ScalarField
from .geometry import DEFAULT_RAYS, summarize
from .reactions import FisherKPP, ReactionTerm
from .solver import SolverConfig, run

SUMMARY_COLUMNS = ("t", "theta", "R_i", "cx_i", "cy_i", "R_e", "cx_e", "cy_e", "r_origin",
                   "gap", "star_shaped", "max_polar_slope", "radial_dev")


def check_times(t, name="t"):
    """1-D float array of sample times (a single column is accepted)."""
    arr = check_array(np.asarray(t, dtype=float).reshape(len(t), -1), ensure_min_samples=1)
    if arr.shape[1] != 1:
        raise ValueError(f"{name} must be one-dimensional")
    return arr[:, 0]


def check_fields(fields):
    """List of :class:`ScalarField` on a common grid."""
    if isinstance(fields, ScalarField):
        fields = [fields]
    fields = list(fields)
    if not fields:
        raise ValueError("need at least one field")
    for f in fields:
        if not isinstance(f, ScalarField):
            raise TypeError(f"expected ScalarField, got {type(f).__name__}")
    if any(f.grid != fields[0].grid for f in fields):
        raise ContractViolation("fields live on different grids")
    return fields


def check_datum(datum):
    if isinstance(datum, DatumSpec):
        return datum
    if isinstance(datum, dict):
        return DatumSpec(tuple(datum["bumps"]))
    return DatumSpec(tuple(datum))


class SpreadingSpeedEstimator(RegressorMixin, BaseEstimator):
    """Least-squares line ``r = speed * t + intercept`` over an optional time window.

    Parameters
    ----------
    window : tuple of float or None
        Only samples with ``window[0] <= t <= window[1]`` enter the fit.
    """

    def __init__(self, window=None):
        self.window = window

    def fit(self, t, r):
        t = check_times(t)
        r = column_or_1d(np.asarray(r, dtype=float))
        if r.shape != t.shape:
            raise ValueError("t and r must have the same length")
        sel = np.isfinite(r)
        if self.window is not None:
            a, b = self.window
            sel &= (t >= a - 1e-9) & (t <= b + 1e-9)
        if sel.sum() < 3:
            raise ContractViolation("need at least 3 finite samples inside the window")
        slope, intercept = np.polyfit(t[sel], r[sel], 1)
        self.speed_ = float(slope)
        self.intercept_ = float(intercept)
        self.max_residual_ = float(np.abs(r[sel] - self.predict(t[sel])).max())
        self.n_samples_ = int(sel.sum())
        return self

    def predict(self, t):
        check_is_fitted(self, "speed_")
        return self.speed_ * check_times(t) + self.intercept_


class LevelSetGeometry(TransformerMixin, BaseEstimator):
    """Maps fields to rows of level-set measurements (see ``SUMMARY_COLUMNS``).

    Undefined measurements come out as NaN.  Stateless: ``fit`` only checks
    the parameters.
    """

    def __init__(self, theta=0.5, delta=0.0, ray_count=DEFAULT_RAYS, origin=(0.0, 0.0),
                 seed=0, saturation=math.inf):
        self.theta = theta
        self.delta = delta
        self.ray_count = ray_count
        self.origin = origin
        self.seed = seed
        self.saturation = saturation

    def fit(self, X=None, y=None):
        if not 0 < self.theta < self.saturation:
            raise ContractViolation("threshold outside (0, Z)")
        if int(self.ray_count) < 8:
            raise ContractViolation("ray_count must be at least 8")
        return self

    def summaries(self, X):
        self.fit()
        return [summarize(f, self.theta, self.delta, self.ray_count, tuple(self.origin),
                          self.seed, Z=self.saturation) for f in check_fields(X)]

    def transform(self, X):
        rows = []
        for s in self.summaries(X):
            ci = s.center_i or (None, None)
            ce = s.center_e or (None, None)
            vals = (s.t, s.theta, s.R_i, *ci, s.R_e, *ce, s.r_origin, s.gap,
                    s.star_shaped, s.max_polar_slope, s.radial_dev)
            rows.append([np.nan if v is None else float(v) for v in vals])
        return np.array(rows)

    def get_feature_names_out(self, input_features=None):
        return np.array(SUMMARY_COLUMNS, dtype=object)


class FrontSimulator(BaseEstimator):
    """Runs the explicit solver from a datum; ``fit`` stores the trajectory.

    The trajectory holds one snapshot per record time in ``snapshots_``.
    """

    def __init__(self, half_width=20.0, spacing=0.2, t_end=5.0, record_interval=1.0,
                 reaction: ReactionTerm = None, cfl_fraction=0.8, threads=1):
        self.half_width = half_width
        self.spacing = spacing
        self.t_end = t_end
        self.record_interval = record_interval
        self.reaction = reaction
        self.cfl_fraction = cfl_fraction
        self.threads = threads

    def _config(self):
        grid = GridSpec.from_spacing(self.half_width, self.spacing)
        return SolverConfig(grid, self.t_end, self.record_interval, self.cfl_fraction)

    def fit(self, X, y=None):
        datum = check_datum(X)
        f = self.reaction if self.reaction is not None else FisherKPP()
        traj = run(self._config(), datum, f, threads=self.threads, keep_snapshots=True)
        self.trajectory_ = traj
        self.times_ = np.array(traj.times)
        self.snapshots_ = [traj.snapshots[t] for t in traj.times]
        return self

    def transform(self, X=None):
        """Returns the recorded fields as an array of shape ``(records, n, n)``."""
        check_is_fitted(self, "trajectory_")
        return np.stack([s.values for s in self.snapshots_])
