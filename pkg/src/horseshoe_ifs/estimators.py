"""scikit-learn style wrappers around the pressure, spectrum and transition computations.

The "data" these estimators see is a set of evaluation points (values of
``t`` or periods); the dynamical system enters as the ``params``
hyperparameter, so ``get_params``/``set_params``/``clone`` behave as usual.
"""
from __future__ import annotations

from typing import Mapping

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import thermo
from .config import params_from_mapping
from .fiber import SystemParams

__all__ = [
    "check_params",
    "check_t_grid",
    "check_depth",
    "PressureEstimator",
    "SpectrumScanner",
    "TransitionLocator",
]


def check_params(params) -> SystemParams:
    """Accept a :class:`SystemParams` or a flat mapping of its keys."""
    if isinstance(params, SystemParams):
        return params
    if isinstance(params, Mapping):
        return params_from_mapping(params)
    raise TypeError(f"expected SystemParams or a mapping, got {type(params).__name__}")


def check_t_grid(T, *, increasing: bool = False) -> np.ndarray:
    """1-D float array of finite ``t`` values from a vector or a single-column matrix."""
    arr = check_array(T, ensure_2d=False, dtype=np.float64, input_name="T")
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"expected one column of t values, got shape {arr.shape}")
        arr = arr[:, 0]
    if increasing and np.any(np.diff(arr) <= 0):
        raise ValueError("t values must be strictly increasing")
    return arr


def check_depth(n, maximum: int, name: str = "depth") -> int:
    if isinstance(n, bool) or int(n) != n:
        raise ValueError(f"{name} must be an integer")
    n = int(n)
    if not 1 <= n <= maximum:
        raise ValueError(f"{name} must be in [1, {maximum}], got {n}")
    return n


class PressureEstimator(TransformerMixin, BaseEstimator):
    """Cylinder-sum pressure bracket of ``-t log|f'|``.

    ``fit`` builds the depth-``depth`` statistics; ``transform(T)`` returns
    columns ``lower, upper, lateral, nonlateral`` and ``predict(T)`` the
    bracket midpoint.
    """

    def __init__(self, params=None, depth: int = 12, lower: str = "periodic", grid_size: int = 33, workers: int = 1):
        self.params = params
        self.depth = depth
        self.lower = lower
        self.grid_size = grid_size
        self.workers = workers

    def fit(self, X=None, y=None):
        self.params_ = check_params(self.params)
        depth = check_depth(self.depth, thermo.MAX_PRESSURE_DEPTH)
        if self.lower not in ("periodic", "infimum"):
            raise ValueError("lower must be 'periodic' or 'infimum'")
        self.stats_ = thermo.cylinder_stats(self.params_, depth, grid_size=self.grid_size, workers=self.workers)
        return self

    def transform(self, T):
        check_is_fitted(self, "stats_")
        t = check_t_grid(T)
        s = self.stats_
        nonexc = s.nonexceptional
        return np.column_stack([
            [s.log_partition(x, self.lower) for x in t],
            [s.log_partition(x, "upper") for x in t],
            thermo.lateral_pressure(self.params_, t) if t.size else np.empty(0),
            [s.log_partition(x, "periodic", nonexc) for x in t],
        ]).reshape(t.size, 4)

    def predict(self, T):
        out = self.transform(T)
        return 0.5 * (out[:, 0] + out[:, 1])

    def curve(self, T) -> thermo.PressureCurve:
        check_is_fitted(self, "stats_")
        return thermo.pressure_curve(self.params_, check_t_grid(T, increasing=True), self.stats_.depth,
                                     lower=self.lower, stats=self.stats_)


class SpectrumScanner(BaseEstimator):
    """Exhaustive periodic central exponents; ``predict(periods)`` gives the running maximum."""

    def __init__(self, params=None, max_period: int = 10, grid_size: int = thermo.SCAN_GRID, workers: int = 1):
        self.params = params
        self.max_period = max_period
        self.grid_size = grid_size
        self.workers = workers

    def fit(self, X=None, y=None):
        self.params_ = check_params(self.params)
        m = check_depth(self.max_period, thermo.MAX_SCAN_PERIOD, "max_period")
        self.certificate_ = thermo.spectrum_scan(self.params_, m, grid_size=self.grid_size, workers=self.workers)
        return self

    def predict(self, periods):
        check_is_fitted(self, "certificate_")
        est = self.certificate_.estimates
        ps = np.asarray(periods).ravel()
        missing = [int(p) for p in ps if int(p) not in est]
        if missing:
            raise ValueError(f"periods outside the scanned range: {missing}")
        return np.array([est[int(p)] for p in ps])


class TransitionLocator(BaseEstimator):
    """Locate the pressure kink; ``predict(T)`` labels ``t`` by branch (0 lateral, 1 other)."""

    def __init__(self, params=None, depth: int = 12, t_min: float = -20.0, t_max: float = 20.0,
                 t_step: float = 0.05, tol: float = 1e-3, workers: int = 1):
        self.params = params
        self.depth = depth
        self.t_min = t_min
        self.t_max = t_max
        self.t_step = t_step
        self.tol = tol
        self.workers = workers

    def fit(self, X=None, y=None):
        self.params_ = check_params(self.params)
        depth = check_depth(self.depth, thermo.MAX_PRESSURE_DEPTH)
        if not (self.t_step > 0 and self.t_max > self.t_min):
            raise ValueError("need t_step > 0 and t_max > t_min")
        count = int(round((self.t_max - self.t_min) / self.t_step)) + 1
        grid = np.round(self.t_min + self.t_step * np.arange(count), 12)
        self.curve_ = thermo.pressure_curve(self.params_, grid, depth, workers=self.workers)
        self.report_ = thermo.locate_transition(self.curve_, self.params_, tol=self.tol, workers=self.workers)
        return self

    def predict(self, T):
        check_is_fitted(self, "report_")
        t = check_t_grid(T)
        if not self.report_.detected:
            return np.zeros(t.size, dtype=int)
        return (t > self.report_.t_c_estimate).astype(int)
