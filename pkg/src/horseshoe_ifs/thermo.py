"""Pressure of the central potential family, spectrum scans and the transition.

Cylinder sums are built once per depth as per-word statistics (extremes of
Birkhoff sums over a fiber grid and over the fixed points of the word's map)
and then evaluated at any ``t`` by a log-sum-exp. Three envelopes are
available:

``upper``
    sup over the fiber candidates, a bound from above at every depth.
``infimum``
    inf over the fiber candidates, a bound from below at every depth; not
    convex in ``t`` (it has a concave kink at ``t = 0``).
``periodic``
    the periodic-orbit sum using each word's heaviest fixed point. Convex,
    exact at ``t = 0`` and never below the lateral pressure; this is the
    default lower envelope of a :class:`PressureCurve`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import brentq
from scipy.special import logsumexp

from . import _batch
from .fiber import SystemParams
from .symbolic import ALPHABET, Word, codes_to_symbols

__all__ = [
    "Potential",
    "central_log_derivative",
    "pressure_potential",
    "locally_constant",
    "CylinderStats",
    "cylinder_stats",
    "pressure_bracket",
    "general_potential_pressure",
    "lateral_pressure",
    "lateral_derivative",
    "PressureCurve",
    "pressure_curve",
    "PeriodSummary",
    "GapCertificate",
    "spectrum_scan",
    "TransitionReport",
    "locate_transition",
    "AsymptoticSlopes",
    "asymptotic_slopes",
    "CriterionResult",
    "transition_criterion",
    "write_curve_csv",
    "write_spectrum_csv",
]

Potential = Callable[[int, np.ndarray], np.ndarray]

MAX_PRESSURE_DEPTH = 16
MAX_SCAN_PERIOD = 14
PRESSURE_GRID = 33
SCAN_GRID = 2**10 + 1


def central_log_derivative(params: SystemParams) -> Potential:
    """``(s, x) -> log|f_s'(x)|``."""
    maps = params.maps
    return lambda s, x: _batch._log_abs_deriv(maps[s], x)


def pressure_potential(params: SystemParams) -> Potential:
    """``(s, x) -> -log|f_s'(x)|``; ``t`` times this is the family whose pressure is ``P(t)``."""
    maps = params.maps
    return lambda s, x: -_batch._log_abs_deriv(maps[s], x)


def locally_constant(values: Sequence[float]) -> Potential:
    """Potential depending only on the current symbol."""
    vals = tuple(float(v) for v in values)
    if len(vals) != 3:
        raise ValueError("need one value per symbol")
    return lambda s, x: np.full(np.shape(x), vals[s])


@dataclass
class CylinderStats:
    """Per-word extremes of Birkhoff sums for all words of one length.

    ``sum_min``/``sum_max`` run over the fiber candidates (grid and fixed
    points); ``per_min``/``per_max`` over fixed points only (NaN when the
    periodic envelope was not computed).
    """

    depth: int
    alphabet: tuple[int, ...]
    codes: np.ndarray
    sum_min: np.ndarray
    sum_max: np.ndarray
    per_min: np.ndarray
    per_max: np.ndarray
    nonexceptional: np.ndarray

    @property
    def has_periodic(self) -> bool:
        return not np.isnan(self.per_min).any()

    def _exponents(self, t: float, envelope: str):
        if envelope == "upper":
            return t * (self.sum_max if t >= 0 else self.sum_min)
        if envelope == "infimum":
            return t * (self.sum_min if t >= 0 else self.sum_max)
        if envelope == "periodic":
            if not self.has_periodic:
                raise ValueError("periodic envelope not available for these statistics")
            return t * (self.per_max if t >= 0 else self.per_min)
        raise ValueError(f"unknown envelope {envelope!r}")

    def _values(self, t, envelope):
        if envelope == "upper":
            return self.sum_max if t >= 0 else self.sum_min
        if envelope == "infimum":
            return self.sum_min if t >= 0 else self.sum_max
        return self.per_max if t >= 0 else self.per_min

    def log_partition(self, t: float, envelope: str = "upper", subset: np.ndarray | None = None) -> float:
        """``(1/n) log sum_w exp(t * S_w)`` with ``S_w`` picked per envelope."""
        a = self._exponents(float(t), envelope)
        if subset is not None:
            a = a[subset]
        return float(logsumexp(a)) / self.depth

    def slope(self, t: float, envelope: str = "periodic", subset: np.ndarray | None = None, side: str = "right") -> float:
        """One-sided derivative in ``t`` of :meth:`log_partition` (exact for the estimator)."""
        t = float(t)
        probe = t if t != 0.0 else (1.0 if side == "right" else -1.0)
        vals = self._values(probe, envelope)
        a = self._exponents(t, envelope)
        if subset is not None:
            vals, a = vals[subset], a[subset]
        w = np.exp(a - a.max())
        return float(np.dot(w, vals) / w.sum()) / self.depth


def _chunk_stats(maps, n, alphabet, prefix, starts, potential, periodic):
    codes, vals, sums = _batch.tree_orbits(maps, n, starts, alphabet, prefix, potential)
    smin = sums.min(axis=1)
    smax = sums.max(axis=1)
    syms = codes_to_symbols(codes, n)
    nonexc = (syms == 1).any(axis=1)
    if periodic:
        fp = _batch.locate_fixed_points(maps, syms, starts, g_on_grid=vals)
        if potential is None:
            fsum = fp.log_deriv
        else:
            _, fsum = _batch.compose(maps, syms[fp.word_index], fp.x, potential)
        pmin = np.full(codes.size, np.inf)
        pmax = np.full(codes.size, -np.inf)
        np.minimum.at(pmin, fp.word_index, fsum)
        np.maximum.at(pmax, fp.word_index, fsum)
        smin = np.minimum(smin, pmin)
        smax = np.maximum(smax, pmax)
    else:
        pmin = pmax = np.full(codes.size, np.nan)
    return codes, smin, smax, pmin, pmax, nonexc


def cylinder_stats(
    params: SystemParams,
    n: int,
    potential: Potential | None = None,
    *,
    alphabet: Sequence[int] = ALPHABET,
    fiber_points: Sequence[float] | None = None,
    grid_size: int = PRESSURE_GRID,
    workers: int = 1,
) -> CylinderStats:
    """Birkhoff-sum statistics of ``potential`` for every word of length ``n``.

    ``potential`` defaults to :func:`pressure_potential`. With
    ``fiber_points`` the candidates are exactly those points and no periodic
    statistics are formed; otherwise a uniform grid of ``grid_size`` points
    (ends included) plus every located fixed point is used.
    """
    if not 1 <= n <= MAX_PRESSURE_DEPTH:
        raise ValueError(f"depth must be in [1, {MAX_PRESSURE_DEPTH}]")
    alphabet = tuple(sorted(set(int(s) for s in alphabet)))
    if potential is None:
        potential = pressure_potential(params)
    periodic = fiber_points is None
    if periodic:
        if grid_size < 2:
            raise ValueError("grid_size must be >= 2")
        starts = np.linspace(0.0, 1.0, grid_size)
    else:
        starts = np.asarray(fiber_points, dtype=float).ravel()
        if starts.size == 0 or np.any(starts < 0) or np.any(starts > 1):
            raise ValueError("fiber_points must be non-empty and inside [0, 1]")
    chunks = _batch.iter_chunks(n, alphabet)
    job = delayed(_chunk_stats)
    args = [(params.maps, n, alphabet, pre, starts, potential, periodic) for pre in chunks]
    if workers == 1 or len(args) == 1:
        parts = [_chunk_stats(*a) for a in args]
    else:
        parts = Parallel(n_jobs=workers)(job(*a) for a in args)
    cat = [np.concatenate(col) for col in zip(*parts)]
    return CylinderStats(n, alphabet, *cat)


def general_potential_pressure(
    params: SystemParams,
    potential: Potential,
    t: float,
    n: int,
    *,
    lower: str | None = None,
    **kwargs,
) -> tuple[float, float]:
    """Cylinder-sum bracket ``(lower, upper)`` for the pressure of ``t * potential`` at depth ``n``.

    ``lower`` picks the lower envelope: ``"periodic"`` (default on the
    built-in grid) or ``"infimum"`` (forced when ``fiber_points`` is given).
    Remaining keyword arguments go to :func:`cylinder_stats`.
    """
    stats = cylinder_stats(params, n, potential, **kwargs)
    if lower is None:
        lower = "periodic" if stats.has_periodic else "infimum"
    return stats.log_partition(t, lower), stats.log_partition(t, "upper")


def pressure_bracket(params: SystemParams, t: float, n: int, **kwargs) -> tuple[float, float]:
    """Bracket of the depth-``n`` pressure of ``-t log|f'|``; see :func:`general_potential_pressure`."""
    return general_potential_pressure(params, pressure_potential(params), t, n, **kwargs)


def lateral_pressure(params: SystemParams, t):
    """``log(beta0**-t + beta2**-t)``, the pressure on the lateral horseshoe."""
    t = np.asarray(t, dtype=float)
    out = np.logaddexp(-t * math.log(params.beta0), -t * math.log(params.beta2))
    return float(out) if out.ndim == 0 else out


def lateral_derivative(params: SystemParams, t):
    """Exact derivative of :func:`lateral_pressure`: minus the equilibrium average of ``log beta_i``."""
    t = np.asarray(t, dtype=float)
    l0, l2 = math.log(params.beta0), math.log(params.beta2)
    a0, a2 = -t * l0, -t * l2
    m = np.maximum(a0, a2)
    w0, w2 = np.exp(a0 - m), np.exp(a2 - m)
    out = -(w0 * l0 + w2 * l2) / (w0 + w2)
    return float(out) if out.ndim == 0 else out


def _secants(t, y):
    s = np.diff(y) / np.diff(t)
    left = np.r_[np.nan, s]
    right = np.r_[s, np.nan]
    return left, right


@dataclass
class PressureCurve:
    """Sampled pressure bracket over a ``t`` grid.

    ``nonlateral`` is the periodic-orbit sum restricted to words containing
    the symbol 1. Secant columns refer to the bracket midpoint.
    """

    t: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    lateral: np.ndarray
    nonlateral: np.ndarray
    depth: int
    lower_envelope: str = "periodic"
    secant_left: np.ndarray = field(default=None, repr=False)
    secant_right: np.ndarray = field(default=None, repr=False)
    stats: CylinderStats | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.secant_left is None or self.secant_right is None:
            self.secant_left, self.secant_right = _secants(self.t, self.midpoint)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def convexity_defect(self, envelope: str = "upper") -> float:
        """Largest drop between consecutive secant slopes (``<= 0`` means convex)."""
        y = {"upper": self.upper, "lower": self.lower, "midpoint": self.midpoint}[envelope]
        s = np.diff(y) / np.diff(self.t)
        if s.size < 2:
            return -math.inf
        return float(np.max(s[:-1] - s[1:]))

    def index_of(self, t0: float) -> int:
        i = int(np.argmin(np.abs(self.t - t0)))
        if abs(self.t[i] - t0) > 1e-9:
            raise KeyError(f"t={t0} is not on the grid")
        return i


def pressure_curve(
    params: SystemParams,
    t_grid: Sequence[float],
    n: int = 12,
    *,
    lower: str = "periodic",
    grid_size: int = PRESSURE_GRID,
    workers: int = 1,
    stats: CylinderStats | None = None,
) -> PressureCurve:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing with at least two points")
    if stats is None:
        stats = cylinder_stats(params, n, grid_size=grid_size, workers=workers)
    nonexc = stats.nonexceptional
    lo = np.array([stats.log_partition(x, lower) for x in t])
    up = np.array([stats.log_partition(x, "upper") for x in t])
    nl = np.array([stats.log_partition(x, "periodic", nonexc) for x in t])
    return PressureCurve(t, lo, up, lateral_pressure(params, t), nl, stats.depth, lower, stats=stats)


@dataclass(frozen=True)
class PeriodSummary:
    period: int
    max_nonexceptional: float
    maximizer: Word | None
    maximizer_point: float
    min_exceptional: float
    max_exceptional: float
    n_fixed_points: int
    n_unconverged: int


@dataclass
class GapCertificate:
    """Result of an exhaustive scan of periodic central exponents.

    ``max_nonexceptional_exponent`` is the largest exponent over all periods
    up to ``depth``; ``estimates`` holds that running maximum per period.
    """

    depth: int
    max_nonexceptional_exponent: float
    min_exceptional_exponent: float
    maximizer: Word | None
    periods: list[PeriodSummary]
    records: list[tuple[int, str, float, float, bool]] | None = None

    @property
    def gap_width(self) -> float:
        return self.min_exceptional_exponent - self.max_nonexceptional_exponent

    @property
    def valid(self) -> bool:
        return self.gap_width > 0 and all(p.n_unconverged == 0 for p in self.periods)

    @property
    def beta_tilde(self) -> float:
        return math.exp(self.max_nonexceptional_exponent)

    @property
    def estimates(self) -> dict[int, float]:
        out, run = {}, -math.inf
        for p in self.periods:
            run = max(run, p.max_nonexceptional)
            out[p.period] = run
        return out


def _scan_chunk(maps, m, prefix, grid, keep):
    codes, vals, _ = _batch.tree_orbits(maps, m, grid, prefix=prefix)
    syms = codes_to_symbols(codes, m)
    fp = _batch.locate_fixed_points(maps, syms, grid, g_on_grid=vals)
    exps = fp.log_deriv / m
    nonexc = (syms[fp.word_index] == 1).any(axis=1)
    best = (-math.inf, None, math.nan)
    if nonexc.any():
        e = np.where(nonexc, exps, -np.inf)
        i = int(np.argmax(e))
        best = (float(e[i]), int(codes[fp.word_index[i]]), float(fp.x[i]))
    exc = ~nonexc
    at_zero = exc & (fp.x == 0.0)
    ez = exps[at_zero]
    rec = None
    if keep:
        rec = [
            (m, str(Word.from_code(codes[w], m)), float(x), float(e), not bool(ne))
            for w, x, e, ne in zip(fp.word_index, fp.x, exps, nonexc)
        ]
    return (
        best,
        (float(ez.min()) if ez.size else math.inf, float(ez.max()) if ez.size else -math.inf),
        int(fp.x.size),
        int((~fp.converged).sum()),
        rec,
    )


def spectrum_scan(
    params: SystemParams,
    max_period: int,
    *,
    min_period: int = 1,
    grid_size: int = SCAN_GRID,
    workers: int = 1,
    keep_records: bool = False,
) -> GapCertificate:
    """Exhaustive central exponents of every periodic word of period ``min_period..max_period``.

    Each word's fixed points are bracketed on a grid of ``grid_size`` points
    and refined. Exceptional words (no symbol 1) are summarised through their
    fixed point at 0, whose exponent is ``(n0 log beta0 + n2 log beta2)/m``.
    """
    if not 1 <= min_period <= max_period <= MAX_SCAN_PERIOD:
        raise ValueError(f"periods must satisfy 1 <= min <= max <= {MAX_SCAN_PERIOD}")
    grid = np.linspace(0.0, 1.0, grid_size)
    periods = []
    records = [] if keep_records else None
    for m in range(min_period, max_period + 1):
        chunks = _batch.iter_chunks(m, chunk_depth=7)
        args = [(params.maps, m, pre, grid, keep_records) for pre in chunks]
        if workers == 1 or len(args) == 1:
            parts = [_scan_chunk(*a) for a in args]
        else:
            parts = Parallel(n_jobs=workers)(delayed(_scan_chunk)(*a) for a in args)
        best = max((p[0] for p in parts), key=lambda b: b[0])
        summary = PeriodSummary(
            period=m,
            max_nonexceptional=best[0],
            maximizer=Word.from_code(best[1], m) if best[1] is not None else None,
            maximizer_point=best[2],
            min_exceptional=min(p[1][0] for p in parts),
            max_exceptional=max(p[1][1] for p in parts),
            n_fixed_points=sum(p[2] for p in parts),
            n_unconverged=sum(p[3] for p in parts),
        )
        periods.append(summary)
        if keep_records:
            for p in parts:
                records.extend(p[4])
    top = max(periods, key=lambda p: p.max_nonexceptional)
    return GapCertificate(
        depth=max_period,
        max_nonexceptional_exponent=top.max_nonexceptional,
        min_exceptional_exponent=math.log(params.beta02_minus),
        maximizer=top.maximizer,
        periods=periods,
        records=records,
    )


@dataclass
class TransitionReport:
    """Location and one-sided slopes of the pressure kink.

    ``t_c_estimate`` is where the periodic-orbit pressure of the words that
    contain symbol 1 overtakes the lateral pressure. ``D_minus`` is the exact
    slope of the lateral pressure there and ``D_plus`` the exact slope of the
    other branch. Entropies are the ``t = 0`` intercepts of the two tangent
    lines. Uncertainties are the spread of each quantity over the reference
    depths plus the gap between ``D_plus`` and a three-point right secant.
    """

    detected: bool
    t_c_estimate: float
    pressure_at_tc: float
    D_minus: float
    D_plus: float
    entropy_minus: float
    entropy_plus: float
    depth: int
    t_c_uncertainty: float = math.nan
    D_minus_uncertainty: float = 0.0
    D_plus_uncertainty: float = math.nan
    entropy_uncertainty: float = math.nan
    bracket_width_at_tc: float = math.nan
    by_depth: dict[int, tuple[float, float, float]] = field(default_factory=dict)
    message: str = ""

    @property
    def beta_c_minus(self) -> float:
        return math.exp(-self.D_minus)

    @property
    def beta_c_plus(self) -> float:
        return math.exp(-self.D_plus)

    @property
    def kink(self) -> float:
        return self.D_plus - self.D_minus

    @property
    def kink_uncertainty(self) -> float:
        return self.D_plus_uncertainty + self.D_minus_uncertainty

    @property
    def first_order(self) -> bool:
        return self.detected and self.kink > self.kink_uncertainty

    def to_text(self) -> str:
        keys = [
            "detected", "depth", "t_c_estimate", "t_c_uncertainty", "pressure_at_tc",
            "D_minus", "D_minus_uncertainty", "D_plus", "D_plus_uncertainty",
            "kink", "kink_uncertainty", "first_order", "beta_c_minus", "beta_c_plus",
            "entropy_minus", "entropy_plus", "entropy_uncertainty", "bracket_width_at_tc",
        ]
        lines = [f"{k}={getattr(self, k)!r}" for k in keys]
        for d, (tc, dp, hp) in sorted(self.by_depth.items()):
            lines.append(f"depth_{d}=t_c:{tc!r};D_plus:{dp!r};entropy_plus:{hp!r}")
        if self.message:
            lines.append(f"message={self.message}")
        return "\n".join(lines) + "\n"


def _crossing(stats: CylinderStats, params, t_grid, xtol):
    nonexc = stats.nonexceptional

    def gap(t):
        return stats.log_partition(t, "periodic", nonexc) - lateral_pressure(params, t)

    d = np.array([gap(x) for x in t_grid])
    above = d > 0
    if above.all() or not above.any() or not above[-1]:
        return None
    k = int(np.flatnonzero(~above)[-1])
    if k + 1 >= t_grid.size:
        return None
    if d[k] == 0.0:
        return float(t_grid[k])
    return float(brentq(gap, t_grid[k], t_grid[k + 1], xtol=xtol))


def _branch_numbers(stats, params, t_grid, xtol):
    tc = _crossing(stats, params, t_grid, xtol)
    if tc is None:
        return None
    dp = stats.slope(tc, "periodic", stats.nonexceptional, side="right")
    pc = lateral_pressure(params, tc)
    return tc, dp, pc - tc * dp


def locate_transition(
    curve: PressureCurve,
    params: SystemParams,
    tol: float = 1e-3,
    *,
    reference_depths: Sequence[int] | None = None,
    step: float = 0.05,
    workers: int = 1,
) -> TransitionReport:
    """Find the kink of the pressure curve and the two tangent slopes there.

    ``reference_depths`` (default: the two depths below the curve's) are
    recomputed to measure how much the estimates still move with depth.
    ``tol`` is the localisation tolerance for ``t_c``.
    """
    stats = curve.stats
    if stats is None or not stats.has_periodic:
        raise ValueError("curve must carry periodic cylinder statistics")
    main = _branch_numbers(stats, params, curve.t, tol * 1e-3)
    if main is None:
        return TransitionReport(False, math.nan, math.nan, math.nan, math.nan, math.nan, math.nan,
                                curve.depth, message="no crossing of the non-lateral branch on the grid")
    tc, dp, hp = main
    pc = lateral_pressure(params, tc)
    dm = lateral_derivative(params, tc)
    hm = pc - tc * dm
    if reference_depths is None:
        reference_depths = [d for d in (curve.depth - 2, curve.depth - 1) if d >= 2]
    by_depth = {curve.depth: (tc, dp, hp)}
    for d in reference_depths:
        ref = cylinder_stats(params, d, workers=workers)
        nums = _branch_numbers(ref, params, curve.t, tol * 1e-3)
        if nums is not None:
            by_depth[d] = nums
    tcs = np.array([v[0] for v in by_depth.values()])
    dps = np.array([v[1] for v in by_depth.values()])
    hps = np.array([v[2] for v in by_depth.values()])
    nonexc = stats.nonexceptional
    f = [stats.log_partition(tc + k * step, "periodic", nonexc) for k in range(3)]
    secant = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * step)
    tc_unc = float(np.max(np.abs(tcs - tc))) + tol
    dm_unc = float(abs(lateral_derivative(params, tc + tc_unc) - dm))
    dp_unc = float(np.max(np.abs(dps - dp))) + abs(secant - dp)
    h_unc = float(np.max(np.abs(hps - hp)))
    width = float(stats.log_partition(tc, "upper") - stats.log_partition(tc, "periodic"))
    return TransitionReport(
        detected=True,
        t_c_estimate=tc,
        pressure_at_tc=pc,
        D_minus=dm,
        D_plus=dp,
        entropy_minus=hm,
        entropy_plus=hp,
        depth=curve.depth,
        t_c_uncertainty=tc_unc,
        D_minus_uncertainty=dm_unc,
        D_plus_uncertainty=dp_unc,
        entropy_uncertainty=h_unc,
        bracket_width_at_tc=width,
        by_depth=by_depth,
    )


@dataclass(frozen=True)
class AsymptoticSlopes:
    slope_minus_inf: float
    slope_plus_inf: float
    width_minus: float
    width_plus: float
    t_minus: float
    t_plus: float


def asymptotic_slopes(curve: PressureCurve) -> AsymptoticSlopes:
    """Secant slopes of the bracket midpoint at both ends of the grid, with the bracket widths there."""
    t, mid, w = curve.t, curve.midpoint, curve.width
    lo = (mid[1] - mid[0]) / (t[1] - t[0])
    hi = (mid[-1] - mid[-2]) / (t[-1] - t[-2])
    return AsymptoticSlopes(
        float(lo), float(hi), float(max(w[0], w[1])), float(max(w[-1], w[-2])), float(t[0]), float(t[-1])
    )


@dataclass(frozen=True)
class CriterionResult:
    inf_lateral: float
    sup_off_lateral: float
    depth: int

    @property
    def holds(self) -> bool:
        return self.inf_lateral > self.sup_off_lateral

    def __bool__(self) -> bool:
        return self.holds


def transition_criterion(
    params: SystemParams, potential: Potential, n: int, *, grid_size: int = SCAN_GRID
) -> CriterionResult:
    """Compare the potential's minimum on the lateral horseshoe with its largest periodic average elsewhere.

    The first number is the minimum per-symbol Birkhoff average at fiber 0
    over words in ``{0, 2}`` of length up to ``n``; the second the maximum
    per-symbol average at fixed points of words containing 1, over periods
    up to ``n``. The criterion holds iff the first exceeds the second.
    """
    if not 1 <= n <= MAX_SCAN_PERIOD:
        raise ValueError(f"n must be in [1, {MAX_SCAN_PERIOD}]")
    grid = np.linspace(0.0, 1.0, grid_size)
    inf_lat = math.inf
    sup_off = -math.inf
    for m in range(1, n + 1):
        _, _, lat = _batch.tree_orbits(params.maps, m, np.array([0.0]), (0, 2), potential=potential)
        inf_lat = min(inf_lat, float(lat.min()) / m)
        for pre in _batch.iter_chunks(m, chunk_depth=7):
            codes, vals, _ = _batch.tree_orbits(params.maps, m, grid, prefix=pre)
            syms = codes_to_symbols(codes, m)
            keep = (syms == 1).any(axis=1)
            if not keep.any():
                continue
            fp = _batch.locate_fixed_points(params.maps, syms[keep], grid, g_on_grid=vals[keep])
            _, sums = _batch.compose(params.maps, syms[keep][fp.word_index], fp.x, potential)
            if sums.size:
                sup_off = max(sup_off, float(sums.max()) / m)
    return CriterionResult(inf_lat, sup_off, n)


def write_curve_csv(curve: PressureCurve, fh) -> None:
    fh.write("t,lower,upper,lateral,nonlateral,secant_left,secant_right\n")
    for row in zip(curve.t, curve.lower, curve.upper, curve.lateral, curve.nonlateral, curve.secant_left, curve.secant_right):
        fh.write(",".join(repr(float(v)) for v in row) + "\n")


def write_spectrum_csv(cert: GapCertificate, fh) -> None:
    fh.write("period,word,fixed_point,exponent,exceptional\n")
    if cert.records is not None:
        for m, w, x, e, exc in cert.records:
            fh.write(f"{m},{w},{x!r},{e!r},{int(exc)}\n")
    else:
        for p in cert.periods:
            if p.maximizer is not None:
                fh.write(f"{p.period},{p.maximizer},{p.maximizer_point!r},{p.max_nonexceptional!r},0\n")
