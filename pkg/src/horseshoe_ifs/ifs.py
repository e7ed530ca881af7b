"""Composition machinery for the fiber IFS.

``f_[x0 ... xm] = f_xm o ... o f_x0``: the first symbol acts first. Derivatives
of compositions are accumulated as sums of log|f'| along the orbit with the
sign tracked separately (it is ``(-1)**n1``, ``n1`` the number of 1s).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import _batch
from .fiber import DOMAIN_SLACK, DomainError, SystemParams, invert
from .symbolic import Word, _as_word, count_symbols

__all__ = [
    "ComposedMap",
    "ExponentRecord",
    "FiberInterval",
    "ReturnAnalysis",
    "IterationCapError",
    "compose_eval",
    "fixed_points",
    "fiber_interval",
    "analyze_returns",
    "analyze_returns_batch",
    "expanding_itinerary",
    "Itinerary",
    "SingleReturn",
    "single_return",
    "ladder_window",
    "choose_ladder_b",
    "ReturnClaimSummary",
    "sample_return_claims",
    "ItinerarySummary",
    "sample_itineraries",
    "write_exponent_csv",
    "write_interval_csv",
]

FIXED_POINT_GRID = 2**10 + 1


class IterationCapError(RuntimeError):
    """An iterative procedure hit its cap; ``last`` holds the last state."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


@dataclass(frozen=True)
class ComposedMap:
    """``f_[word]`` for one parameter set; callable on points of ``[0, 1]``."""

    word: Word
    params: SystemParams

    def __call__(self, x):
        return compose_eval(self.params, self.word, x)[0]

    @property
    def sign(self) -> int:
        return -1 if count_symbols(self.word)[1] % 2 else 1

    def log_abs_deriv(self, x):
        return compose_eval(self.params, self.word, x)[1]


@dataclass(frozen=True)
class ExponentRecord:
    word: Word
    fixed_point: float
    exponent: float
    attracting: bool
    period_multiplier: int = 1
    converged: bool = True
    bracket: tuple[float, float] = (math.nan, math.nan)


@dataclass(frozen=True)
class FiberInterval:
    word: Word
    left: float
    right: float
    iterations: int = 0

    @property
    def width(self) -> float:
        return self.right - self.left

    def is_trivial(self, tol: float) -> bool:
        return self.width < tol


@dataclass
class ReturnAnalysis:
    """Visits of one fiber orbit to ``H = [0, delta]`` and ``H' = [delta', 1]``.

    Indices refer to orbit points ``p_j`` (``p_0 = x0``). For each completed
    visit ``k``: ``approach_times[k] <= j < entry_times[k]`` lie in ``H'``,
    ``entry_times[k] <= j <= exit_times[k]`` lie in ``H``.
    """

    orbit: np.ndarray
    log_derivs: np.ndarray
    entry_times: list[int] = field(default_factory=list)
    exit_times: list[int] = field(default_factory=list)
    approach_times: list[int] = field(default_factory=list)
    block_lengths: list[int] = field(default_factory=list)
    block_exponents: list[float] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)

    @property
    def n_returns(self) -> int:
        return len(self.entry_times)


def _symbols_array(word: Word) -> np.ndarray:
    return np.asarray(word.symbols, dtype=np.int8)[None, :]


def compose_eval(params: SystemParams, word, x):
    """Value, log|derivative| and sign of ``f_[word]`` at ``x``.

    ``x`` may be a scalar or an array. Orbit points that drift out of
    ``[0, 1]`` by less than ``1e-12`` are clamped.
    """
    w = _as_word(word)
    xs = np.asarray(x, dtype=float)
    if np.any(xs < -DOMAIN_SLACK) or np.any(xs > 1 + DOMAIN_SLACK):
        raise DomainError("x must lie in [0, 1]")
    flat = np.clip(xs.reshape(-1), 0.0, 1.0)
    syms = np.broadcast_to(_symbols_array(w), (flat.size, len(w)))
    val, logd = _batch.compose(params.maps, syms, flat)
    sign = -1 if count_symbols(w)[1] % 2 else 1
    if xs.ndim == 0:
        return float(val[0]), float(logd[0]), sign
    return val.reshape(xs.shape), logd.reshape(xs.shape), sign


def _records_from_batch(word, batch, power):
    m = len(word) * power
    out = []
    for x, ld, lo, hi, conv in zip(batch.x, batch.log_deriv, batch.bracket_lo, batch.bracket_hi, batch.converged):
        out.append(
            ExponentRecord(
                word=word,
                fixed_point=float(x),
                exponent=float(ld) / m,
                attracting=bool(ld < 0),
                period_multiplier=power,
                converged=bool(conv),
                bracket=(float(lo), float(hi)),
            )
        )
    return out


def fixed_points(params: SystemParams, word, grid_size: int = FIXED_POINT_GRID) -> list[ExponentRecord]:
    """All fixed points of ``g = f_[word]`` with their per-symbol exponents.

    For orientation-reversing words the period-two points of ``g`` (fixed
    points of ``g**2`` other than the fixed point of ``g``) are appended with
    ``period_multiplier = 2``; their exponent is averaged over ``2 * len(word)``
    symbols. Unconverged refinements are returned with ``converged=False``.
    """
    w = _as_word(word)
    grid = np.linspace(0.0, 1.0, grid_size)
    syms = _symbols_array(w)
    batch = _batch.locate_fixed_points(params.maps, syms, grid)
    records = _records_from_batch(w, batch, 1)
    if count_symbols(w)[1] % 2:
        batch2 = _batch.locate_fixed_points(params.maps, np.concatenate([syms, syms], axis=1), grid)
        own = [r.fixed_point for r in records]
        for rec in _records_from_batch(w, batch2, 2):
            if all(abs(rec.fixed_point - x) > 1e-9 for x in own):
                records.append(rec)
        records.sort(key=lambda r: r.fixed_point)
    return records


def fiber_interval(params: SystemParams, word, tol: float = 1e-12, max_iter: int = 10**6) -> FiberInterval:
    """Limit of the nested images ``g**n([0, 1])`` (``g**2`` when ``g`` reverses orientation).

    The endpoint iteration is accelerated: while an endpoint sits in a
    contracting neighbourhood, a Newton step on ``G(x) - x`` is tried and kept
    only if it stays on the correct side (the images are monotone sequences).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    w = _as_word(word)
    power = 2 if count_symbols(w)[1] % 2 else 1
    big = w * power
    left, right = 0.0, 1.0
    for it in range(1, max_iter + 1):
        (new_left, new_right), (ld_l, ld_r), _ = compose_eval(params, big, np.array([left, right]))
        # G is increasing: images of the endpoints bound the next interval
        new_left, new_right = max(new_left, left), min(new_right, right)
        # accelerate with a Newton step that cannot overshoot the fixed point
        for side in (0, 1):
            x_old = (left, right)[side]
            x_new = (new_left, new_right)[side]
            slope = math.exp((ld_l, ld_r)[side])
            if x_new != x_old and slope < 1.0:
                cand = x_old + (x_new - x_old) / (1.0 - slope)
                cand = min(max(cand, 0.0), 1.0)
                gc = compose_eval(params, big, cand)[0]
                if side == 0 and gc >= cand and cand > x_new:
                    new_left = cand
                if side == 1 and gc <= cand and cand < x_new:
                    new_right = cand
        moved = max(abs(new_left - left), abs(new_right - right))
        left, right = new_left, new_right
        if right < left:
            left = right = 0.5 * (left + right)
        if moved < tol:
            return FiberInterval(w, left, right, it)
    raise IterationCapError(f"fiber interval of {w} did not settle in {max_iter} steps", last=(left, right))


def analyze_returns(params: SystemParams, word, x0: float, H: tuple[float, float], Hprime: tuple[float, float]) -> ReturnAnalysis:
    """Entry/exit/approach times of the orbit of ``x0`` under ``word`` for ``H`` and ``H'``.

    The structural facts used in the gap argument are checked at every
    completed visit and listed in ``violations`` when they fail: the symbol
    before entry is 1, the symbols during the approach through ``H'`` are 0,
    and the approach point lies in ``[delta', f0(delta'))``.
    """
    w = _as_word(word)
    if not 0.0 <= x0 <= 1.0:
        raise DomainError("x0 must lie in [0, 1]")
    return analyze_returns_batch(params, np.asarray(w.symbols, dtype=np.int8)[None, :], np.array([x0]), H, Hprime)[0]


def analyze_returns_batch(params: SystemParams, symbols, x0, H, Hprime) -> list[ReturnAnalysis]:
    """:func:`analyze_returns` for many orbits; ``symbols`` is ``(K, n)``, ``x0`` is ``(K,)``."""
    symbols = np.asarray(symbols, dtype=np.int8)
    orbits, logs = _batch.trace(params.maps, symbols, np.asarray(x0, dtype=float))
    f0_dp = float(params.f0._value(np.float64(Hprime[0])))
    return [_returns_from_orbit(symbols[k], orbits[k], logs[k], H, Hprime, f0_dp) for k in range(symbols.shape[0])]


def _returns_from_orbit(syms, orbit, logs, H, Hprime, f0_dp) -> ReturnAnalysis:
    n = syms.size
    in_h = (orbit >= H[0]) & (orbit <= H[1])
    in_hp = (orbit >= Hprime[0]) & (orbit <= Hprime[1])
    out = ReturnAnalysis(orbit=orbit, log_derivs=logs)
    delta_p = Hprime[0]
    entries = np.flatnonzero(in_h[1:] & ~in_h[:-1]) + 1
    for r in entries:
        r = int(r)
        e = r
        while e + 1 <= n and in_h[e + 1]:
            e += 1
        if e == n:
            # visit still running when the word ends
            break
        i = r - 1
        if not in_hp[i]:
            out.violations.append(f"entry at {r} not preceded by H'")
            continue
        while i - 1 >= 0 and in_hp[i - 1]:
            i -= 1
        if i == 0:
            # approach began before the word; block incomplete
            continue
        if syms[r - 1] != 1:
            out.violations.append(f"symbol before entry {r} is {syms[r - 1]}, expected 1")
        if np.any(syms[i - 1 : r - 1] != 0):
            out.violations.append(f"non-zero symbol during approach {i - 1}..{r - 2}")
        if not (delta_p <= orbit[i] < f0_dp):
            out.violations.append(f"approach point p_{i}={orbit[i]!r} outside [delta', f0(delta'))")
        out.entry_times.append(r)
        out.exit_times.append(e)
        out.approach_times.append(i)
        out.block_lengths.append(r - i - 1)
        out.block_exponents.append(float(logs[i : e + 1].sum()) / (e - i + 1))
    return out


@dataclass(frozen=True)
class Itinerary:
    """Result of :func:`expanding_itinerary`.

    ``domain`` is the sub-interval of ``J`` followed to the end; the word's
    map sends it over itself with ``|g'| >= kappa_est`` everywhere on it.
    """

    word: Word
    kappa_est: float
    fixed_point: float
    domain: tuple[float, float]
    returns: int


@dataclass(frozen=True)
class SingleReturn:
    n_steps: int
    image: tuple[float, float]
    min_abs_deriv: float


def _compose_interval(params, word, lo, hi):
    vals, _, sign = compose_eval(params, word, np.array([lo, hi]))
    return (float(vals.min()), float(vals.max())), sign


def _preimage_point(params, word: Word, y: float) -> float:
    x = y
    for s in reversed(word.symbols):
        x = float(invert(params.maps[s], x))
    return x


def ladder_window(params: SystemParams, b: float) -> tuple[float, float, float]:
    """``(f0^-2(b), f0^-1(b), b)``: the two fundamental domains next to 0."""
    f0 = params.f0
    mid = float(invert(f0, b))
    return float(invert(f0, mid)), mid, b


def single_return(params: SystemParams, J, b: float, cap: int = 10**5, samples: int = 65) -> SingleReturn:
    """``f1 o f0^n(J)`` with ``n = n(J)`` least such that ``f0^n(J)`` lies in ``[1 - b, 1]``."""
    lo, hi = float(J[0]), float(J[1])
    x = np.array([lo, hi])
    for k in range(cap + 1):
        if x[0] >= 1.0 - b:
            word = Word((0,) * k + (1,))
            pts = np.linspace(lo, hi, samples)
            vals, logs, _ = compose_eval(params, word, pts)
            return SingleReturn(k, (float(vals.min()), float(vals.max())), float(np.exp(logs.min())))
        x = params.f0._value(x)
    raise IterationCapError("f0-ladder never reached [1 - b, 1]", last=(lo, hi))


def choose_ladder_b(params: SystemParams, candidates=None, samples: int = 401) -> float:
    """Largest candidate ``b <= delta`` for which every single return from the window expands.

    Every point of ``[f0^-2(b), b]`` is checked against all return lengths an
    interval through it can be assigned (its own, and up to the window's
    largest), requiring ``|(f1 o f0^n)'| > 1`` and an image inside ``(0, b]``.
    """
    if candidates is None:
        candidates = params.delta * np.array([1.0, 0.75, 0.5, 0.25, 0.1, 0.05])
    for b in sorted((float(c) for c in candidates if 0 < c <= params.delta), reverse=True):
        lo, _, _ = ladder_window(params, b)
        xs = np.linspace(lo, b, samples)
        x = xs.copy()
        logs = np.zeros_like(x)
        first = np.full(x.size, -1)
        history = []
        k = 0
        while k < 10**5:
            first[(x >= 1.0 - b) & (first < 0)] = k
            history.append((x.copy(), logs.copy()))
            if (first >= 0).all():
                break
            logs = logs + _batch._log_abs_deriv(params.f0, x)
            x = params.f0._value(x)
            k += 1
        n_max = int(first.max())
        ok = True
        for i in range(xs.size):
            for n in range(first[i], n_max + 1):
                xn, ln = history[n][0][i], history[n][1][i]
                if math.log(params.gamma) + ln <= 0.0 or params.gamma * (1.0 - xn) > b:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return b
    raise ValueError("no admissible b among the candidates")


def _climb(params, img, sub, mid_win, cap=10**5):
    ends = np.array(img)
    first_meet = None
    for m in range(cap):
        if ends[0] <= sub[0] and ends[1] >= sub[1]:
            return m
        if first_meet is None and ends[1] >= mid_win:
            first_meet = m
        if ends[0] > sub[0] and first_meet is not None:
            # covering is out of reach from here on
            break
        ends = params.f0._value(ends)
    if first_meet is None:
        raise IterationCapError("image never climbed back to the window", last=img)
    return first_meet


def expanding_itinerary(params: SystemParams, J: tuple[float, float], b: float, max_returns: int = 200) -> Itinerary:
    """Expanding return word for an interval ``J`` inside ``[f0^-2(b), b]``.

    Each return appends ``0^n 1`` (``n`` least pushing the current image into
    ``[1 - b, 1]``) and then ``0^m``: the least ``m`` whose image covers the
    followed sub-interval if there is one, otherwise the least ``m`` bringing
    the image back to meet ``[f0^-1(b), b]``. Parts of the image leaving ``[f0^-2(b), b]`` are cut
    away, which shrinks the followed sub-interval of ``J``. The loop stops once
    the image covers the followed sub-interval; the map expands there and has
    exactly one fixed point in it.

    Raises
    ------
    IterationCapError
        If no covering is reached within ``max_returns`` returns.
    """
    lo_win, mid_win, _ = ladder_window(params, b)
    a0, a1 = float(J[0]), float(J[1])
    if not (lo_win - 1e-15 <= a0 < a1 <= b + 1e-15):
        raise ValueError("J must be a non-trivial interval inside [f0^-2(b), b]")
    sub = (a0, a1)
    syms: list[int] = []
    img = sub
    for ret in range(1, max_returns + 1):
        step = single_return(params, img, b)
        syms += [0] * step.n_steps + [1]
        img = step.image
        syms += [0] * _climb(params, img, sub, mid_win)
        word = Word(tuple(syms))
        img, _ = _compose_interval(params, word, *sub)
        if img[0] < lo_win or img[1] > b:
            c_lo, c_hi = max(img[0], lo_win), min(img[1], b)
            if c_lo >= c_hi:
                raise IterationCapError("image left the window", last=word)
            p_lo = _preimage_point(params, word, c_lo)
            p_hi = _preimage_point(params, word, c_hi)
            sub = (max(min(p_lo, p_hi), sub[0]), min(max(p_lo, p_hi), sub[1]))
            img, _ = _compose_interval(params, word, *sub)
        if img[0] <= sub[0] and img[1] >= sub[1]:
            grid = np.linspace(sub[0], sub[1], 257)
            _, logs, _ = compose_eval(params, word, grid)
            q = _expanding_fixed_point(params, word, sub)
            return Itinerary(word, float(np.exp(logs.min())), q, sub, ret)
    raise IterationCapError(f"no expanding cover after {max_returns} returns", last=Word(tuple(syms)))


def _expanding_fixed_point(params, word: Word, sub):
    lo, hi = sub
    h_lo = compose_eval(params, word, lo)[0] - lo
    h_hi = compose_eval(params, word, hi)[0] - hi
    if h_lo == 0.0:
        return lo
    if h_hi == 0.0:
        return hi
    if np.sign(h_lo) == np.sign(h_hi):
        raise IterationCapError("no sign change of g(x) - x on the followed interval", last=sub)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        h_mid = compose_eval(params, word, mid)[0] - mid
        if h_mid == 0.0 or hi - lo < 1e-15:
            return mid
        if np.sign(h_mid) == np.sign(h_lo):
            lo, h_lo = mid, h_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ReturnClaimSummary:
    """Worst cases of the two return inequalities over a batch of random orbits.

    ``min_depth_slack`` is the least value of ``p_r - lambda0**(N+1) * delta``
    at an entry point ``p_r`` after an approach block of ``N`` zeros;
    ``max_block_excess`` the largest block-average log-derivative minus
    ``log beta'``. Both claims hold when the first is ``>= 0`` and the second
    ``< 0``.
    """

    n_orbits: int
    orbit_length: int
    n_returns: int
    violations: tuple[str, ...]
    min_depth_slack: float
    max_block_excess: float
    seed: int

    @property
    def holds(self) -> bool:
        return self.n_returns > 0 and not self.violations and self.min_depth_slack >= 0 and self.max_block_excess < 0


def sample_return_claims(
    params: SystemParams,
    n_orbits: int = 10_000,
    length: int = 400,
    *,
    seed: int = 0,
    zero_bias: float = 0.9,
    batch: int = 2000,
) -> ReturnClaimSummary:
    """Check the return inequalities along random orbits.

    Symbols are 0 with probability ``zero_bias`` and otherwise uniform on
    ``{1, 2}``, so that orbits keep climbing towards 1 and returning near 0.
    Starting points are uniform on ``[0, 1]``.
    """
    from .conditions import derive_constants

    if not 0.0 <= zero_bias < 1.0:
        raise ValueError("zero_bias must lie in [0, 1)")
    consts = derive_constants(params)
    log_bp = math.log(consts.betaPrime)
    H = (0.0, params.delta)
    Hp = (consts.deltaPrime, 1.0)
    rng = np.random.default_rng(seed)
    n_ret = 0
    viol: list[str] = []
    min_slack, max_excess = math.inf, -math.inf
    done = 0
    while done < n_orbits:
        k = min(batch, n_orbits - done)
        syms = np.where(rng.random((k, length)) < zero_bias, 0, rng.integers(1, 3, (k, length))).astype(np.int8)
        x0 = rng.random(k)
        for j, r in enumerate(analyze_returns_batch(params, syms, x0, H, Hp)):
            n_ret += r.n_returns
            viol += [f"orbit {done + j}: {v}" for v in r.violations]
            for ent, n, ex in zip(r.entry_times, r.block_lengths, r.block_exponents):
                min_slack = min(min_slack, float(r.orbit[ent]) - params.lambda0 ** (n + 1) * params.delta)
                max_excess = max(max_excess, ex - log_bp)
        done += k
    return ReturnClaimSummary(n_orbits, length, n_ret, tuple(viol), min_slack, max_excess, seed)


@dataclass(frozen=True)
class ItinerarySummary:
    """Outcome of :func:`sample_itineraries`.

    ``itineraries`` pairs each solved interval with its itinerary;
    ``failures`` lists ``(J, reason)``.
    """

    b: float
    itineraries: tuple[tuple[tuple[float, float], Itinerary], ...]
    intervals: tuple[tuple[float, float], ...]
    failures: tuple[tuple[tuple[float, float], str], ...]
    min_kappa: float
    max_residual: float
    min_fixed_point_exponent: float
    seed: int

    @property
    def holds(self) -> bool:
        return not self.failures and self.min_kappa > 1.0 and self.min_fixed_point_exponent > 0.0


def sample_itineraries(
    params: SystemParams, count: int = 100, *, b: float | None = None, seed: int = 0, max_returns: int = 200
) -> ItinerarySummary:
    """Run :func:`expanding_itinerary` on random intervals of ``[f0^-2(b), b]``.

    Each returned fixed point is re-checked: its residual ``|g(q) - q|`` and
    its log-derivative (positive means repelling) are recorded.
    """
    if b is None:
        b = choose_ladder_b(params)
    lo, _, hi = ladder_window(params, b)
    rng = np.random.default_rng(seed)
    its, Js, fails = [], [], []
    kappa, resid, expo = math.inf, 0.0, math.inf
    for _ in range(count):
        a, c = np.sort(rng.uniform(lo, hi, 2))
        J = (float(a), float(c))
        Js.append(J)
        try:
            it = expanding_itinerary(params, J, b, max_returns=max_returns)
        except IterationCapError as exc:
            fails.append((J, str(exc)))
            continue
        val, ld, _ = compose_eval(params, it.word, it.fixed_point)
        its.append((J, it))
        kappa = min(kappa, it.kappa_est)
        resid = max(resid, abs(float(val) - it.fixed_point))
        expo = min(expo, float(ld))
        if not ld > 0:
            fails.append((J, f"fixed point {it.fixed_point!r} not repelling"))
    return ItinerarySummary(b, tuple(its), tuple(Js), tuple(fails), kappa, resid, expo, seed)


def write_exponent_csv(records: Iterable[ExponentRecord], fh) -> None:
    writer = csv.writer(fh)
    writer.writerow(["word", "fixed_point", "exponent", "attracting"])
    for r in records:
        writer.writerow([str(r.word), repr(r.fixed_point), repr(r.exponent), int(r.attracting)])


def write_interval_csv(intervals: Iterable[FiberInterval], fh) -> None:
    writer = csv.writer(fh)
    writer.writerow(["word", "left", "right"])
    for iv in intervals:
        writer.writerow([str(iv.word), repr(iv.left), repr(iv.right)])
