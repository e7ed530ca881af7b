"""Finite periodic-atom measures and Bernoulli-lift estimates.

Every atom sits at an endpoint of the fiber interval of a periodic word, the
maximal invariant set of the word's composed map. For words with an odd
number of 1s that map reverses orientation and the endpoints are the
outermost fixed points of its square.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import _batch
from .fiber import SystemParams
from .symbolic import Word, codes_to_symbols

__all__ = [
    "BernoulliSpec",
    "AtomicMeasure",
    "maxent_approximant",
    "horseshoe_pair",
    "bernoulli_lift_bound",
    "fiber_endpoints",
    "fiber_triviality_sample",
    "UniquenessReport",
    "uniqueness_check",
    "write_atoms_csv",
]

MAX_MAXENT_PERIOD = 12
MAX_PAIR_PERIOD = 14
ENDPOINT_GRID = 129


@dataclass(frozen=True)
class BernoulliSpec:
    p0: float
    p1: float
    p2: float

    def __post_init__(self):
        p = self.probabilities
        if np.any(p < 0) or not math.isclose(p.sum(), 1.0, abs_tol=1e-12):
            raise ValueError(f"not a probability vector: {tuple(p)}")

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([self.p0, self.p1, self.p2], dtype=float)

    @property
    def entropy(self) -> float:
        p = self.probabilities
        p = p[p > 0]
        return float(-(p * np.log(p)).sum())


@dataclass
class AtomicMeasure:
    """Finitely many weighted atoms ``(word, fiber point)`` of a common period.

    ``exponents`` holds the central exponent at each atom, i.e. the
    per-symbol log-derivative of the composed map at the fiber point.
    """

    period: int
    codes: np.ndarray
    fiber_points: np.ndarray
    weights: np.ndarray
    exponents: np.ndarray
    base_entropy: float

    def __post_init__(self):
        if not (self.codes.shape == self.fiber_points.shape == self.weights.shape == self.exponents.shape):
            raise ValueError("atom arrays must have equal shapes")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be non-negative and sum to 1")

    def __len__(self) -> int:
        return int(self.codes.size)

    @property
    def exponent_avg(self) -> float:
        return float(np.dot(self.weights, self.exponents))

    def words(self) -> list[str]:
        return [str(Word.from_code(int(c), self.period)) for c in self.codes]

    def support(self) -> set[int]:
        return set(int(c) for c in np.unique(self.codes))

    def atoms(self) -> Iterator[tuple[Word, float, float]]:
        for c, x, w in zip(self.codes, self.fiber_points, self.weights):
            yield Word.from_code(int(c), self.period), float(x), float(w)


def _outermost(params, syms, grid, g_on_grid):
    """Fiber-interval endpoints and per-symbol exponents for rows of ``syms``."""
    maps = params.maps
    m = syms.shape[1]
    odd = (syms == 1).sum(axis=1) % 2 == 1
    lo = np.empty(syms.shape[0])
    hi = np.empty_like(lo)
    e_lo = np.empty_like(lo)
    e_hi = np.empty_like(lo)
    ev = ~odd
    if ev.any():
        a, b, la, lb = _batch.outermost_fixed_points(maps, syms[ev], grid, g_on_grid[ev])
        lo[ev], hi[ev], e_lo[ev], e_hi[ev] = a, b, la / m, lb / m
    if odd.any():
        s = syms[odd]
        g2, _ = _batch.compose(maps, s, g_on_grid[odd])
        a, b, la, lb = _batch.outermost_fixed_points(maps, np.hstack([s, s]), grid, g2)
        lo[odd], hi[odd], e_lo[odd], e_hi[odd] = a, b, la / (2 * m), lb / (2 * m)
    return lo, hi, e_lo, e_hi


def fiber_endpoints(params: SystemParams, symbols, grid_size: int = ENDPOINT_GRID):
    """Endpoints ``(lo, hi)`` of the fiber intervals of the rows of ``symbols`` plus their exponents."""
    syms = np.atleast_2d(np.asarray(symbols, dtype=np.int64))
    grid = np.linspace(0.0, 1.0, grid_size)
    g, _ = _batch.compose(params.maps, syms, np.broadcast_to(grid, (syms.shape[0], grid.size)))
    return _outermost(params, syms, grid, g)


def maxent_approximant(params: SystemParams, m: int, *, grid_size: int = ENDPOINT_GRID) -> AtomicMeasure:
    """Equal weights on both fiber-interval endpoints of every period-``m`` word containing a 1.

    Words are all length-``m`` strings, not only those of least period ``m``.
    """
    if not 1 <= m <= MAX_MAXENT_PERIOD:
        raise ValueError(f"m must be in [1, {MAX_MAXENT_PERIOD}]")
    grid = np.linspace(0.0, 1.0, grid_size)
    parts = []
    for pre in _batch.iter_chunks(m):
        codes, vals, _ = _batch.tree_orbits(params.maps, m, grid, prefix=pre)
        syms = codes_to_symbols(codes, m)
        keep = (syms == 1).any(axis=1)
        lo, hi, e_lo, e_hi = _outermost(params, syms[keep], grid, vals[keep])
        parts.append((codes[keep], lo, hi, e_lo, e_hi))
    codes, lo, hi, e_lo, e_hi = (np.concatenate(c) for c in zip(*parts))
    count = codes.size
    return AtomicMeasure(
        period=m,
        codes=np.repeat(codes, 2),
        fiber_points=np.column_stack([lo, hi]).ravel(),
        weights=np.full(2 * count, 0.5 / count),
        exponents=np.column_stack([e_lo, e_hi]).ravel(),
        base_entropy=math.log(count) / m,
    )


def horseshoe_pair(params: SystemParams, m: int, *, grid_size: int = ENDPOINT_GRID) -> tuple[AtomicMeasure, AtomicMeasure]:
    """Two measures over the same ``{0, 2}`` words of period ``m``.

    The first sits at the top of each fiber interval (attracting side), the
    second at fiber 0 (the expanding lateral horseshoe).
    """
    if not 1 <= m <= MAX_PAIR_PERIOD:
        raise ValueError(f"m must be in [1, {MAX_PAIR_PERIOD}]")
    grid = np.linspace(0.0, 1.0, grid_size)
    parts = []
    for pre in _batch.iter_chunks(m, alphabet=(0, 2)):
        codes, vals, _ = _batch.tree_orbits(params.maps, m, grid, alphabet=(0, 2), prefix=pre)
        syms = codes_to_symbols(codes, m)
        _, hi, _, e_hi = _outermost(params, syms, grid, vals)
        _, at_zero = _batch.compose(params.maps, syms, np.zeros(codes.size))
        parts.append((codes, hi, e_hi, at_zero / m))
    codes, hi, e_hi, e_zero = (np.concatenate(c) for c in zip(*parts))
    n = codes.size
    w = np.full(n, 1.0 / n)
    ent = math.log(n) / m
    mu1 = AtomicMeasure(m, codes, hi, w, e_hi, ent)
    mu2 = AtomicMeasure(m, codes.copy(), np.zeros(n), w.copy(), e_zero, ent)
    return mu1, mu2


def bernoulli_lift_bound(spec: BernoulliSpec, params: SystemParams) -> float:
    """Upper bound on the central exponent of any lift of ``spec``."""
    return spec.p1 * math.log(params.gamma) + (spec.p0 + spec.p2) * math.log(params.beta02_plus)


def fiber_triviality_sample(
    spec: BernoulliSpec,
    params: SystemParams,
    samples: int = 1000,
    word_len: int = 60,
    tol: float = 1e-9,
    *,
    seed: int = 0,
    grid_size: int = ENDPOINT_GRID,
    return_widths: bool = False,
):
    """Fraction of ``spec``-random words whose fiber interval is narrower than ``tol``.

    Words are drawn from ``numpy.random.default_rng(seed)``.
    """
    if samples < 100:
        raise ValueError("samples must be >= 100")
    if word_len < 1:
        raise ValueError("word_len must be >= 1")
    rng = np.random.default_rng(seed)
    syms = rng.choice(3, size=(samples, word_len), p=spec.probabilities)
    lo, hi, _, _ = fiber_endpoints(params, syms, grid_size)
    widths = hi - lo
    frac = float(np.mean(widths < tol))
    if return_widths:
        return frac, syms, widths
    return frac


@dataclass
class UniquenessReport:
    applicable: bool
    gamma_beta_sq: float
    lift_bound: float
    exponents: dict[int, float]
    message: str = ""

    @property
    def holds(self) -> bool:
        """Every approximant exponent is negative and none drifts above the first one."""
        if not self.applicable or not self.exponents:
            return False
        vals = list(self.exponents.values())
        return all(v < 0 for v in vals) and max(vals) <= vals[0] * 0.5

    def to_text(self) -> str:
        lines = [
            f"applicable={self.applicable}",
            f"gamma_beta_sq={self.gamma_beta_sq!r}",
            f"lift_bound={self.lift_bound!r}",
        ]
        lines += [f"exponent_m{m}={e!r}" for m, e in sorted(self.exponents.items())]
        lines.append(f"holds={self.holds}")
        if self.message:
            lines.append(f"message={self.message}")
        return "\n".join(lines) + "\n"


def uniqueness_check(params: SystemParams, m: int | Sequence[int] = (6, 9, 12)) -> UniquenessReport:
    """Check that the maximal-entropy approximants keep a negative central exponent.

    Only meaningful when ``gamma * beta02_plus**2 < 1``; otherwise the report
    is returned with ``applicable=False`` and no exponents.
    """
    ms = [m] if isinstance(m, int) else list(m)
    gb = params.gamma * params.beta02_plus**2
    bound = bernoulli_lift_bound(BernoulliSpec(1 / 3, 1 / 3, 1 / 3), params)
    if not gb < 1:
        return UniquenessReport(False, gb, bound, {}, "not applicable: gamma*beta02_plus^2 >= 1")
    exps = {k: maxent_approximant(params, k).exponent_avg for k in ms}
    return UniquenessReport(True, gb, bound, exps)


def write_atoms_csv(measure: AtomicMeasure, fh) -> None:
    fh.write("word,fiber_point,weight,exponent\n")
    for c, x, w, e in zip(measure.codes, measure.fiber_points, measure.weights, measure.exponents):
        fh.write(f"{Word.from_code(int(c), measure.period)},{float(x)!r},{float(w)!r},{float(e)!r}\n")
