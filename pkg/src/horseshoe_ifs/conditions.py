"""Numerical checks of the standing hypotheses and a feasibility search.

Every clause is evaluated on a uniform grid of ``[0, 1]`` refined at the
points where extrema are known analytically (``0``, ``delta``, ``delta'``,
``1``). Grid extrema of ``f2'`` are padded by the largest jump between
neighbouring grid values, so each reported extremum errs on the safe side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.stats import qmc

from .fiber import SystemParams

__all__ = [
    "Clause",
    "ValidationReport",
    "DerivedConstants",
    "DegenerateInstanceError",
    "derive_constants",
    "validate",
    "search_feasible",
    "SEARCH_FIELDS",
    "DEFAULT_MARGIN",
]

DEFAULT_MARGIN = 1e-6
IDENTITY_TOL = 1e-9
SEARCH_FIELDS = ("beta0", "lambda0", "gamma", "beta2", "p2", "delta", "lambda2")


class DegenerateInstanceError(ValueError):
    """Raised when the window ``H`` carries no expansion (``beta_H <= 1``)."""


@dataclass(frozen=True)
class Clause:
    """One checked inequality.

    ``kind`` is ``"strict"`` for inequalities that must hold with
    ``slack > margin``, ``"order"`` for sign conditions on grid differences
    (monotonicity; passes iff ``slack > 0``) and ``"identity"`` for
    construction identities and non-strict bounds checked to a fixed
    tolerance (slack is then ``tol - |error|`` or ``value - bound + tol``).
    """

    group: str
    name: str
    slack: float
    passed: bool
    kind: str = "strict"


@dataclass
class ValidationReport:
    clauses: list[Clause] = field(default_factory=list)
    margin: float = DEFAULT_MARGIN
    constants: "DerivedConstants | None" = None

    @property
    def all_pass(self) -> bool:
        return bool(self.clauses) and all(c.passed for c in self.clauses)

    def group_passed(self, group: str) -> bool:
        return all(c.passed for c in self.clauses if c.group == group)

    def __getitem__(self, name: str) -> Clause:
        for c in self.clauses:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed(self) -> list[Clause]:
        return [c for c in self.clauses if not c.passed]

    def min_strict_slack(self) -> float:
        vals = [c.slack for c in self.clauses if c.kind == "strict"]
        return min(vals) if vals else math.inf

    def to_text(self) -> str:
        lines = [f"# margin={self.margin:g}", "group,clause,kind,status,slack"]
        for c in self.clauses:
            lines.append(f"{c.group},{c.name},{c.kind},{'PASS' if c.passed else 'FAIL'},{c.slack:.12g}")
        lines.append(f"# overall={'PASS' if self.all_pass else 'FAIL'}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class DerivedConstants:
    deltaPrime: float
    betaPrime: float
    betaH: float
    lambdaPrime: float
    L: int
    L_bound: float


def _grid(params: SystemParams, resolution: int) -> np.ndarray:
    d, dp = params.delta, 1.0 - params.delta / params.gamma
    extra = [p for p in (d, dp) if 0.0 < p < 1.0]
    return np.unique(np.concatenate([np.linspace(0.0, 1.0, resolution), extra]))


def _padded_extrema(fmap, xs):
    """Max and min of ``fmap'`` over a sorted sample, padded by the largest neighbour jump."""
    d = fmap._deriv(xs)
    pad = float(np.max(np.abs(np.diff(d)))) if d.size > 1 else 0.0
    return float(d.max()) + pad, float(d.min()) - pad


def _l_bound(params, beta_h, beta_p):
    return 4.0 * abs(math.log(params.lambda0)) * math.log(params.beta02_plus) / (math.log(beta_h) * math.log(beta_p))


def derive_constants(params: SystemParams, grid_resolution: int = 10**4) -> DerivedConstants:
    """Grid extrema entering the gap argument, and the integer ``L``.

    Raises
    ------
    DegenerateInstanceError
        If ``beta_H <= 1`` or ``beta' <= 1`` (the logarithms in ``L`` break down).
    """
    if grid_resolution < 1000:
        raise ValueError("grid_resolution must be at least 1000")
    f0, f2 = params.f0, params.f2
    d = params.delta
    dp = 1.0 - d / params.gamma
    # f0' is decreasing: its extrema on intervals sit at the endpoints
    f0_at_d = float(f0._deriv(np.float64(d)))
    outside = np.linspace(min(d, 1.0), 1.0, grid_resolution)
    inside = np.linspace(0.0, min(d, 1.0), max(grid_resolution // 10, 100))
    f2_out_max, _ = _padded_extrema(f2, outside)
    _, f2_in_min = _padded_extrema(f2, inside)
    beta_p = max(f0_at_d, f2_out_max)
    beta_h = min(f0_at_d, f2_in_min)
    lam_p = float(f0._deriv(np.float64(min(max(dp, 0.0), 1.0))))
    if beta_h <= 1.0 or beta_p <= 1.0:
        raise DegenerateInstanceError(f"no expansion near 0: beta_H={beta_h:.6g}, beta'={beta_p:.6g}")
    bound = _l_bound(params, beta_h, beta_p)
    L = max(1, math.floor(bound) + 1)
    return DerivedConstants(dp, beta_p, beta_h, lam_p, L, bound)


def _identity(group, name, err, tol=IDENTITY_TOL):
    err = abs(float(err))
    return Clause(group, name, tol - err, err <= tol, "identity")


def validate(params: SystemParams, grid_resolution: int = 10**4, margin: float = DEFAULT_MARGIN) -> ValidationReport:
    """Evaluate every clause and return the slacks; never raises on failure."""
    if grid_resolution < 1000:
        raise ValueError("grid_resolution must be at least 1000")
    rep = ValidationReport(margin=margin)
    add = rep.clauses.append

    def strict(group, name, slack):
        slack = float(slack)
        add(Clause(group, name, slack, bool(slack > margin)))

    def order(group, name, slack):
        slack = float(slack)
        add(Clause(group, name, slack, bool(slack > 0.0), "order"))

    def bound(group, name, gap):
        gap = float(gap)
        add(Clause(group, name, gap + IDENTITY_TOL, bool(gap >= -IDENTITY_TOL), "identity"))

    f0, f1, f2 = params.maps
    xs = _grid(params, grid_resolution)
    v0, d0 = f0._value_and_deriv(xs)
    v2, d2 = f2._value_and_deriv(xs)
    lam0, gam = params.lambda0, params.gamma

    # F0
    add(_identity("F0", "f0(0)=0", v0[0]))
    add(_identity("F0", "f0(1)=1", v0[-1] - 1.0))
    add(_identity("F0", "f0'(0)=beta0", d0[0] - params.beta0))
    add(_identity("F0", "f0'(1)=lambda0", d0[-1] - lam0))
    order("F0", "f0 increasing", np.min(np.diff(v0)))
    strict("F0", "beta0>1", params.beta0 - 1.0)
    strict("F0", "lambda0<1", 1.0 - lam0)
    bound("F0", "f0'>=lambda0", d0.min() - lam0)
    h0 = v0[1:-1] - xs[1:-1]
    order("F0", "no interior fixed point of f0", np.min(h0))

    # F1
    add(_identity("F1", "f1(1)=0", float(f1._value(np.float64(1.0)))))
    add(_identity("F1", "f1(p1)=p1", float(f1._value(np.float64(params.p1))) - params.p1))
    strict("F1", "gamma>=lambda0", gam - lam0)
    strict("F1", "gamma<1", 1.0 - gam)

    # F2
    add(_identity("F2", "f2(0)=0", v2[0]))
    add(_identity("F2", "f2(p2)=p2", float(f2._value(np.float64(params.p2))) - params.p2))
    add(_identity("F2", "f2'(0)=beta2", d2[0] - params.beta2))
    strict("F2", "beta2>1", params.beta2 - 1.0)
    order("F2", "f2 increasing", np.min(np.diff(v2)))
    strict("F2", "f2'(p2)<1", 1.0 - float(f2._deriv(np.float64(params.p2))))
    strict("F2", "f2(1)<1", 1.0 - v2[-1])
    below = (xs > 0) & (xs < params.p2)
    above = xs > params.p2
    h2 = v2 - xs
    order("F2", "f2(x)>x on (0,p2)", np.min(h2[below]) if below.any() else math.inf)
    order("F2", "f2(x)<x on (p2,1]", -np.max(h2[above]) if above.any() else math.inf)
    # keeps inf of central exponents at log(lambda0)
    bound("F2", "f2'>=lambda0", d2.min() - lam0)

    # F01
    order("F01", "f0' decreasing", -np.max(np.diff(d0)))
    f01 = gam * lam0**3 * (1.0 - lam0) / (1.0 - 1.0 / params.beta0)
    strict("F01", "gamma*lambda0^3*(1-lambda0)/(1-1/beta0)>1", f01 - 1.0)

    # F012
    bp = params.beta02_plus
    bound("F012", "f0'<=beta02+", bp - d0.max())
    bound("F012", "f2'<=beta02+", bp - d2.max())
    d = params.delta
    dp = 1.0 - d / gam
    strict("F012", "f1(H)^H empty", gam * (1.0 - d) - d)
    strict("F012", "f1(H')^H' empty", dp - gam * (1.0 - dp))
    strict("F012", "f1([0,1])^H' empty", dp - gam)
    strict("F012", "f2([0,1])^H' empty", dp - v2.max())
    try:
        dc = derive_constants(params, grid_resolution)
    except DegenerateInstanceError:
        add(Clause("F012", "beta_H>1", -1.0, False))
        return rep
    rep.constants = dc
    bm = params.beta02_minus
    strict("F012", "beta_H>1", dc.betaH - 1.0)
    strict("F012", "beta'<beta02-", bm - dc.betaPrime)
    strict("F012", "beta_H<beta02-", bm - dc.betaH)
    strict("F012", "lambda'<1", 1.0 - dc.lambdaPrime)
    lhs = abs(math.log(lam0)) * math.log(bp) / math.log(dc.betaH) - abs(math.log(dc.lambdaPrime)) + (2.0 / 3.0) * math.log(bp)
    rhs = 0.75 * math.log(dc.betaPrime)
    strict("F012", "block exponent budget", rhs - lhs)
    strict("F012", "L bound", dc.L - dc.L_bound)
    strict("F012", "long return exponent budget", math.log(dc.betaPrime) - math.log(bp**dc.L * gam) / (dc.L + 1))
    return rep


def _score(values, base, resolution, margin, constraints):
    try:
        p = base.replace(**values)
        rep = validate(p, resolution, margin)
    except (ValueError, ArithmeticError):
        return -math.inf, None, None
    if not all(c.passed for c in rep.clauses if c.kind != "strict"):
        return -math.inf, p, rep
    extra = [float(fn(p)) for fn in constraints.values()]
    return min([rep.min_strict_slack(), *extra]), p, rep


def search_feasible(
    ranges: Mapping[str, tuple[float, float]],
    budget: int = 1,
    *,
    base: SystemParams | None = None,
    n_samples: int = 256,
    seed: int = 0,
    lattice: float = 1e-4,
    grid_resolution: int = 10**4,
    margin: float = DEFAULT_MARGIN,
    polish: int = 3,
    constraints: Mapping[str, Callable[[SystemParams], float]] | None = None,
) -> list[SystemParams]:
    """Find up to ``budget`` all-pass instances inside a box.

    Latin-hypercube samples are snapped to a lattice of spacing ``lattice``
    and scored by their smallest strict slack. The best ``polish`` samples are
    improved by coordinate ascent on that score (steps of 100, 10 and 1
    lattice units, staying in the box). Results are ordered by score and
    deduplicated; the procedure is deterministic for a fixed ``seed``.

    Fields absent from ``ranges`` are taken from ``base``. ``constraints``
    maps names to extra slack functions of the instance; they must exceed
    ``margin`` as well and enter the score like the clauses do.
    """
    constraints = dict(constraints or {})
    if budget < 1:
        raise ValueError("budget must be >= 1")
    unknown = set(ranges) - set(SEARCH_FIELDS)
    if unknown:
        raise KeyError(f"cannot search over {sorted(unknown)}")
    names = [f for f in SEARCH_FIELDS if f in ranges]
    lo = np.array([float(ranges[f][0]) for f in names])
    hi = np.array([float(ranges[f][1]) for f in names])
    if np.any(lo > hi):
        return []
    if base is None:
        base = SystemParams(beta0=1.05, lambda0=0.9, gamma=0.9, beta2=1.05, p2=0.5, delta=0.03)
    gam_hi = ranges.get("gamma", (base.gamma, base.gamma))[1]
    lam_lo = ranges.get("lambda0", (base.lambda0, base.lambda0))[0]
    if gam_hi < lam_lo:
        return []

    def snap(x):
        x = np.clip(np.round(x / lattice) * lattice, lo, hi)
        return np.round(x, 12)

    def as_values(x):
        return {f: float(v) for f, v in zip(names, x)}

    if names:
        sampler = qmc.LatinHypercube(d=len(names), seed=seed)
        pts = [snap(lo + (hi - lo) * u) for u in sampler.random(n_samples)]
    else:
        pts = [np.zeros(0)]
    scored = []
    for x in pts:
        s, _, _ = _score(as_values(x), base, grid_resolution, margin, constraints)
        scored.append((s, tuple(x)))
    scored.sort(key=lambda item: (-item[0], item[1]))

    polished = []
    for s, x in scored[: max(polish, 0)]:
        x = np.array(x)
        if not np.isfinite(s):
            polished.append((s, tuple(x)))
            continue
        for step in (100 * lattice, 10 * lattice, lattice):
            improved = True
            while improved:
                improved = False
                for j in range(len(names)):
                    for sgn in (1.0, -1.0):
                        cand = x.copy()
                        cand[j] += sgn * step
                        cand = snap(cand)
                        if np.array_equal(cand, x):
                            continue
                        sc, _, _ = _score(as_values(cand), base, grid_resolution, margin, constraints)
                        if sc > s:
                            s, x, improved = sc, cand, True
        polished.append((s, tuple(x)))
    pool = polished + scored[max(polish, 0):]
    pool.sort(key=lambda item: (-item[0], item[1]))

    out, seen = [], set()
    for s, x in pool:
        if x in seen or not s > margin:
            continue
        seen.add(x)
        sc, p, rep = _score(as_values(np.array(x)), base, grid_resolution, margin, constraints)
        if p is not None and rep is not None and rep.all_pass:
            out.append(p)
        if len(out) >= budget:
            break
    return out
