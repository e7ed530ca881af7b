"""Fiber maps of the skew product and the parameter bundle of one instance.

The three maps act on the unit interval:

* ``f0`` is increasing, fixes 0 (repelling, slope ``beta0``) and 1 (attracting,
  slope ``lambda0``) and has a strictly decreasing derivative;
* ``f1(x) = gamma * (1 - x)`` is an orientation-reversing affine contraction;
* ``f2`` is increasing, fixes 0 (repelling, slope ``beta2``) and an interior
  attracting point ``p2``.

``f0`` and ``f2`` come from one family of *profile maps*: the derivative is

    f'(x) = lo + (hi - lo) * s(x),
    s(x) = (1 - w) * (1 - I_{min(x/v, 1)}(a, b)) + w * (1 - x)**k,

with ``I`` the regularized incomplete beta function (a polynomial for integer
``a, b``). ``s`` decreases from 1 to 0, so ``f'`` decreases from ``hi`` to
``lo``. The scale ``v`` is solved so that ``f(1) = 1`` (for ``f0``) or
``f(p2) = p2`` (for ``f2``). Both maps are piecewise polynomial with one
breakpoint at ``v`` and are evaluated exactly, derivative included.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

__all__ = [
    "DomainError",
    "MapKind",
    "ProfileShape",
    "FiberMap",
    "SystemParams",
    "eval_map",
    "deriv",
    "invert",
]

# Points this far outside [0, 1] are clamped instead of rejected.
DOMAIN_SLACK = 1e-12


class DomainError(ValueError):
    """Raised when a fiber map is evaluated (or inverted) outside its domain."""


class MapKind(enum.Enum):
    F0 = "F0"
    F1 = "F1"
    F2 = "F2"


@dataclass(frozen=True)
class ProfileShape:
    """Shape parameters of a profile map.

    Parameters
    ----------
    a, b : int
        Beta-profile exponents. ``a`` controls how flat the derivative is near
        0, ``b`` how flat it is where it reaches its lower plateau.
    w : float
        Weight of the ``(1 - x)**k`` tilt, in ``[0, 1)``. It makes the
        derivative strictly decreasing everywhere and sets the initial drop
        ``f''(0) = -(hi - lo) * w * k``.
    k : int
        Exponent of the tilt term.
    """

    a: int = 6
    b: int = 2
    w: float = 0.05
    k: int = 2

    def __post_init__(self):
        if int(self.a) != self.a or int(self.b) != self.b or int(self.k) != self.k:
            raise ValueError("profile exponents a, b, k must be integers")
        if self.a < 1 or self.b < 1 or self.k < 1:
            raise ValueError("profile exponents a, b, k must be >= 1")
        if not 0.0 <= self.w < 1.0:
            raise ValueError("profile weight w must lie in [0, 1)")

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)


def _beta_cdf_poly(a: int, b: int) -> Polynomial:
    """Regularized incomplete beta ``I_y(a, b)`` as a polynomial in ``y``."""
    n = a + b - 1
    y = Polynomial([0.0, 1.0])
    one_minus = Polynomial([1.0, -1.0])
    out = Polynomial([0.0])
    for j in range(a, n + 1):
        out = out + math.comb(n, j) * y**j * one_minus ** (n - j)
    return out


@dataclass(frozen=True)
class _Piecewise:
    """Value and derivative polynomials on ``[0, v)`` and ``[v, 1]``."""

    v: float
    val_lo: np.ndarray
    der_lo: np.ndarray
    val_hi: np.ndarray
    der_hi: np.ndarray


def _profile_pieces(lo: float, hi: float, shape: ProfileShape, v: float) -> _Piecewise:
    x = Polynomial([0.0, 1.0])
    cdf = _beta_cdf_poly(shape.a, shape.b)
    cdf_next = _beta_cdf_poly(shape.a + 1, shape.b)
    # substitute y = x / v
    scale = Polynomial([0.0, 1.0 / v])
    cdf_x = cdf(scale)
    cdf_next_x = cdf_next(scale)
    tilt = Polynomial([1.0, -1.0]) ** shape.k
    tilt_int = (1.0 - Polynomial([1.0, -1.0]) ** (shape.k + 1)) / (shape.k + 1)
    amp = hi - lo
    w = shape.w
    # inner part: int_0^x (1 - I_{u/v}) du = x - x I_{x/v}(a,b) + v*mean*I_{x/v}(a+1,b)
    inner_int = x - x * cdf_x + v * shape.mean * cdf_next_x
    der_lo = lo + amp * ((1.0 - w) * (1.0 - cdf_x) + w * tilt)
    val_lo = lo * x + amp * ((1.0 - w) * inner_int + w * tilt_int)
    der_hi = lo + amp * w * tilt
    val_hi = lo * x + amp * ((1.0 - w) * v * shape.mean + w * tilt_int)
    return _Piecewise(
        v=v,
        val_lo=val_lo.coef,
        der_lo=der_lo.coef,
        val_hi=val_hi.coef,
        der_hi=der_hi.coef,
    )


def _horner(coef: np.ndarray, x):
    out = np.zeros_like(x) + coef[-1]
    for c in coef[-2::-1]:
        out = out * x + c
    return out


@dataclass(frozen=True, eq=False)
class FiberMap:
    """One fiber map, immutable and cheap to evaluate on arrays.

    Use the constructors :meth:`affine_flip` (``F1``) and :meth:`profile`
    (``F0``/``F2``) rather than calling the class directly.
    """

    kind: MapKind
    gamma: float | None = None
    lo: float | None = None
    hi: float | None = None
    shape: ProfileShape | None = None
    scale: float | None = None
    _pieces: _Piecewise | None = field(default=None, repr=False)

    @classmethod
    def affine_flip(cls, gamma: float) -> "FiberMap":
        if not 0.0 < gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        return cls(kind=MapKind.F1, gamma=float(gamma))

    @classmethod
    def profile(cls, kind: MapKind, lo: float, hi: float, shape: ProfileShape, scale: float):
        if kind is MapKind.F1:
            raise ValueError("F1 is affine; use FiberMap.affine_flip")
        if not 0.0 < lo < hi:
            raise ValueError("profile maps need 0 < lo < hi")
        if scale <= 0:
            raise ValueError("profile scale must be positive")
        pieces = _profile_pieces(lo, hi, shape, scale)
        return cls(kind=kind, lo=float(lo), hi=float(hi), shape=shape, scale=float(scale), _pieces=pieces)

    # vectorised kernels, no domain checks -------------------------------
    def _value(self, x):
        if self.kind is MapKind.F1:
            return self.gamma * (1.0 - x)
        p = self._pieces
        if p.v >= 1.0:
            return _horner(p.val_lo, x)
        return np.where(x < p.v, _horner(p.val_lo, x), _horner(p.val_hi, x))

    def _deriv(self, x):
        if self.kind is MapKind.F1:
            return np.full_like(np.asarray(x, dtype=float), -self.gamma)
        p = self._pieces
        if p.v >= 1.0:
            return _horner(p.der_lo, x)
        return np.where(x < p.v, _horner(p.der_lo, x), _horner(p.der_hi, x))

    def _value_and_deriv(self, x):
        return self._value(x), self._deriv(x)

    # image of [0, 1]
    @cached_property
    def image(self) -> tuple[float, float]:
        lo_end = float(self._value(np.float64(0.0)))
        hi_end = float(self._value(np.float64(1.0)))
        return (min(lo_end, hi_end), max(lo_end, hi_end))

    @property
    def increasing(self) -> bool:
        return self.kind is not MapKind.F1

    def __call__(self, x):
        return eval_map(self, x)


def _check_domain(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < -DOMAIN_SLACK) or np.any(arr > 1.0 + DOMAIN_SLACK):
        raise DomainError(f"{name} must lie in [0, 1]")
    return np.clip(arr, 0.0, 1.0)


def _unwrap(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def eval_map(fmap: FiberMap, x):
    """Evaluate ``fmap`` at ``x`` (scalar or array) in ``[0, 1]``."""
    xs = _check_domain(x)
    return _unwrap(fmap._value(xs), x)


def deriv(fmap: FiberMap, x):
    """First derivative of ``fmap`` at ``x`` in ``[0, 1]``."""
    xs = _check_domain(x)
    return _unwrap(fmap._deriv(xs), x)


def invert(fmap: FiberMap, y, tol: float = 1e-14, max_iter: int = 200):
    """Inverse of a fiber map by bracketed Newton with bisection fallback.

    Raises
    ------
    DomainError
        If ``y`` lies outside the image ``fmap([0, 1])``.
    """
    ys = np.asarray(y, dtype=float)
    lo_img, hi_img = fmap.image
    if np.any(ys < lo_img - DOMAIN_SLACK) or np.any(ys > hi_img + DOMAIN_SLACK):
        raise DomainError(f"y outside the image [{lo_img}, {hi_img}]")
    ys = np.clip(ys, lo_img, hi_img)
    if fmap.kind is MapKind.F1:
        return _unwrap(np.clip(1.0 - ys / fmap.gamma, 0.0, 1.0), y)
    left = np.zeros_like(ys)
    right = np.ones_like(ys)
    x = np.clip(ys / max(fmap.lo, 1e-300), 0.0, 1.0)
    for _ in range(max_iter):
        val, der = fmap._value_and_deriv(x)
        resid = val - ys
        # increasing map: resid > 0 means x is too large
        right = np.where(resid > 0, x, right)
        left = np.where(resid <= 0, x, left)
        newton = x - resid / der
        inside = (newton > left) & (newton < right)
        x_new = np.where(inside, newton, 0.5 * (left + right))
        done = np.abs(x_new - x) <= tol
        x = x_new
        if np.all(done) or np.all(right - left <= tol):
            break
    # the image endpoints have exact preimages
    x = np.where(ys <= lo_img, 0.0, np.where(ys >= hi_img, 1.0, x))
    return _unwrap(x, y)


def _solve_scale(kind, lo, hi, shape, target_x, target_y):
    """Find the profile scale ``v`` with ``f(target_x) = target_y``."""

    def resid(v):
        fm = FiberMap.profile(kind, lo, hi, shape, v)
        return float(fm._value(np.float64(target_x))) - target_y

    v_lo, v_hi = 1e-6, 1.0
    while resid(v_hi) < 0:
        v_hi *= 2.0
        if v_hi > 1e6:
            raise ValueError("no profile scale reaches the requested fixed point")
    if resid(v_lo) > 0:
        raise ValueError("profile derivative too large for the requested fixed point")
    v = brentq(resid, v_lo, v_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return FiberMap.profile(kind, lo, hi, shape, v)


@dataclass(frozen=True)
class SystemParams:
    """Full parameter bundle of one instance of the skew-product example.

    Parameters
    ----------
    beta0 : float
        ``f0'(0) > 1``.
    lambda0 : float
        ``f0'(1)`` in ``(0, 1)``.
    gamma : float
        Contraction rate of ``f1``; ``gamma >= lambda0``.
    beta2 : float
        ``f2'(0) > 1``.
    p2 : float
        Attracting fixed point of ``f2``.
    delta : float
        Right endpoint of the expanding window ``H = [0, delta]``.
    lambda2 : float
        ``f2'`` on its lower plateau (``f2'(p2)``); must be in ``(0, 1)``.
    shape0, shape2 : ProfileShape
        Profile shapes of ``f0`` and ``f2``.
    """

    beta0: float
    lambda0: float
    gamma: float
    beta2: float
    p2: float
    delta: float
    lambda2: float = 0.92
    shape0: ProfileShape = field(default_factory=ProfileShape)
    shape2: ProfileShape = field(default_factory=lambda: ProfileShape(a=2, b=1, w=0.0, k=1))

    def __post_init__(self):
        if not self.beta0 > 1.0:
            raise ValueError("beta0 must exceed 1")
        if not 0.0 < self.lambda0 < 1.0:
            raise ValueError("lambda0 must lie in (0, 1)")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if not self.beta2 > 1.0:
            raise ValueError("beta2 must exceed 1")
        if not 0.0 < self.p2 < 1.0:
            raise ValueError("p2 must lie in (0, 1)")
        if not self.delta > 0.0:
            raise ValueError("delta must be positive")
        if not 0.0 < self.lambda2 < 1.0:
            raise ValueError("lambda2 must lie in (0, 1)")

    @property
    def beta02_minus(self) -> float:
        return min(self.beta0, self.beta2)

    @property
    def beta02_plus(self) -> float:
        return max(self.beta0, self.beta2)

    @property
    def p1(self) -> float:
        return self.gamma / (1.0 + self.gamma)

    @cached_property
    def f0(self) -> FiberMap:
        return _solve_scale(MapKind.F0, self.lambda0, self.beta0, self.shape0, 1.0, 1.0)

    @cached_property
    def f1(self) -> FiberMap:
        return FiberMap.affine_flip(self.gamma)

    @cached_property
    def f2(self) -> FiberMap:
        return _solve_scale(MapKind.F2, self.lambda2, self.beta2, self.shape2, self.p2, self.p2)

    @property
    def maps(self) -> tuple[FiberMap, FiberMap, FiberMap]:
        return (self.f0, self.f1, self.f2)

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = {
            "beta0": self.beta0,
            "lambda0": self.lambda0,
            "gamma": self.gamma,
            "beta2": self.beta2,
            "p2": self.p2,
            "delta": self.delta,
            "lambda2": self.lambda2,
        }
        for tag, shape in (("shape0", self.shape0), ("shape2", self.shape2)):
            for name in ("a", "b", "w", "k"):
                out[f"{tag}_{name}"] = getattr(shape, name)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SystemParams":
        data = dict(data)
        shapes = {}
        for tag in ("shape0", "shape2"):
            keys = {n: data.pop(f"{tag}_{n}") for n in ("a", "b", "w", "k") if f"{tag}_{n}" in data}
            if keys:
                base = cls.__dataclass_fields__[tag].default_factory()
                shapes[tag] = dataclasses.replace(
                    base, **{n: (float(v) if n == "w" else int(float(v))) for n, v in keys.items()}
                )
        known = {"beta0", "lambda0", "gamma", "beta2", "p2", "delta", "lambda2"}
        unknown = set(data) - known
        if unknown:
            raise KeyError(f"unknown parameter keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()}, **shapes)
