"""Vectorised kernels shared by the exhaustive scans.

Everything here works on packed word codes (see :mod:`.symbolic`) and on
NumPy arrays of fiber points. No domain checks: callers validate inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .symbolic import codes_to_symbols, enumerate_codes

# Clamp band for round-off drift out of [0, 1].
_CLIP_LO, _CLIP_HI = 0.0, 1.0


def _log_abs_deriv(fmap, x):
    if fmap.gamma is not None:
        return np.full_like(x, np.log(fmap.gamma))
    return np.log(np.abs(fmap._deriv(x)))


def _accumulator(maps, potential):
    if potential is None:
        return lambda s, x: _log_abs_deriv(maps[s], x)
    return potential


def tree_orbits(maps, n, starts, alphabet=(0, 1, 2), prefix=(), potential=None):
    """Orbits of ``starts`` under every word of length ``n`` with a given prefix.

    Returns ``(codes, values, sums)`` where ``values[w, j]`` is
    ``f_[word_w](starts[j])`` and ``sums`` the Birkhoff sum of ``potential``
    along that orbit (log|derivative| when ``potential`` is None). A potential
    is called as ``potential(symbol, x)`` on the point *before* the symbol's
    map acts. Rows follow lexicographic order of the words. Prefixes are
    shared, so the cost is about 1.5 * 3**n * len(starts) map evaluations.
    """
    acc = _accumulator(maps, potential)
    starts = np.asarray(starts, dtype=float)
    vals = starts[None, :].copy()
    logd = np.zeros_like(vals)
    codes = np.zeros(1, dtype=np.int64)
    for s in prefix:
        logd = logd + acc(s, vals)
        vals = np.clip(maps[s]._value(vals), _CLIP_LO, _CLIP_HI)
        codes = (codes << 2) | int(s)
    alphabet = tuple(alphabet)
    for _ in range(n - len(prefix)):
        w, g = vals.shape
        new_vals = np.empty((w, len(alphabet), g))
        new_logd = np.empty_like(new_vals)
        for j, s in enumerate(alphabet):
            new_logd[:, j, :] = logd + acc(s, vals)
            new_vals[:, j, :] = maps[s]._value(vals)
        vals = np.clip(new_vals.reshape(w * len(alphabet), g), _CLIP_LO, _CLIP_HI)
        logd = new_logd.reshape(w * len(alphabet), g)
        codes = ((codes[:, None] << 2) | np.array(alphabet, dtype=np.int64)[None, :]).ravel()
    return codes, vals, logd


def compose(maps, symbols, x, potential=None):
    """Apply per-row words to per-row points.

    ``symbols`` has shape ``(W, n)``; ``x`` has shape ``(W,)`` or ``(W, K)``.
    Returns values and Birkhoff sums (log|derivative| of the composed maps
    when ``potential`` is None).
    """
    acc = _accumulator(maps, potential)
    val = np.array(x, dtype=float, copy=True)
    logd = np.zeros_like(val)
    symbols = np.asarray(symbols)
    for j in range(symbols.shape[1]):
        col = symbols[:, j]
        for s in (0, 1, 2):
            idx = col == s
            if not idx.any():
                continue
            v = val[idx]
            logd[idx] += acc(s, v)
            val[idx] = maps[s]._value(v)
        np.clip(val, _CLIP_LO, _CLIP_HI, out=val)
    return val, logd


@dataclass
class FixedPointBatch:
    """Fixed points located for a batch of words (one row per fixed point)."""

    word_index: np.ndarray
    x: np.ndarray
    log_deriv: np.ndarray
    bracket_lo: np.ndarray
    bracket_hi: np.ndarray
    converged: np.ndarray


def locate_fixed_points(maps, symbols, grid, g_on_grid=None, tol=1e-12, max_iter=100, zero_tol=1e-14):
    """All fixed points of each row word found by grid bracketing + Newton.

    A sign change of ``g(x) - x`` between consecutive grid points gives a
    bracket; grid points where ``|g(x) - x| <= zero_tol`` are exact roots.
    Brackets are refined by Newton steps kept inside the bracket, with
    bisection as fallback, down to width ``tol``.
    """
    symbols = np.asarray(symbols)
    grid = np.asarray(grid, dtype=float)
    n_words = symbols.shape[0]
    if g_on_grid is None:
        g_on_grid, _ = compose(maps, symbols, np.broadcast_to(grid, (n_words, grid.size)))
    h = g_on_grid - grid[None, :]
    sgn = np.sign(h)
    sgn[np.abs(h) <= zero_tol] = 0.0

    zw, zi = np.nonzero(sgn == 0.0)
    bw, bi = np.nonzero(sgn[:, :-1] * sgn[:, 1:] < 0)

    lo = grid[bi].copy()
    hi = grid[bi + 1].copy()
    h_lo = h[bw, bi]
    sym_b = symbols[bw]
    x = 0.5 * (lo + hi)
    converged = np.zeros(bw.size, dtype=bool)
    sign_flip = (symbols[bw] == 1).sum(axis=1) % 2 == 1
    for _ in range(max_iter):
        active = ~converged
        if not active.any():
            break
        xa = x[active]
        gv, gl = compose(maps, sym_b[active], xa)
        resid = gv - xa
        gder = np.where(sign_flip[active], -1.0, 1.0) * np.exp(gl)
        same = np.sign(resid) == np.sign(h_lo[active])
        lo_a = np.where(same, xa, lo[active])
        hi_a = np.where(same, hi[active], xa)
        slope = gder - 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = xa - resid / slope
        ok = np.isfinite(newton) & (newton > lo_a) & (newton < hi_a)
        x_new = np.where(ok, newton, 0.5 * (lo_a + hi_a))
        done = (resid == 0.0) | (np.abs(x_new - xa) <= tol * 0.5) | (hi_a - lo_a <= tol)
        x_new = np.where(resid == 0.0, xa, x_new)
        lo[active], hi[active], x[active] = lo_a, hi_a, x_new
        converged[active] = done

    word_index = np.concatenate([zw, bw])
    xs = np.concatenate([grid[zi], x])
    order = np.lexsort((xs, word_index))
    word_index, xs = word_index[order], xs[order]
    _, log_deriv = compose(maps, symbols[word_index], xs)
    b_lo = np.concatenate([grid[zi], lo])[order]
    b_hi = np.concatenate([grid[zi], hi])[order]
    conv = np.concatenate([np.ones(zw.size, dtype=bool), converged])[order]
    return FixedPointBatch(word_index, xs, log_deriv, b_lo, b_hi, conv)


def iter_chunks(n, alphabet=(0, 1, 2), chunk_depth=9):
    """Prefixes splitting the length-``n`` words into chunks of ~3**chunk_depth."""
    plen = max(0, n - chunk_depth)
    if plen == 0:
        return [()]
    return [tuple(int(s) for s in p) for p in codes_to_symbols(enumerate_codes(plen, alphabet), plen)]


def trace(maps, symbols, x0):
    """Full orbits: ``orbit[:, j]`` is the point before symbol ``j`` acts.

    Returns ``(orbit, logs)`` with shapes ``(W, n + 1)`` and ``(W, n)``.
    """
    symbols = np.asarray(symbols)
    w, n = symbols.shape
    orbit = np.empty((w, n + 1))
    logs = np.empty((w, n))
    orbit[:, 0] = x0
    for j in range(n):
        cur = orbit[:, j]
        nxt = np.empty(w)
        col = symbols[:, j]
        for s in (0, 1, 2):
            idx = col == s
            if idx.any():
                v = cur[idx]
                logs[idx, j] = _log_abs_deriv(maps[s], v)
                nxt[idx] = maps[s]._value(v)
        orbit[:, j + 1] = np.clip(nxt, _CLIP_LO, _CLIP_HI)
    return orbit, logs


def outermost_fixed_points(maps, symbols, grid, g_on_grid=None, fine_size=4097):
    """Smallest and largest fixed point of each row's (increasing) composed map.

    Rows whose extreme roots come out repelling must hide further roots
    between grid nodes (``g(0) >= 0`` and ``g(1) <= 1`` force a topologically
    attracting outermost root); they are re-bracketed on a grid of
    ``fine_size`` points. Returns ``(lo, hi, logd_lo, logd_hi)``.
    """
    symbols = np.asarray(symbols)
    n_words = symbols.shape[0]
    fp = locate_fixed_points(maps, symbols, grid, g_on_grid=g_on_grid)
    lo, hi, ld_lo, ld_hi = _extremes(fp, n_words)
    # a repelling extreme root is only genuine at the boundary of [0, 1]
    bad = np.flatnonzero(((ld_lo > 1e-12) & (lo > 0.0)) | ((ld_hi > 1e-12) & (hi < 1.0)) | ~np.isfinite(lo))
    if bad.size:
        fine = np.linspace(0.0, 1.0, fine_size)
        fp2 = locate_fixed_points(maps, symbols[bad], fine)
        lo2, hi2, l2, h2 = _extremes(fp2, bad.size)
        lo[bad], hi[bad], ld_lo[bad], ld_hi[bad] = lo2, hi2, l2, h2
    return lo, hi, ld_lo, ld_hi


def _extremes(fp, n_words):
    lo = np.full(n_words, np.nan)
    hi = np.full(n_words, np.nan)
    ld_lo = np.full(n_words, np.nan)
    ld_hi = np.full(n_words, np.nan)
    if fp.word_index.size:
        # rows are sorted by (word, x): first and last of each run are the extremes
        first = np.r_[True, fp.word_index[1:] != fp.word_index[:-1]]
        last = np.r_[fp.word_index[1:] != fp.word_index[:-1], True]
        lo[fp.word_index[first]] = fp.x[first]
        ld_lo[fp.word_index[first]] = fp.log_deriv[first]
        hi[fp.word_index[last]] = fp.x[last]
        ld_hi[fp.word_index[last]] = fp.log_deriv[last]
    return lo, hi, ld_lo, ld_hi
