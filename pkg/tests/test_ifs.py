import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import _oracle
from horseshoe_ifs.fiber import DomainError
from horseshoe_ifs.ifs import (
    ComposedMap,
    IterationCapError,
    analyze_returns,
    analyze_returns_batch,
    choose_ladder_b,
    compose_eval,
    expanding_itinerary,
    fiber_interval,
    fixed_points,
    ladder_window,
    sample_itineraries,
    sample_return_claims,
    single_return,
)
from horseshoe_ifs.symbolic import Word

words = st.lists(st.integers(0, 2), min_size=1, max_size=12).map(lambda s: Word(tuple(s)))


def test_compose_anchors(default_params):
    p = default_params
    assert compose_eval(p, "0", 0.0) == (0.0, pytest.approx(math.log(p.beta0), abs=1e-12), 1)
    v, ld, sg = compose_eval(p, "11", p.p1)
    assert v == pytest.approx(p.p1, abs=1e-15) and ld == pytest.approx(2 * math.log(p.gamma)) and sg == 1
    v, ld, _ = compose_eval(p, "0202", 0.0)
    assert v == 0.0
    assert ld == pytest.approx(2 * math.log(p.beta0) + 2 * math.log(p.beta2), abs=1e-12)
    assert compose_eval(p, "1", 0.3)[2] == -1
    with pytest.raises(DomainError):
        compose_eval(p, "0", 1.1)


def test_composed_map_matches_oracle(default_params):
    g = ComposedMap(Word.parse("0120"), default_params)
    for x in (0.0, 0.2, 0.77, 1.0):
        v, ld = _oracle.orbit_sum(default_params, (0, 1, 2, 0), x)
        assert g(x) == pytest.approx(v, abs=1e-15)
        assert g.log_abs_deriv(x) == pytest.approx(ld, abs=1e-13)
    assert g.sign == -1


@settings(max_examples=200, deadline=None)
@given(words, words, st.floats(0.0, 1.0))
def test_chain_rule_split(u, v, x):
    from horseshoe_ifs.config import PRESETS

    p = PRESETS["default-validated"]
    y, l1, s1 = compose_eval(p, u, x)
    z, l2, s2 = compose_eval(p, v, y)
    zz, l12, s12 = compose_eval(p, u + v, x)
    assert zz == z
    assert abs(l12 - (l1 + l2)) <= 1e-12 * (len(u) + len(v))
    assert s12 == s1 * s2


def test_fixed_points_of_single_symbols(default_params):
    p = default_params
    (r1,) = fixed_points(p, "1")
    assert r1.fixed_point == pytest.approx(p.p1, abs=1e-14)
    assert r1.exponent == pytest.approx(math.log(p.gamma)) and r1.attracting
    r0 = fixed_points(p, "0")
    assert [r.fixed_point for r in r0] == [0.0, pytest.approx(1.0, abs=1e-12)]
    assert r0[0].exponent == pytest.approx(math.log(p.beta0)) and not r0[0].attracting
    assert r0[1].exponent == pytest.approx(math.log(p.lambda0)) and r0[1].attracting
    r2 = fixed_points(p, "2")
    assert len(r2) == 2
    assert r2[0].exponent == pytest.approx(math.log(p.beta2))
    assert r2[1].fixed_point == pytest.approx(p.p2, abs=1e-12)
    assert r2[1].exponent == pytest.approx(math.log(p.lambda2), abs=1e-9) and r2[1].attracting


@pytest.mark.parametrize("word", ["01", "0012", "20110", "000001"])
def test_fixed_points_match_oracle(default_params, word):
    w = Word.parse(word)
    got = [r for r in fixed_points(default_params, w) if r.period_multiplier == 1]
    ref = _oracle.fixed_points(default_params, w.symbols)
    assert len(got) == len(ref)
    for r, x in zip(got, ref):
        assert r.fixed_point == pytest.approx(x, abs=1e-11)
        assert r.converged


def test_reversing_word_reports_period_two_points(default_params):
    recs = fixed_points(default_params, "0000001")
    assert any(r.period_multiplier == 2 for r in recs)
    for r in recs:
        G = Word.parse("0000001") * r.period_multiplier
        assert compose_eval(default_params, G, r.fixed_point)[0] == pytest.approx(r.fixed_point, abs=1e-10)


def test_fiber_intervals_of_single_symbols(default_params):
    p = default_params
    i0 = fiber_interval(p, "0")
    assert (i0.left, i0.right) == (0.0, pytest.approx(1.0, abs=1e-12))
    i1 = fiber_interval(p, "1")
    assert i1.is_trivial(1e-12) and i1.left == pytest.approx(p.p1, abs=1e-12)
    i2 = fiber_interval(p, "2")
    assert i2.left == 0.0 and i2.right == pytest.approx(p.p2, abs=1e-10)


def test_fiber_interval_endpoints_are_invariant(default_params):
    w = Word.parse("0000001")
    iv = fiber_interval(default_params, w)
    G = w * 2
    for x in (iv.left, iv.right):
        assert compose_eval(default_params, G, x)[0] == pytest.approx(x, abs=1e-10)
    with pytest.raises(ValueError):
        fiber_interval(default_params, w, tol=0.0)


def test_returns_without_entering_window(default_params):
    res = analyze_returns(default_params, "2222", 0.5, (0.0, default_params.delta), (0.96, 1.0))
    assert res.n_returns == 0 and not res.violations


def test_single_return_classified_by_direct_simulation(default_params):
    p = default_params
    d = p.delta
    dp = 1 - d / p.gamma
    # climb from 0.5 with zeros until f1 lands in H, then climb out again
    x, n = 0.5, 0
    while x <= 1 - 0.5 * d:
        x = float(p.f0._value(np.float64(x)))
        n += 1
    syms = [0] * n + [1] + [0] * 150
    res = analyze_returns(p, Word(tuple(syms)), 0.5, (0.0, d), (dp, 1.0))
    # oracle: classify the orbit by hand
    xs = [0.5]
    for s in syms:
        xs.append(float(p.maps[s]._value(np.float64(xs[-1]))))
    entries = [j for j in range(1, len(xs)) if xs[j] <= d and xs[j - 1] > d]
    assert res.entry_times == entries[: res.n_returns] and res.n_returns == 1
    r = res.entry_times[0]
    i = r - 1
    while xs[i - 1] >= dp:
        i -= 1
    assert res.approach_times == [i] and res.block_lengths == [r - i - 1]
    assert xs[r] >= p.lambda0 ** (r - i) * d
    assert not res.violations


def test_return_claims_on_random_orbits(default_params):
    s = sample_return_claims(default_params, n_orbits=500, seed=2)
    assert s.n_returns > 500 and s.holds
    assert s.min_depth_slack >= 0 and s.max_block_excess < 0


def test_batch_matches_single(default_params):
    rng = np.random.default_rng(0)
    syms = np.where(rng.random((5, 300)) < 0.9, 0, rng.integers(1, 3, (5, 300)))
    H, Hp = (0.0, default_params.delta), (1 - default_params.delta / default_params.gamma, 1.0)
    batch = analyze_returns_batch(default_params, syms, np.full(5, 0.3), H, Hp)
    for k in range(5):
        one = analyze_returns(default_params, Word(tuple(int(s) for s in syms[k])), 0.3, H, Hp)
        assert one.entry_times == batch[k].entry_times
        assert one.block_exponents == batch[k].block_exponents


def test_single_return_expands_and_lands_low(default_params):
    p = default_params
    b = choose_ladder_b(p)
    lo, _, hi = ladder_window(p, b)
    kappa = p.gamma * p.lambda0**3 * (1 - p.lambda0) / (1 - 1 / p.beta0)
    assert kappa > 1
    for J in [(lo, hi), (lo, lo + 1e-4), (hi - 1e-4, hi)]:
        r = single_return(p, J, b)
        assert r.min_abs_deriv >= kappa
        assert 0 < r.image[0] <= r.image[1] <= b


def test_expanding_itinerary_fixed_point(default_params):
    p = default_params
    b = choose_ladder_b(p)
    lo, _, hi = ladder_window(p, b)
    it = expanding_itinerary(p, (lo + 0.3 * (hi - lo), lo + 0.31 * (hi - lo)), b)
    v, ld, _ = compose_eval(p, it.word, it.fixed_point)
    assert abs(v - it.fixed_point) < 1e-10 and ld > 0 and it.kappa_est > 1
    assert str(it.word).endswith("0") or str(it.word).endswith("1")
    with pytest.raises(ValueError):
        expanding_itinerary(p, (hi, hi + 0.01), b)


def test_sample_itineraries_small(default_params):
    s = sample_itineraries(default_params, 5, seed=4)
    assert s.holds and len(s.itineraries) == 5 and s.max_residual < 1e-10


def test_iteration_cap_error_carries_state():
    err = IterationCapError("boom", last=(1, 2))
    assert err.last == (1, 2) and "boom" in str(err)
