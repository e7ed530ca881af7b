import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import _oracle
from horseshoe_ifs import thermo
from horseshoe_ifs.config import PRESETS

P = PRESETS["default-validated"]
LOG3 = math.log(3.0)

# reference values from tests/_oracle.py (depth 4, 33-point grid plus fixed points)
FROZEN_DEPTH4 = {
    -3.0: (1.0484099916985814, 1.1170383169049867),
    -1.0: (1.058026294159668, 1.09211007413251),
    0.5: (1.1430224234052553, 1.1614708086458323),
    2.0: (1.2844104276049446, 1.3529021972830224),
}
# largest exponent over periods <= 6 of words containing a 1, same oracle
FROZEN_MAX_EXPONENT_M6 = 0.018887001137151967


@pytest.fixture(scope="module")
def stats8():
    return thermo.cylinder_stats(P, 8)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 7])
def test_zero_temperature_is_log3(n):
    lo, up = thermo.pressure_bracket(P, 0.0, n)
    assert abs(lo - LOG3) <= 1e-12 and abs(up - LOG3) <= 1e-12


def test_lateral_anchors(equal_params):
    assert abs(thermo.lateral_pressure(P, 0.0) - math.log(2)) <= 1e-12
    t = np.linspace(-20, 20, 1000)
    b = equal_params.beta0
    assert np.max(np.abs(thermo.lateral_pressure(equal_params, t) - (math.log(2) - t * math.log(b)))) <= 1e-12


def test_lateral_slopes_far_out():
    # well separated lateral rates, so that t = +-100 is already asymptotic
    q = P.replace(beta2=1.3)
    s_plus = thermo.lateral_pressure(q, 100.0) - thermo.lateral_pressure(q, 99.0)
    s_minus = thermo.lateral_pressure(q, -99.0) - thermo.lateral_pressure(q, -100.0)
    assert s_plus == pytest.approx(-math.log(q.beta02_minus), abs=1e-6)
    assert s_minus == pytest.approx(-math.log(q.beta02_plus), abs=1e-6)
    for t in (-5.0, 0.0, 3.0):
        h = 1e-6
        fd = (thermo.lateral_pressure(P, t + h) - thermo.lateral_pressure(P, t - h)) / (2 * h)
        assert thermo.lateral_derivative(P, t) == pytest.approx(fd, abs=1e-8)


@pytest.mark.parametrize("n", [1, 2, 4])
@pytest.mark.parametrize("t", [-7.0, -1.5, 0.3, 4.0])
def test_pinned_lateral_bracket_collapses(n, t):
    lo, up = thermo.pressure_bracket(P, t, n, alphabet=(0, 2), fiber_points=[0.0])
    assert lo == pytest.approx(thermo.lateral_pressure(P, t), abs=1e-12)
    assert up == pytest.approx(thermo.lateral_pressure(P, t), abs=1e-12)


def test_pinned_lateral_by_hand_n2():
    t = -2.5
    b0, b2 = P.beta0, P.beta2
    z = sum((x * y) ** (-t) for x in (b0, b2) for y in (b0, b2))
    lo, up = thermo.pressure_bracket(P, t, 2, alphabet=(0, 2), fiber_points=[0.0])
    assert up == pytest.approx(0.5 * math.log(z), abs=1e-13)


def test_frozen_oracle_values_depth4():
    stats = thermo.cylinder_stats(P, 4)
    for t, (lo, up) in FROZEN_DEPTH4.items():
        assert stats.log_partition(t, "periodic") == pytest.approx(lo, abs=1e-12)
        assert stats.log_partition(t, "upper") == pytest.approx(up, abs=1e-12)


def test_live_oracle_depth3():
    sums = _oracle.cylinder_sums(P, 3)
    stats = thermo.cylinder_stats(P, 3)
    for t in (-4.0, -0.5, 0.0, 1.0, 6.0):
        lo, up = _oracle.bracket_from_sums(sums, t, 3)
        assert stats.log_partition(t, "periodic") == pytest.approx(lo, abs=1e-12)
        assert stats.log_partition(t, "upper") == pytest.approx(up, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(-25, 25), st.floats(0.01, 10), st.floats(0.01, 10))
def test_envelopes_convex_and_dominate_lateral(t0, a, b):
    stats = _stats6()
    t1, t2 = t0 + a, t0 + a + b
    for env in ("upper", "periodic"):
        f0, f1, f2 = (stats.log_partition(t, env) for t in (t0, t1, t2))
        # f1 below the chord through f0 and f2
        assert f1 <= (b * f0 + a * f2) / (a + b) + 1e-12
    for t in (t0, t1, t2):
        lat = thermo.lateral_pressure(P, t)
        assert lat <= stats.log_partition(t, "periodic") + 1e-12
        assert stats.log_partition(t, "infimum") <= stats.log_partition(t, "upper") + 1e-15


_CACHE = {}


def _stats6():
    if "s6" not in _CACHE:
        _CACHE["s6"] = thermo.cylinder_stats(P, 6)
    return _CACHE["s6"]


def test_infimum_envelope_has_concave_kink_at_zero():
    s = _stats6()
    h = 0.05
    f = [s.log_partition(t, "infimum") for t in (-h, 0.0, h)]
    assert f[1] > 0.5 * (f[0] + f[2])


def test_upper_nearly_monotone_in_depth():
    for t in (-3.0, 2.0):
        ups = {n: thermo.pressure_bracket(P, t, n)[1] for n in range(3, 9)}
        for n in range(3, 8):
            assert ups[n + 1] <= ups[n] + 1.0 / n


def test_slope_is_derivative_of_log_partition(stats8):
    for env, t in (("periodic", -2.0), ("upper", 1.5), ("periodic", 0.7)):
        h = 1e-6
        fd = (stats8.log_partition(t + h, env) - stats8.log_partition(t - h, env)) / (2 * h)
        assert stats8.slope(t, env) == pytest.approx(fd, abs=1e-6)
    right = stats8.slope(0.0, "periodic", side="right")
    left = stats8.slope(0.0, "periodic", side="left")
    assert left <= right


def test_general_potential_constant_and_locally_constant():
    c = -0.37
    for n in (1, 3, 5):
        for t in (-2.0, 0.5):
            lo, up = thermo.general_potential_pressure(P, thermo.locally_constant([c, c, c]), t, n)
            assert lo == pytest.approx(LOG3 + t * c, abs=1e-12) and up == pytest.approx(LOG3 + t * c, abs=1e-12)
    a = (0.3, -1.1, 0.8)
    for n in range(1, 7):
        for t in (-1.7, 2.2):
            ref = math.log(sum(math.exp(t * ai) for ai in a))
            lo, up = thermo.general_potential_pressure(P, thermo.locally_constant(a), t, n)
            assert abs(lo - ref) <= 1e-10 and abs(up - ref) <= 1e-10
    with pytest.raises(ValueError):
        thermo.locally_constant([1.0, 2.0])


def test_general_potential_reproduces_pressure_bracket_bitwise():
    for t in (-3.0, 0.0, 1.25):
        a = thermo.pressure_bracket(P, t, 5)
        b = thermo.general_potential_pressure(P, thermo.pressure_potential(P), t, 5)
        assert a == b


def test_worker_count_does_not_change_results():
    a = thermo.cylinder_stats(P, 10, workers=1)
    b = thermo.cylinder_stats(P, 10, workers=2)
    for name in ("codes", "sum_min", "sum_max", "per_min", "per_max", "nonexceptional"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_input_checks():
    with pytest.raises(ValueError):
        thermo.cylinder_stats(P, 0)
    with pytest.raises(ValueError):
        thermo.cylinder_stats(P, 3, fiber_points=[1.5])
    with pytest.raises(ValueError):
        thermo.cylinder_stats(P, 3, fiber_points=[0.0]).log_partition(1.0, "periodic")
    with pytest.raises(ValueError):
        thermo.pressure_curve(P, [0.0, 0.0], 3)


def test_spectrum_scan_small_periods():
    cert = thermo.spectrum_scan(P, 6, keep_records=True)
    assert cert.max_nonexceptional_exponent == pytest.approx(FROZEN_MAX_EXPONENT_M6, abs=1e-12)
    assert cert.periods[0].max_nonexceptional == pytest.approx(math.log(P.gamma), abs=1e-12)
    assert cert.valid and cert.gap_width > 0
    lb, ub = math.log(P.beta02_minus), math.log(P.beta02_plus)
    for p in cert.periods:
        assert lb - 1e-12 <= p.min_exceptional <= p.max_exceptional <= ub + 1e-12
    est = list(cert.estimates.values())
    assert all(x <= y for x, y in zip(est, est[1:]))
    assert len(cert.records) == sum(p.n_fixed_points for p in cert.periods)
    buf = io.StringIO()
    thermo.write_spectrum_csv(cert, buf)
    assert buf.getvalue().startswith("period,word,fixed_point,exponent,exceptional\n")


def test_spectrum_matches_live_oracle():
    cert = thermo.spectrum_scan(P, 3)
    assert cert.max_nonexceptional_exponent == pytest.approx(_oracle.max_nonexceptional_exponent(P, 3), abs=1e-12)


def test_transition_criterion_examples():
    assert thermo.transition_criterion(P, thermo.central_log_derivative(P), 6)
    assert not thermo.transition_criterion(P, thermo.locally_constant([0, 0, 0]), 4)
    res = thermo.transition_criterion(P, thermo.pressure_potential(P), 5)
    assert not res.holds
    r = thermo.transition_criterion(P, thermo.central_log_derivative(P), 5)
    assert r.inf_lateral == pytest.approx(math.log(P.beta02_minus), abs=1e-12)


def test_curve_and_transition_at_moderate_depth(stats8):
    t = np.round(np.arange(-8, 4.0001, 0.1), 10)
    curve = thermo.pressure_curve(P, t, stats=stats8)
    assert np.all(curve.width >= -1e-15)
    assert curve.convexity_defect("upper") <= 1e-12
    assert curve.convexity_defect("lower") <= 1e-12
    assert np.isnan(curve.secant_left[0]) and np.isnan(curve.secant_right[-1])
    i = curve.index_of(0.0)
    assert curve.lower[i] == pytest.approx(LOG3, abs=1e-12)
    with pytest.raises(KeyError):
        curve.index_of(0.05)
    rep = thermo.locate_transition(curve, P, reference_depths=[6, 7])
    assert rep.detected and rep.t_c_estimate < 0
    assert -math.log(P.beta02_plus) <= rep.D_minus <= -math.log(P.beta02_minus)
    assert rep.kink > 0
    assert 0 < rep.entropy_minus <= math.log(2) + 1e-12
    assert set(rep.by_depth) == {6, 7, 8}
    assert "t_c_estimate=" in rep.to_text()
    buf = io.StringIO()
    thermo.write_curve_csv(curve, buf)
    assert len(buf.getvalue().splitlines()) == t.size + 1


def test_transition_needs_periodic_stats():
    t = np.linspace(-1, 1, 5)
    curve = thermo.pressure_curve(P, t, 3)
    curve.stats = None
    with pytest.raises(ValueError):
        thermo.locate_transition(curve, P)


def test_no_crossing_reported_as_undetected(stats8):
    t = np.linspace(0.0, 2.0, 11)
    rep = thermo.locate_transition(thermo.pressure_curve(P, t, stats=stats8), P, reference_depths=[])
    assert not rep.detected and not rep.first_order


def test_asymptotic_slopes_shape(stats8):
    t = np.linspace(-20, 20, 81)
    s = thermo.asymptotic_slopes(thermo.pressure_curve(P, t, stats=stats8))
    assert s.t_minus == -20 and s.t_plus == 20
    assert s.slope_minus_inf < 0 < s.slope_plus_inf
