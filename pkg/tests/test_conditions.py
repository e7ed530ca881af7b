import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from horseshoe_ifs.conditions import DegenerateInstanceError, derive_constants, search_feasible, validate
from horseshoe_ifs.config import PRESETS, SEARCH_BOX

F01 = "gamma*lambda0^3*(1-lambda0)/(1-1/beta0)>1"


def test_default_instance_passes_everything(default_params):
    rep = validate(default_params)
    assert rep.all_pass, [c.name for c in rep.failed()]
    assert rep.min_strict_slack() >= 1e-6
    for group in ("F0", "F1", "F2", "F01", "F012"):
        assert rep.group_passed(group)


def test_steep_beta0_flags_f01():
    rep = validate(PRESETS["steep-beta0"])
    assert not rep.all_pass
    assert not rep.group_passed("F01")
    assert not rep[F01].passed


@pytest.mark.parametrize("beta0, expected", [(1.05, 1.378), (2.0, 0.131)])
def test_f01_left_side(default_params, beta0, expected):
    p = default_params.replace(lambda0=0.9, gamma=0.9, beta0=beta0)
    lhs = 0.9 * 0.9**3 * 0.1 / (1 - 1 / beta0)
    assert lhs == pytest.approx(expected, abs=1e-3)
    assert validate(p)[F01].slack == pytest.approx(lhs - 1, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.001, 0.2), st.floats(0.86, 0.99))
def test_window_disjointness_clause(delta, gamma):
    from horseshoe_ifs.config import PRESETS

    p = PRESETS["default-validated"].replace(delta=delta, gamma=gamma)
    clause = validate(p)["f1(H)^H empty"]
    assert clause.slack == pytest.approx(gamma * (1 - delta) - delta, abs=1e-15)
    if delta < gamma / (1 + gamma) - 1e-6:
        assert clause.slack > 0


def test_slacks_reproduce_by_hand(default_params):
    p = default_params
    rep = validate(p)
    assert rep["gamma>=lambda0"].slack == pytest.approx(p.gamma - p.lambda0, abs=1e-15)
    dp = 1 - p.delta / p.gamma
    assert rep["f1(H')^H' empty"].slack == pytest.approx(dp - p.gamma * (1 - dp), abs=1e-15)
    assert validate(p).to_text() == rep.to_text()


def test_derived_constants(default_params):
    p = default_params.replace(delta=0.02, gamma=0.9)
    c = derive_constants(p)
    assert c.deltaPrime == pytest.approx(1 - 0.02 / 0.9, abs=1e-15)
    assert c.deltaPrime == pytest.approx(0.97777, abs=1e-5)
    # beta_H: f0' decreasing so its part is f0'(delta); f2' part by a fine scan
    xs = np.linspace(0, p.delta, 200001)
    ref = min(float(p.f0._deriv(np.float64(p.delta))), float(p.f2._deriv(xs).min()))
    assert c.betaH == pytest.approx(ref, abs=1e-6)
    # L is the least integer strictly above its bound
    L = next(k for k in range(1, 10**6) if k > c.L_bound)
    assert c.L == L


def test_degenerate_instance_detected(default_params):
    with pytest.raises(DegenerateInstanceError):
        derive_constants(default_params.replace(delta=0.9, gamma=0.95))


def test_report_text_has_one_row_per_clause(default_params):
    rep = validate(default_params)
    rows = [ln for ln in rep.to_text().splitlines() if not ln.startswith("#")]
    assert rows[0] == "group,clause,kind,status,slack"
    assert len(rows) - 1 == len(rep.clauses)


def test_search_edge_cases():
    assert search_feasible({"beta0": (1.2, 1.1)}) == []
    assert search_feasible({"gamma": (0.5, 0.6), "lambda0": (0.7, 0.8)}) == []
    with pytest.raises(KeyError):
        search_feasible({"bogus": (0, 1)})
    with pytest.raises(ValueError):
        search_feasible(SEARCH_BOX, budget=0)


def test_small_search_is_deterministic_and_valid():
    kw = dict(budget=2, n_samples=24, seed=5, polish=1)
    a = search_feasible(SEARCH_BOX, **kw)
    b = search_feasible(SEARCH_BOX, **kw)
    assert a == b and len(a) >= 1
    for p in a:
        assert validate(p).all_pass
        for name, (lo, hi) in SEARCH_BOX.items():
            assert lo <= getattr(p, name) <= hi
