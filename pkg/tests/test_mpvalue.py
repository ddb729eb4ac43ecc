import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import random_strongly_connected, two_vertex_value

from taxman.core import game_from_edges
from taxman.errors import ContractError
from taxman.mpvalue import (
    BiasParams,
    DegenerateThreshold,
    bias,
    curve_csv,
    mp_value_taxman,
    solve_general_mp_thresholds,
    threshold_ratio_scc,
    value_curve,
)
from taxman.strategy import min_K


def test_bias_examples():
    assert bias(1, 0.3) == 0.5
    assert bias(0, 0.73) == 0.73
    assert bias(Fraction(1, 5), Fraction(3, 4)) == Fraction(2, 3)
    assert BiasParams.of(Fraction(1, 5), Fraction(3, 4)).bias == Fraction(2, 3)


@pytest.mark.parametrize("tau, r", [(-0.1, 0.5), (1.1, 0.5), (0.5, 0), (0.5, 1)])
def test_bias_domain(tau, r):
    with pytest.raises(ContractError):
        bias(tau, r)


unit = st.fractions(0, 1, max_denominator=60)
open_unit = st.fractions(Fraction(1, 100), Fraction(99, 100), max_denominator=100)


@settings(max_examples=200, deadline=None)
@given(tau=unit, r=open_unit, r2=open_unit)
def test_bias_properties(tau, r, r2):
    F = bias(tau, r)
    assert 0 < F < 1
    lo, hi = min(r, r2), max(r, r2)
    assert bias(tau, lo) <= bias(tau, hi)
    if r > Fraction(1, 2) and tau < 1:
        assert bias(tau + (1 - tau) / 2, r) <= F
    # K-bound identity
    assert r / (r + (1 - r) * min_K(tau, r)) == F


@pytest.mark.parametrize("tau", [0, 0.25, 0.5, 0.75, 1])
@pytest.mark.parametrize("r", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_two_vertex_values(two_vertex, tau, r):
    assert mp_value_taxman(two_vertex, tau, r) == pytest.approx(two_vertex_value(tau, r), abs=1e-9)


def test_richman_value_ignores_ratio(two_vertex):
    g = random_strongly_connected(random.Random(5), 5)
    vals = {round(mp_value_taxman(g, 1, r), 10) for r in (0.1, 0.4, 0.8)}
    assert len(vals) == 1


def test_weight_shift(two_vertex):
    g = random_strongly_connected(random.Random(6), 5)
    c = Fraction(7, 4)
    assert mp_value_taxman(g.shifted(c), 0.3, 0.6) == pytest.approx(mp_value_taxman(g, 0.3, 0.6) + 1.75)


def test_curve_endpoints_and_csv(two_vertex):
    rows = value_curve(two_vertex, 0.75, [0, Fraction(1, 2), 1])
    assert rows[0][1] == pytest.approx(mp_value_taxman(two_vertex, 0, 0.75))
    assert rows[-1][1] == pytest.approx(mp_value_taxman(two_vertex, 1, 0.75))
    text = curve_csv(rows)
    assert text.splitlines() == ["tau,value", "0,0.5", "0.5,0.166666666667", "1,0"]


def test_curve_contract(two_vertex):
    with pytest.raises(ContractError):
        value_curve(two_vertex, 0.5, [])
    with pytest.raises(ContractError):
        value_curve(two_vertex, 0.5, [1, 0])


@pytest.mark.parametrize("seed", range(5))
def test_curve_shapes(seed):
    g = random_strongly_connected(random.Random(50 + seed), 5)
    grid = [Fraction(k, 10) for k in range(11)]
    high = [v for _, v in value_curve(g, 0.75, grid)]
    assert all(a >= b - 1e-8 for a, b in zip(high, high[1:]))
    half = [v for _, v in value_curve(g, 0.5, grid)]
    assert max(half) - min(half) < 1e-8


@pytest.mark.parametrize("tau", [0, 0.25, 0.5, 0.75, 0.99])
def test_two_vertex_threshold(two_vertex, tau):
    assert threshold_ratio_scc(two_vertex, tau) == pytest.approx(0.5, abs=1e-9)


def test_sign_definite_games():
    pos = game_from_edges({"a": 1, "b": 2}, [("a", "b"), ("b", "a"), ("a", "a")])
    assert threshold_ratio_scc(pos, 0.5) == 0.0
    assert threshold_ratio_scc(pos.negated(), 0.5) == 1.0


def test_degenerate_richman(two_vertex):
    g = two_vertex.shifted(Fraction(1, 2))
    out = threshold_ratio_scc(g, 1)
    assert isinstance(out, DegenerateThreshold) and out.sign == 1
    assert threshold_ratio_scc(two_vertex, 1).sign == 0


@pytest.mark.parametrize("seed", range(6))
def test_threshold_is_a_root(seed):
    rng = random.Random(70 + seed)
    g = random_strongly_connected(rng, 5)
    tau = Fraction(rng.randint(0, 9), 10)
    r = threshold_ratio_scc(g, tau)
    if 0 < r < 1:
        # the value changes sign across the returned ratio
        assert mp_value_taxman(g, tau, max(r - 1e-6, 1e-9)) <= 1e-9
        assert mp_value_taxman(g, tau, min(r + 1e-6, 1 - 1e-9)) >= -1e-9


def test_general_strongly_connected_collapses(two_vertex):
    res = solve_general_mp_thresholds(two_vertex, 0.3)
    assert len(res.components) == 1
    assert res.th.th["A"] == res.th.th["B"] == pytest.approx(0.5)


def test_general_transient_between_extremes():
    g = game_from_edges({"u": 0, "p": 1, "n": -1}, [("u", "p"), ("u", "n"), ("p", "p"), ("n", "n")])
    res = solve_general_mp_thresholds(g, 0.4)
    ratios = {vs: r for vs, r in res.components}
    assert ratios == {("p",): 0.0, ("n",): 1.0}
    assert res.th.th["u"] == pytest.approx(0.5)


def test_general_forced_path_inherits_component_ratio(two_vertex):
    w = {"x": 5, "y": -2, "A": 1, "B": -1}
    edges = [("x", "y"), ("y", "A"), ("A", "A"), ("A", "B"), ("B", "A"), ("B", "B")]
    res = solve_general_mp_thresholds(game_from_edges(w, edges), 0.2)
    assert res.th.th["x"] == pytest.approx(0.5) and res.th.th["y"] == pytest.approx(0.5)


def test_general_richman_degenerate_flag(two_vertex):
    res = solve_general_mp_thresholds(two_vertex, 1)
    assert res.degenerate and res.th is None
    assert res.to_dict()["components"][0]["degenerate"] is True
