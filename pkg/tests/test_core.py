import random
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from oracles import closure_sccs, random_reachability_game, random_strongly_connected

from taxman.core import (
    PLAYER1,
    PLAYER2,
    Budgets,
    Mechanism,
    apply_bidding_outcome,
    game_from_edges,
    parse_game,
    scc_decompose,
)
from taxman.errors import GameFormatError, GameValidationError, IllegalBidError

TWO = """{
  "vertices": [{"id": "A", "weight": 1}, {"id": "B", "weight": -1}],
  "edges": [["A", "A"], ["A", "B"], ["B", "A"], ["B", "B"]]
}"""


def test_parse_two_vertex_game():
    g = parse_game(TWO)
    assert g.vertices == ("A", "B")
    assert len(g.edges) == 4
    assert g.weights == {"A": 1, "B": -1}


def test_weight_string_is_exact_rational():
    g = parse_game('{"vertices": [{"id": "a", "weight": "3/2"}], "edges": [["a", "a"]]}')
    assert g.weights["a"] == Fraction(3, 2)
    assert isinstance(g.weights["a"], Fraction)


def test_sink_vertex_is_rejected():
    with pytest.raises(GameValidationError, match="sink vertex") as err:
        parse_game('{"vertices": [{"id": "a", "weight": 0}, {"id": "b", "weight": 0}], "edges": [["a", "b"]]}')
    assert err.value.vertex == "b"


@pytest.mark.parametrize("doc, fragment", [
    ('{"vertices": [{"id": "a", "weight": 0}], "edges": [["a", "z"]]}', "unknown vertex"),
    ('{"vertices": [{"id": "a", "weight": 0}, {"id": "a", "weight": 1}], "edges": [["a", "a"]]}', "duplicate vertex"),
    ('{"vertices": [{"id": "a", "weight": 0, "parity": 0}], "edges": [["a", "a"]]}', "parity"),
])
def test_invariant_violations_are_named(doc, fragment):
    with pytest.raises(GameValidationError, match=fragment):
        parse_game(doc)


def test_malformed_weight_reports_position():
    text = '{\n  "vertices": [{"id": "a", "weight": "1.5"}],\n  "edges": [["a", "a"]]\n}'
    with pytest.raises(GameFormatError) as err:
        parse_game(text)
    assert (err.value.line, err.value.column) == (2, 38)


def test_syntax_error_reports_position():
    with pytest.raises(GameFormatError) as err:
        parse_game('{"vertices": [}')
    assert err.value.line == 1 and err.value.column is not None


def test_scc_of_complete_pair(two_vertex):
    dec = scc_decompose(two_vertex)
    assert dec.components == (frozenset({"A", "B"}),)
    assert dec.is_bottom == (True,)


def test_scc_chain(chain3):
    dec = scc_decompose(chain3)
    comps = dict(zip(dec.components, dec.is_bottom))
    assert comps == {frozenset({"d"}): True, frozenset({"t"}): True, frozenset({"u"}): False}


@pytest.mark.parametrize("seed", range(25))
def test_scc_matches_transitive_closure(seed):
    g = random_reachability_game(random.Random(seed), 8)
    dec = scc_decompose(g)
    comps, bottom = closure_sccs(g)
    assert set(dec.components) == comps
    assert set(dec.bottom_components) == bottom
    assert scc_decompose(g) == dec


@pytest.mark.parametrize("seed", range(10))
def test_condensation_is_acyclic_and_bottoms_have_no_exit(seed):
    g = random_reachability_game(random.Random(100 + seed), 8)
    dec = scc_decompose(g)
    for (a, b) in dec.condensation_edges:
        assert a != b
        assert not dec.is_bottom[a]
    # sinks first: every condensation edge points to an earlier component
    assert all(b < a for a, b in dec.condensation_edges)


def test_random_strongly_connected_generator_is_strongly_connected():
    for seed in range(10):
        assert random_strongly_connected(random.Random(seed), 6).is_strongly_connected()


@pytest.mark.parametrize("tau, expected", [
    (1, (Fraction(2, 5), Fraction(3, 5))),
    (0, (Fraction(2, 5), Fraction(2, 5))),
    (Fraction(1, 2), (Fraction(2, 5), Fraction(1, 2))),
])
def test_bidding_outcome_examples(tau, expected):
    out = apply_bidding_outcome(Budgets(Fraction(3, 5), Fraction(2, 5)), Mechanism(tau), PLAYER1, Fraction(1, 5))
    assert (out.b1, out.b2) == expected


def test_overbid_names_the_player():
    with pytest.raises(IllegalBidError) as err:
        apply_bidding_outcome(Budgets(1, 1), Mechanism(1), PLAYER2, Fraction(3, 2))
    assert err.value.player == PLAYER2


def test_mechanism_endpoints():
    assert Mechanism.richman().tau == 1 and Mechanism.poorman().tau == 0
    with pytest.raises(ValueError):
        Mechanism(Fraction(3, 2))


fractions = st.fractions(min_value=0, max_value=10, max_denominator=50)


@settings(max_examples=200, deadline=None)
@given(b1=fractions, b2=fractions, tau=st.fractions(0, 1, max_denominator=20),
       share=st.fractions(0, 1, max_denominator=20), winner=st.sampled_from([PLAYER1, PLAYER2]))
def test_bidding_accounting_properties(b1, b2, tau, share, winner):
    if b1 + b2 == 0:
        return
    bud = Budgets(b1, b2)
    bid = share * bud.of(winner)
    assume(bud.total - (1 - tau) * bid > 0)  # both budgets exhausted is not a valid state
    out = apply_bidding_outcome(bud, Mechanism(tau), winner, bid)
    assert bud.total - out.total == (1 - tau) * bid
    if tau == 1:
        assert out.total == bud.total
    if bid > 0 and out.total > 0:
        assert out.ratio(winner) <= bud.ratio(winner)
        assert out.ratio(3 - winner) >= bud.ratio(3 - winner)
        if tau < 1:
            assert out.total < bud.total


def test_game_round_trips_through_dict():
    import json

    g = game_from_edges({"x": Fraction(-1, 3), "y": 2}, [("x", "y"), ("y", "x")], targets={"y"})
    assert parse_game(json.dumps(g.to_dict())) == g
