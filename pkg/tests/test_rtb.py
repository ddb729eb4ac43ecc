import random
from fractions import Fraction

import numpy as np
import pytest
from oracles import brute_force_mp, brute_force_reach, random_reachability_game, random_strongly_connected

from taxman.core import game_from_edges
from taxman.errors import ContractError
from taxman.rtb import build_rtb, evaluate_policy, solve_mp, solve_reach_value


def test_build_rtb_counts(two_vertex):
    rg = build_rtb(two_vertex, Fraction(1, 3))
    assert len(rg.player1 + rg.player2 + rg.nature) == 6
    for v in two_vertex.vertices:
        out = {b: q for (a, b), q in rg.prob.items() if a == (v, "N")}
        assert len(out) == 2 and sum(out.values()) == 1
        assert out[(v, "1")] == Fraction(1, 3)
        assert all(rg.weights[(v, c)] == two_vertex.weights[v] for c in "12N")
    # two nature edges per vertex plus one edge per base edge from each player copy
    assert len(rg.edges) == 2 * len(two_vertex.vertices) + 2 * len(two_vertex.edges)


def test_build_rtb_half_bias_is_balanced(two_vertex):
    rg = build_rtb(two_vertex, Fraction(1, 2))
    assert set(rg.prob.values()) == {Fraction(1, 2)}


def test_build_rtb_extreme_bias(two_vertex):
    rg = build_rtb(two_vertex, 0)
    assert all(q == (1 if b[1] == "2" else 0) for (a, b), q in rg.prob.items())


def test_reach_line_exact(chain4):
    vals = solve_reach_value(chain4, Fraction(1, 2))
    # 3x3 absorption system of the symmetric walk d - u1 - u2 - t
    A = np.array([[1, -0.5], [-0.5, 1]])
    u1, u2 = np.linalg.solve(A, [0, 0.5])
    assert vals["u1"] == pytest.approx(u1, abs=1e-12) == pytest.approx(1 / 3)
    assert vals["u2"] == pytest.approx(u2, abs=1e-12)
    assert vals["t"] == 1 and vals["d"] == 0


@pytest.mark.parametrize("seed", range(12))
def test_reach_matches_policy_enumeration(seed):
    rng = random.Random(seed)
    g = random_reachability_game(rng, 5)
    p = rng.choice([0.2, 0.5, 0.7])
    got = solve_reach_value(g, p)
    want = brute_force_reach(g, p, g.targets)
    assert np.allclose([got[v] for v in g.vertices], want, atol=1e-8)


def test_singleton_mp():
    g = game_from_edges({"s": 5}, [("s", "s")])
    sol = solve_mp(g, 0.3)
    assert sol.mp_value == 5 and sol.pot == {"s": 0} and sol.strength == {"s": 0}


@pytest.mark.parametrize("p", [0.1, 0.25, 0.5, 0.8])
def test_two_vertex_closed_form(two_vertex, p):
    sol = solve_mp(two_vertex, p)
    assert sol.mp_value == pytest.approx(2 * p - 1, abs=1e-12)
    assert sol.pot["A"] == pytest.approx(2) and sol.pot["B"] == pytest.approx(0, abs=1e-12)
    assert sol.strength["A"] == pytest.approx(2 * p * (1 - p))
    assert sol.strength["B"] == pytest.approx(2 * p * (1 - p))
    assert sol.move_max == {"A": "A", "B": "A"} and sol.move_min == {"A": "B", "B": "B"}


def test_exact_evaluation_path(two_vertex):
    sol = solve_mp(two_vertex, Fraction(1, 3), exact=True)
    assert sol.mp_value == Fraction(-1, 3)
    assert sol.strength["A"] == Fraction(4, 9)


def test_not_strongly_connected_rejected(chain3):
    with pytest.raises(ContractError):
        solve_mp(chain3, 0.5)


@pytest.mark.parametrize("seed", range(30))
def test_mp_matches_policy_enumeration(seed):
    rng = random.Random(1000 + seed)
    g = random_strongly_connected(rng, rng.randint(2, 4), extra=rng.randint(0, 4))
    p = rng.choice([0.15, 0.5, 0.6, 0.9])
    sol = solve_mp(g, p)
    assert np.allclose(brute_force_mp(g, p), sol.mp_value, atol=1e-6)


@pytest.mark.parametrize("seed", range(30))
def test_solution_invariants(seed):
    rng = random.Random(2000 + seed)
    g = random_strongly_connected(rng, rng.randint(2, 8))
    p = rng.random()
    sol = solve_mp(g, p)
    for v in g.vertices:
        hi, lo = sol.move_max[v], sol.move_min[v]
        lhs = p * sol.pot[hi] + (1 - p) * sol.pot[lo] + float(g.weights[v]) - sol.mp_value
        assert sol.pot[v] == pytest.approx(lhs, abs=1e-9)
        assert sol.strength[v] >= 0
        assert sol.strength[v] == pytest.approx(p * (1 - p) * (sol.pot[hi] - sol.pot[lo]))
        for u in g.succ(v):
            assert sol.pot[lo] - 1e-9 <= sol.pot[u] <= sol.pot[hi] + 1e-9
    assert min(sol.pot.values()) == 0
    assert sol.pot_span <= 0
    assert sol.residual < 1e-9


@pytest.mark.parametrize("seed", range(10))
def test_negation_antisymmetry(seed):
    rng = random.Random(3000 + seed)
    g = random_strongly_connected(rng, 5)
    p = rng.random()
    assert solve_mp(g.negated(), 1 - p).mp_value == pytest.approx(-solve_mp(g, p).mp_value, abs=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_bias_monotonicity_and_continuity(seed):
    rng = random.Random(4000 + seed)
    g = random_strongly_connected(rng, 6)
    grid = np.linspace(0.01, 0.99, 15)
    vals = [solve_mp(g, p).mp_value for p in grid]
    assert all(a <= b + 1e-9 for a, b in zip(vals, vals[1:]))
    p = 0.37
    diffs = [abs(solve_mp(g, p).mp_value - solve_mp(g, p + d).mp_value) for d in (1e-2, 1e-4, 1e-6)]
    assert diffs[-1] < 1e-4 and diffs[-1] <= diffs[0] + 1e-12


@pytest.mark.parametrize("seed", range(8))
def test_reach_monotone_in_bias(seed):
    g = random_reachability_game(random.Random(5000 + seed), 8)
    lo, hi = solve_reach_value(g, 0.3), solve_reach_value(g, 0.6)
    assert all(lo[v] <= hi[v] + 1e-9 for v in g.vertices)


def test_strength_ignores_potential_offset(two_vertex):
    sol = solve_mp(two_vertex, 0.4)
    shifted = {v: x + 17.0 for v, x in sol.pot.items()}
    for v in two_vertex.vertices:
        st = 0.4 * 0.6 * (shifted[sol.move_max[v]] - shifted[sol.move_min[v]])
        assert st == pytest.approx(sol.strength[v])


def test_evaluate_policy_multichain():
    # two absorbing states with different rewards: gains differ per state
    gain, bias = evaluate_policy([0, 1], [0, 1], [1.0, -1.0], 0.5)
    assert list(gain) == pytest.approx([1.0, -1.0])


def test_serialized_field_names(two_vertex):
    doc = solve_mp(two_vertex, 0.5).to_dict()
    assert {"mp_value", "pot", "strength", "move_max", "move_min"} <= set(doc)
