import random
from fractions import Fraction

import pytest
from cases import games_with_a_losing_start
from oracles import random_reachability_game

from taxman.errors import ContractError
from taxman.etr import (
    check_assignment,
    export_etr_constraints,
    find_bound_conflict,
    parse_smtlib,
    read_sexprs,
    selection_from_thresholds,
)
from taxman.thresholds import solve_reachability_thresholds


def _export(g, tau, v0):
    th = solve_reachability_thresholds(g, tau).th
    return export_etr_constraints(g, tau, v0, selection_from_thresholds(g, th)), th


def test_three_chain_substitution(chain3):
    doc, th = _export(chain3, Fraction(1, 3), "u")
    eq, ineq = check_assignment(doc, {v: Fraction(x) for v, x in th.items()})
    assert eq < 1e-9 and ineq <= 0
    assert find_bound_conflict(doc) is None


def test_target_query_is_contradictory(chain3):
    doc, _ = _export(chain3, Fraction(1, 2), "t")
    assert find_bound_conflict(doc) == "t"


def test_document_shape(chain3):
    doc, _ = _export(chain3, Fraction(1, 2), "u")
    logic, variables, asserts = parse_smtlib(doc)
    assert logic == "QF_NRA"
    assert variables == ["|x_d|", "|x_u|", "|x_t|"]
    assert doc.rstrip().endswith("(check-sat)")
    assert ["=", "|x_t|", "0"] in asserts and ["=", "|x_d|", "1"] in asserts
    # re-reading the emitted forms reproduces the same trees
    assert read_sexprs(doc) == read_sexprs("\n".join(line for line in doc.splitlines() if not line.startswith(";")))


@pytest.mark.parametrize("case", range(4))
@pytest.mark.parametrize("tau", [Fraction(0), Fraction(2, 5), Fraction(1)])
def test_random_games_substitution(case, tau):
    g, _ = games_with_a_losing_start(4)[case]
    th = solve_reachability_thresholds(g, tau).th
    v0 = max(g.vertices, key=lambda v: th[v])
    doc, th = _export(g, tau, v0)
    eq, ineq = check_assignment(doc, {v: Fraction(x) for v, x in th.items()})
    assert eq < 1e-9 and ineq <= 0


def test_query_below_half_violates_only_the_query():
    g = random_reachability_game(random.Random(0), 6)
    doc, th = _export(g, Fraction(1, 2), "v5")
    assert th["v5"] < 0.5
    eq, ineq = check_assignment(doc, {v: Fraction(x) for v, x in th.items()})
    assert eq < 1e-9 and ineq == pytest.approx(0.5 - th["v5"])


def test_missing_selection_is_rejected(chain3):
    with pytest.raises(ContractError):
        export_etr_constraints(chain3, 1, "u", {"plus": {}, "minus": {}})


def test_wrong_values_leave_residual(chain3):
    doc, th = _export(chain3, Fraction(1, 2), "u")
    eq, _ = check_assignment(doc, {"d": 1, "u": Fraction(1, 3), "t": 0})
    assert eq > 0.1
