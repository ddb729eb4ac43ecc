"""Solvers, strategy synthesis and simulation for taxman bidding games on graphs.

Convention used throughout: with taxman parameter ``tau`` the winner of a
bidding pays ``tau`` times the bid to the loser and the rest to the bank,
so ``tau = 1`` is Richman and ``tau = 0`` is poorman bidding.
"""

__version__ = "0.1.0"

from .core import (
    PLAYER1,
    PLAYER2,
    Budgets,
    GameGraph,
    Mechanism,
    SccDecomposition,
    apply_bidding_outcome,
    game_from_edges,
    parse_game,
    scc_decompose,
)
from .mpvalue import (
    DegenerateThreshold,
    MpThresholdResult,
    bias,
    mp_value_taxman,
    solve_general_mp_thresholds,
    threshold_ratio_scc,
    value_curve,
)
from .rtb import RtbGame, RtbSolution, build_rtb, solve_mp, solve_reach_value
from .thresholds import (
    ThresholdMap,
    local_taxman_update,
    solve_parity_thresholds,
    solve_reachability_thresholds,
)
from .strategy import (
    MaxMpStrategy,
    NormalizationScheme,
    QualReachStrategy,
    fit_beta_gamma,
    initial_position,
    min_K,
    synth_max_mp_strategy,
    synth_min_mp_strategy,
    synth_qual_reach_strategy,
)
from .etr import export_etr_constraints
from .sim import PlayTrace, SimReport, audit_lemma3, builtin_adversaries, estimate_payoff, run_play
