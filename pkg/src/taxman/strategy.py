"""Bidding strategies: the eps-optimal mean-payoff strategy and the
any-positive-budget reachability strategy.

Play-time strategies implement a small protocol used by :mod:`taxman.sim`:

* ``start(state, player)`` once before the first round,
* ``bid(state)`` returning a fraction of the *current total* budget,
* ``move(state)`` returning a successor of ``state.vertex``,
* ``observe(state, vertex, won, own_bid, other_bid)`` after each round,
  with bids given as exact fractions of the pre-round total.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import PLAYER1, PLAYER2, GameGraph, to_fraction
from .errors import (
    ContractError,
    InsufficientBudgetError,
    NumericalError,
    StrategyError,
    UnsupportedParameterError,
)
from .mpvalue import bias
from .rtb import RtbSolution, solve_mp


class BiddingStrategy:
    name = "strategy"

    def start(self, state, player):
        self.player = player

    def bid(self, state):
        return 0

    def move(self, state):
        return state.game.succ(state.vertex)[0]

    def observe(self, state, vertex, won, own_bid, other_bid):
        pass


# -- normalization scheme -------------------------------------------------

def min_K(tau, ratio):
    """Smallest admissible walk stretch K for taxman parameter ``tau`` at ``ratio``."""
    if not 0 < ratio < 1:
        raise ContractError(f"ratio must lie in (0, 1), got {ratio}")
    r = ratio
    return (tau * r * r + r * (1 - r)) / (tau * (1 - r) ** 2 + r * (1 - r))


def _log_bounds(beta, s, tau, r, K):
    """Logs of the lower and upper bound on gamma imposed by strength ``s``."""
    lower = -math.log1p(beta * r * s * (tau + (1 - tau) * r)) / (r * s)
    inner = beta * r * s * (1 - (1 - tau) * r)
    if inner >= 1:
        return lower, -math.inf
    upper = math.log1p(-inner) / (K * (1 - r) * s)
    return lower, upper


def gamma_interval(beta, strengths, tau, ratio, K):
    """Feasible ``[lower, upper]`` for gamma at this beta (empty if lower > upper)."""
    nz = [s for s in strengths if s > 0]
    if not nz:
        return 0.0, 1.0
    tau, r = float(tau), float(ratio)
    pairs = [_log_bounds(beta, s, tau, r, K) for s in nz]
    return math.exp(max(lo for lo, _ in pairs)), math.exp(min(hi for _, hi in pairs))


def fit_beta_gamma(strengths, tau, ratio, K, max_halvings=1100):
    """Fit (beta, gamma) so both gamma bounds hold for every strength.

    beta starts at min(1/2, 1/(2 r s_n (1-(1-tau) r))) and is halved until
    the interval of admissible gammas is non-empty; gamma is its geometric
    midpoint.  With no positive strength every bid is zero and (1/2, 1/2)
    is returned.
    """
    if any(s < 0 for s in strengths):
        raise ContractError("strengths must be non-negative")
    if K <= min_K(float(tau), float(ratio)):
        raise ContractError(f"K = {K} does not exceed the minimal stretch {min_K(float(tau), float(ratio))}")
    nz = [float(s) for s in strengths if s > 0]
    if not nz:
        return 0.5, 0.5
    tau_f, r = float(tau), float(ratio)
    beta = min(0.5, 1.0 / (2 * r * max(nz) * (1 - (1 - tau_f) * r)))
    for _ in range(max_halvings):
        pairs = [_log_bounds(beta, s, tau_f, r, K) for s in nz]
        lo, hi = max(p[0] for p in pairs), min(p[1] for p in pairs)
        if lo < hi:
            return beta, math.exp((lo + hi) / 2)
        beta /= 2
        if beta == 0:
            break
    raise NumericalError("no feasible beta found before underflow")


@dataclass(frozen=True)
class NormalizationScheme:
    K: float
    beta: float
    gamma: float
    r: float
    tau: Fraction
    strengths: tuple

    def r_x(self, x):
        g = self.gamma ** (x - 1)
        return g + (1 - g) * self.r

    def beta_x(self, x):
        return self.beta * self.gamma ** (x - 1)

    def bid(self, x, s):
        """Bid as a fraction of the total budget at walk position ``x`` and strength ``s``."""
        return self.r * (1 - self.r) * self.beta_x(x) * s

    def initial_position(self, actual_ratio):
        return initial_position(self, actual_ratio)


def initial_position(scheme: NormalizationScheme, actual_ratio):
    """Walk position x0 with r_{x0} equal to ``actual_ratio``."""
    a, r = float(actual_ratio), scheme.r
    if not r < a <= 1:
        raise InsufficientBudgetError(
            f"initial ratio {a} must exceed the target ratio {r} for the guarantee to apply"
        )
    if a == 1:
        return 1.0
    return 1.0 + math.log((a - r) / (1 - r)) / math.log(scheme.gamma)


def certify_scheme(scheme: NormalizationScheme, xs=None):
    """Smallest slack of each proof obligation on a grid of positions.

    Keys: ``point1`` (bid below entitlement), ``point2`` (an overbid by Min
    near x = 1 is unaffordable), ``point3`` (r_x above r and decreasing),
    ``point4_win`` / ``point4_loss`` (ratio after the round keeps up with
    the walk), and ``chain`` (the intermediate gamma inequality behind
    point 2).  A non-negative value means the obligation holds.
    """
    r, K, tau = scheme.r, scheme.K, float(scheme.tau)
    S = [s for s in scheme.strengths if s > 0]
    if xs is None:
        # stop where gamma^(x-1) = 1e-14; beyond that r_x is r to double precision
        x_max = max(6.0, 1 + math.log(1e-14) / math.log(scheme.gamma))
        xs = np.concatenate([np.linspace(1, 5, 200, endpoint=False), np.geomspace(5, x_max, 300)])
    xs = np.asarray(xs, dtype=float)
    out = {"point1": math.inf, "point2": math.inf, "point3": math.inf,
           "point4_win": math.inf, "point4_loss": math.inf, "chain": math.inf}
    rx = scheme.r_x(xs)
    out["point3"] = float(np.min(rx - r))
    out["point3_monotone"] = float(np.min(rx[:-1] - rx[1:])) if len(xs) > 1 else math.inf
    for s in S:
        b = scheme.bid(xs, s)
        out["point1"] = min(out["point1"], float(np.min(rx - b)))
        win = (rx - b) / (1 - (1 - tau) * b) - scheme.r_x(xs + (1 - r) * K * s)
        out["point4_win"] = min(out["point4_win"], float(np.min(win)))
        lose = (rx + tau * b) / (1 - (1 - tau) * b) - scheme.r_x(xs - s * r)
        out["point4_loss"] = min(out["point4_loss"], float(np.min(lose)))
        near = np.linspace(1, 1 + r * s, 102)[:-1]
        out["point2"] = min(out["point2"], float(np.min(scheme.bid(near, s) - (1 - scheme.r_x(near)))))
        chain = scheme.gamma ** (near - 1) - 1 / (1 + s * r * scheme.beta)
        out["chain"] = min(out["chain"], float(np.min(chain)))
    return out


# -- mean-payoff strategy -------------------------------------------------

def _round12(x):
    return float(f"{x:.12g}")


class MaxMpStrategy(BiddingStrategy):
    """Walk-based bidding strategy securing (value - eps) for its owner.

    Built for Player 1 on ``game``; the Min variant runs the same object on
    the negated game and plays as Player 2.
    """

    name = "max-mp"

    def __init__(self, scheme, move_map, strength, p, rtb, value_shift, epsilon, ratio,
                 owner=PLAYER1, negated=False, x0=None):
        self.scheme = scheme
        self.move_map = dict(move_map)
        self.strength = dict(strength)
        self.p = p
        self.rtb = rtb
        self.value_shift = value_shift
        self.epsilon = epsilon
        self.ratio = ratio
        self.owner = owner
        self.negated = negated
        self.nu = scheme.r
        self.mu = scheme.K * (1 - scheme.r)
        self.x0 = x0
        self.x = x0
        self.player = owner
        self.walk_floor_ok = True

    @property
    def kind(self):
        return "min-mp" if self.negated else "max-mp"

    @property
    def guarantee(self):
        """Payoff bound promised in the original game (lower for Max, upper for Min)."""
        if self.negated:
            return -(self.value_shift - self.epsilon)
        return self.value_shift - self.epsilon

    def start(self, state, player):
        if player != self.owner:
            raise StrategyError(f"{self.kind} strategy was synthesized for player {self.owner}")
        self.player = player
        self.x = self.x0 = initial_position(self.scheme, state.ratio(player))

    def entitlement(self):
        return self.scheme.r_x(self.x)

    def bid(self, state):
        s = self.strength[state.vertex]
        if s == 0:
            return 0
        return self.scheme.bid(self.x, s)

    def move(self, state):
        return self.move_map[state.vertex]

    def observe(self, state, vertex, won, own_bid, other_bid):
        s = self.strength[vertex]
        if won:
            self.x += self.mu * s
        else:
            self.x -= self.nu * s

    def to_dict(self) -> dict:
        sc = self.scheme
        return {
            "kind": self.kind,
            "tau": str(sc.tau),
            "ratio": self.ratio,
            "epsilon": self.epsilon,
            "K": sc.K,
            "beta": sc.beta,
            "gamma": sc.gamma,
            "p": self.p,
            "move_map": dict(self.move_map),
            "strengths": dict(self.strength),
            "x0": self.x0,
            "player": self.owner,
            "value_shift": self.value_shift,
            "guarantee": self.guarantee,
            "rtb": self.rtb.to_dict(),
        }


def synth_max_mp_strategy(g: GameGraph, tau, ratio, epsilon, tol=1e-10, initial_ratio=None,
                          _owner=PLAYER1, _negated=False) -> MaxMpStrategy:
    """Synthesize the eps-optimal Max strategy for target ratio ``ratio``."""
    if not epsilon > 0:
        raise ContractError(f"epsilon must be positive, got {epsilon}")
    tau = to_fraction(tau)
    r = float(ratio)
    c = solve_mp(g, bias(tau, to_fraction(ratio)), tol).mp_value
    shifted = g.shifted(-to_fraction(c))
    k_min = min_K(float(tau), r)
    delta = 1.0
    for _ in range(60):
        K = k_min * (1 + delta)
        p = r / (r + (1 - r) * K)
        sol = solve_mp(shifted, p, tol)
        if sol.mp_value > -epsilon:
            break
        delta /= 2
    else:
        raise NumericalError("no stretch K found with shifted value above -epsilon")
    strength = {v: _round12(s) for v, s in sol.strength.items()}
    S = tuple(sorted(set(strength.values())))
    beta, gamma = fit_beta_gamma(S, tau, r, K)
    scheme = NormalizationScheme(K, beta, gamma, r, tau, S)
    strat = MaxMpStrategy(scheme, sol.move_max, strength, p, sol, float(c), float(epsilon), r,
                          owner=_owner, negated=_negated)
    if initial_ratio is not None:
        strat.x0 = strat.x = initial_position(scheme, initial_ratio)
    return strat


def synth_min_mp_strategy(g: GameGraph, tau, ratio_min, epsilon, tol=1e-10, initial_ratio=None) -> MaxMpStrategy:
    """Min's mirror strategy: the Max construction on the negated game, played as Player 2."""
    return synth_max_mp_strategy(g.negated(), tau, ratio_min, epsilon, tol, initial_ratio,
                                 _owner=PLAYER2, _negated=True)


# -- qualitative reachability ---------------------------------------------

def shortest_path_moves(g: GameGraph, target):
    """Successor on a shortest path to ``target`` (smallest index on ties) and distances."""
    pred = {v: [] for v in g.vertices}
    for a, b in g.edges:
        pred[b].append(a)
    dist = {target: 0}
    queue = deque([target])
    while queue:
        u = queue.popleft()
        for a in pred[u]:
            if a not in dist:
                dist[a] = dist[u] + 1
                queue.append(a)
    moves = {}
    for v in g.vertices:
        cands = [u for u in g.succ(v) if u in dist]
        if cands:
            moves[v] = min(cands, key=lambda u: (dist[u], g.index(u)))
    return moves, dist


@dataclass
class GainRecord:
    step: int
    wins_before: int
    odds_before: Fraction
    odds_after: Fraction

    @property
    def gain(self):
        return self.odds_after - self.odds_before


class QualReachStrategy(BiddingStrategy):
    """Reach the target from any positive budget with a geometric bid schedule.

    After ``i`` consecutive wins in the current cycle the bid is
    ``m * r_geo**(i + 1)`` in units of the total budget at the start of the
    cycle.  A lost bidding starts a new cycle.
    """

    name = "reach"

    def __init__(self, target, tau, epsilon, n, r_geo, m, move_map):
        self.target = target
        self.tau = tau
        self.epsilon = epsilon
        self.n = n
        self.r_geo = r_geo
        self.m = m
        self.move_map = dict(move_map)
        self.consecutive_wins = 0
        self.gains: list[GainRecord] = []
        self.player = PLAYER1

    @property
    def gain_bound(self):
        """Guaranteed odds increase per lost bidding in units of the cycle-start total."""
        return self.tau * self.m * self.r_geo / ((1 - self.epsilon) * (self.r_geo - 1))

    def start(self, state, player):
        self.player = player
        self.consecutive_wins = 0
        self.gains = []
        self._new_cycle(state)

    def _odds(self, state):
        own = state.exact_budget(self.player)
        other = state.exact_budget(3 - self.player)
        return own / other if other else None

    def _new_cycle(self, state):
        self.cycle_total = state.exact_total()
        self.cycle_odds = self._odds(state)

    def bid(self, state):
        if state.vertex == self.target:
            return Fraction(0)
        total = state.exact_total()
        if total == 0:
            return Fraction(0)
        return self.m * self.r_geo ** (self.consecutive_wins + 1) * self.cycle_total / total

    def move(self, state):
        return self.move_map.get(state.vertex, state.game.succ(state.vertex)[0])

    def observe(self, state, vertex, won, own_bid, other_bid):
        if vertex == self.target:
            return
        if won:
            self.consecutive_wins += 1
            return
        after = self._odds(state)
        if self.cycle_odds is not None and after is not None:
            self.gains.append(GainRecord(state.step, self.consecutive_wins, self.cycle_odds, after))
        self.consecutive_wins = 0
        self._new_cycle(state)

    def to_dict(self) -> dict:
        return {
            "kind": "reach",
            "tau": str(self.tau),
            "epsilon": str(self.epsilon),
            "r_geo": self.r_geo,
            "m": str(self.m),
            "n": self.n,
            "target": self.target,
            "move_map": dict(self.move_map),
        }


def synth_qual_reach_strategy(g: GameGraph, target, tau, epsilon) -> QualReachStrategy:
    tau, eps = to_fraction(tau), to_fraction(epsilon)
    if target not in g.weights:
        raise ContractError(f"unknown target {target!r}")
    if not 0 < eps < 1:
        raise ContractError(f"epsilon must lie in (0, 1), got {eps}")
    if not 0 <= tau <= 1:
        raise ContractError(f"tau must lie in [0, 1], got {tau}")
    if tau == 0:
        raise UnsupportedParameterError(
            "the geometric schedule needs the loser to receive part of each bid; tau = 0 is not supported"
        )
    moves, dist = shortest_path_moves(g, target)
    missing = [v for v in g.vertices if v not in dist]
    if missing:
        raise ContractError(f"target {target!r} is unreachable from {missing[0]!r}")
    n = len(g) - 1
    r_geo = max(3, math.floor(2 / tau) + 2)
    m = eps / (2 * r_geo**n)
    return QualReachStrategy(target, tau, eps, n, r_geo, m, moves)


# -- serialization ----------------------------------------------------------

_NUM = {"type": "number"}
_MAP = {"type": "object", "additionalProperties": {"type": "string"}}

MP_STRATEGY_SCHEMA = {
    "type": "object",
    "required": ["kind", "tau", "ratio", "K", "beta", "gamma", "p", "move_map", "strengths", "x0"],
    "properties": {
        "kind": {"enum": ["max-mp", "min-mp"]},
        "tau": {"type": "string"},
        "ratio": _NUM,
        "epsilon": _NUM,
        "K": {"type": "number", "exclusiveMinimum": 0},
        "beta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "gamma": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "p": _NUM,
        "move_map": _MAP,
        "strengths": {"type": "object", "additionalProperties": {"type": "number", "minimum": 0}},
        "x0": {"type": ["number", "null"]},
        "player": {"enum": [1, 2]},
        "value_shift": _NUM,
        "guarantee": _NUM,
        "rtb": {"type": "object"},
    },
}

REACH_STRATEGY_SCHEMA = {
    "type": "object",
    "required": ["kind", "tau", "epsilon", "r_geo", "m", "move_map"],
    "properties": {
        "kind": {"const": "reach"},
        "tau": {"type": "string"},
        "epsilon": {"type": "string"},
        "r_geo": {"type": "integer", "minimum": 3},
        "m": {"type": "string"},
        "n": {"type": "integer", "minimum": 0},
        "target": {"type": "string"},
        "move_map": _MAP,
    },
}


def strategy_schema(kind):
    return REACH_STRATEGY_SCHEMA if kind == "reach" else MP_STRATEGY_SCHEMA


def _rtb_from_dict(doc, weights):
    return RtbSolution(
        p=doc["p"], mp_value=doc["mp_value"], pot=doc["pot"], strength=doc["strength"],
        move_max=doc["move_max"], move_min=doc["move_min"], pot_span=doc["pot_span"],
        weights=weights, residual=doc["residual"],
    )


def strategy_from_dict(doc: dict, g: GameGraph):
    """Rebuild a play-time strategy from its document (no re-solving)."""
    import jsonschema

    kind = doc.get("kind")
    try:
        jsonschema.validate(doc, strategy_schema(kind))
    except jsonschema.ValidationError as exc:
        raise ContractError(f"invalid strategy document: {exc.message}") from None
    for v in doc["move_map"]:
        if v not in g.weights or doc["move_map"][v] not in g.succ(v):
            raise ContractError(f"strategy move for {v!r} is not an edge of the game")
    if kind == "reach":
        return QualReachStrategy(doc.get("target"), Fraction(doc["tau"]), Fraction(doc["epsilon"]),
                                 doc.get("n", len(g) - 1), doc["r_geo"], Fraction(doc["m"]), doc["move_map"])
    negated = kind == "min-mp"
    S = tuple(sorted(set(doc["strengths"].values())))
    scheme = NormalizationScheme(doc["K"], doc["beta"], doc["gamma"], doc["ratio"], Fraction(doc["tau"]), S)
    base = g.negated() if negated else g
    shift = doc.get("value_shift", 0.0)
    weights = {v: float(w) - shift for v, w in base.weights.items()}
    rtb = _rtb_from_dict(doc["rtb"], weights) if "rtb" in doc else None
    return MaxMpStrategy(scheme, doc["move_map"], doc["strengths"], doc["p"], rtb, shift,
                         doc.get("epsilon", 0.0), doc["ratio"], owner=doc.get("player", 2 if negated else 1),
                         negated=negated, x0=doc["x0"])
