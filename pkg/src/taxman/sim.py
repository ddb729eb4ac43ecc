"""Bidding-game engine, adversary catalog, payoff estimates and play audits.

Budgets are kept as exact integers on a fixed grid: one unit is
``1 / (D * 10**exp)`` of the initial currency, where ``D`` clears the
denominators of the initial budgets and of tau.  Bids are snapped up to a
multiple of ``tau``'s denominator, so every payment is an integer number of
units and all accounting is exact.  Whenever the total drops below
``10**18`` units both budgets are multiplied by 10 (and ``exp`` grows),
which keeps the relative resolution of bids at 1e-18 without the growth in
denominators that renormalizing to total 1 would cause.
"""

from __future__ import annotations

import csv
import io
import math
import random
import time
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import PLAYER1, PLAYER2, Budgets, GameGraph, Mechanism, to_fraction
from .errors import ContractError, IllegalBidError, StrategyError
from .rtb import RtbSolution, solve_mp
from .strategy import BiddingStrategy, MaxMpStrategy, shortest_path_moves
from .thresholds import solve_reachability_thresholds

TIE_RULES = ("player1", "player2", "alternate", "random")
_LOW = 10**18
_HEADER = ["step", "vertex", "bid1", "bid2", "winner", "move", "b1", "b2", "energy", "x"]


def episode_rng(seed, episode=0) -> random.Random:
    """Generator for one episode, derived from ``(seed, episode)`` by SeedSequence hashing."""
    state = np.random.SeedSequence([int(seed), int(episode)]).generate_state(2, np.uint64)
    return random.Random(int(state[0]) << 64 | int(state[1]))


class PlayState:
    """Mutable view of the running play handed to strategies."""

    __slots__ = ("game", "tau", "step", "vertex", "b1", "b2", "exp", "unit", "rng", "trace")

    def ratio(self, player):
        t = self.b1 + self.b2
        if t == 0:
            return 0.5
        return (self.b1 if player == PLAYER1 else self.b2) / t

    def exact_budget(self, player) -> Fraction:
        return Fraction(self.b1 if player == PLAYER1 else self.b2, self.unit * 10**self.exp)

    def exact_total(self) -> Fraction:
        return Fraction(self.b1 + self.b2, self.unit * 10**self.exp)

    def exact_ratio(self, player) -> Fraction:
        t = self.b1 + self.b2
        return Fraction(self.b1 if player == PLAYER1 else self.b2, t) if t else Fraction(1, 2)


@dataclass
class AuditRecord:
    step: int
    kind: str
    player: int
    detail: str


@dataclass
class PlayTrace:
    """Round-by-round record.  Round ``i`` is played at ``vertices[i]``;
    ``bid*``/``totals`` are in grid units before the round, ``b1``/``b2``/
    ``exps`` describe the budgets after it."""

    game: GameGraph
    tau: Fraction
    unit: int
    initial: Budgets
    tie_break: str
    seed: int
    episode: int
    vertices: list = field(default_factory=list)
    bid1: list = field(default_factory=list)
    bid2: list = field(default_factory=list)
    totals: list = field(default_factory=list)
    winners: list = field(default_factory=list)
    moves: list = field(default_factory=list)
    b1: list = field(default_factory=list)
    b2: list = field(default_factory=list)
    exps: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    x: list | None = None
    x_player: int | None = None
    audits: list = field(default_factory=list)
    reached: int | None = None

    def __len__(self):
        return len(self.vertices)

    @property
    def steps(self):
        return len(self.vertices)

    @property
    def payoff_running(self):
        return self.energy[-1] / len(self.energy) if self.energy else 0.0

    def bid_fraction(self, i, player) -> Fraction:
        """Bid of ``player`` in round ``i`` as an exact fraction of the pre-round total."""
        b = self.bid1[i] if player == PLAYER1 else self.bid2[i]
        return Fraction(b, self.totals[i]) if self.totals[i] else Fraction(0)

    def budgets_after(self, i) -> Budgets:
        """Exact (not normalized) budgets after round ``i`` in initial currency."""
        den = self.unit * 10**self.exps[i]
        return Budgets(Fraction(self.b1[i], den), Fraction(self.b2[i], den))

    def budgets_before(self, i) -> Budgets:
        return self.initial if i == 0 else self.budgets_after(i - 1)

    def normalized_after(self, i):
        t = self.b1[i] + self.b2[i]
        if t == 0:
            return Fraction(1, 2), Fraction(1, 2)
        return Fraction(self.b1[i], t), Fraction(self.b2[i], t)


def run_play(g: GameGraph, mech: Mechanism, budgets: Budgets, strat1: BiddingStrategy, strat2: BiddingStrategy,
             tie_break="player1", steps=10**5, seed=0, *, episode=0, start=None, strict=False,
             stop_at_target=False) -> PlayTrace:
    """Play ``steps`` rounds (fewer only when ``stop_at_target`` hits a target)."""
    if isinstance(steps, bool) or not isinstance(steps, int) or steps < 1:
        raise ContractError(f"steps must be a positive integer, got {steps!r}")
    if tie_break not in TIE_RULES:
        raise ContractError(f"unknown tie rule {tie_break!r}; expected one of {', '.join(TIE_RULES)}")
    if not isinstance(mech, Mechanism):
        mech = Mechanism(mech)
    tau = mech.tau
    start = g.vertices[0] if start is None else start
    if start not in g.weights:
        raise ContractError(f"unknown start vertex {start!r}")

    q = tau.denominator
    tau_num = tau.numerator
    unit = math.lcm(budgets.b1.denominator, budgets.b2.denominator) * q
    b1 = budgets.b1 * unit
    b2 = budgets.b2 * unit
    exp = 0
    while b1 + b2 < _LOW:
        b1, b2, exp = b1 * 10, b2 * 10, exp + 1
    b1, b2 = int(b1), int(b2)

    rng = episode_rng(seed, episode)
    trace = PlayTrace(g, tau, unit, budgets, tie_break, seed, episode)
    st = PlayState()
    st.game, st.tau, st.step, st.vertex = g, tau, 0, start
    st.b1, st.b2, st.exp, st.unit, st.rng, st.trace = b1, b2, exp, unit, rng, trace

    strat1.start(st, PLAYER1)
    strat2.start(st, PLAYER2)
    walkers = [(p, s) for p, s in ((PLAYER1, strat1), (PLAYER2, strat2)) if isinstance(s, MaxMpStrategy)]
    walker = walkers[0] if walkers else None
    if walker:
        trace.x, trace.x_player = [], walker[0]
    succ = {v: frozenset(g.succ(v)) for v in g.vertices}
    weight = {v: float(w) for v, w in g.weights.items()}
    targets = g.targets or frozenset()

    tv, tb1, tb2, tT, tw, tm = trace.vertices, trace.bid1, trace.bid2, trace.totals, trace.winners, trace.moves
    ta1, ta2, te, ten = trace.b1, trace.b2, trace.exps, trace.energy
    tx = trace.x
    audits = trace.audits
    energy = 0.0
    alt = PLAYER1
    v = start

    def snap(f, own, T, player, step):
        # ceil(f * T) rounded up to a multiple of q, clamped to the budget
        if type(f) is float:
            u = math.ceil(f * T) if f > 0 else 0
        else:
            f = to_fraction(f)
            u = -((-f.numerator * T) // f.denominator) if f > 0 else 0
        if f < 0:
            audits.append(AuditRecord(step, "negative-bid", player, f"{float(f):.6g}"))
            u = 0
        if q > 1 and u % q:
            u += q - u % q
        if u > own:
            if float(f) * T > own + q + T * 1e-12:
                if strict:
                    raise IllegalBidError(player, Fraction(u, T), Fraction(own, T))
                audits.append(AuditRecord(step, "clamp", player, f"bid {float(f):.15g} > budget {own / T:.15g}"))
            u = own - own % q
        return u

    for step in range(steps):
        st.step = step
        st.vertex = v
        T = b1 + b2
        u1 = snap(strat1.bid(st), b1, T, PLAYER1, step)
        u2 = snap(strat2.bid(st), b2, T, PLAYER2, step)
        if u1 > u2:
            win = PLAYER1
        elif u2 > u1:
            win = PLAYER2
        elif tie_break == "player1":
            win = PLAYER1
        elif tie_break == "player2":
            win = PLAYER2
        elif tie_break == "alternate":
            win, alt = alt, 3 - alt
        else:
            win = PLAYER1 if rng.random() < 0.5 else PLAYER2
        mover = strat1 if win == PLAYER1 else strat2
        nxt = mover.move(st)
        if nxt not in succ[v]:
            raise StrategyError(f"player {win} moved from {v!r} to {nxt!r}, which is not a successor")
        if win == PLAYER1:
            b1 -= u1
            b2 += tau_num * (u1 // q)
        else:
            b2 -= u2
            b1 += tau_num * (u2 // q)
        while 0 < b1 + b2 < _LOW:
            b1 *= 10
            b2 *= 10
            exp += 1
        energy += weight[v]
        tv.append(v)
        tb1.append(u1)
        tb2.append(u2)
        tT.append(T)
        tw.append(win)
        tm.append(nxt)
        ta1.append(b1)
        ta2.append(b2)
        te.append(exp)
        ten.append(energy)
        st.b1, st.b2, st.exp = b1, b2, exp
        f1 = u1 / T if T else 0.0
        f2 = u2 / T if T else 0.0
        strat1.observe(st, v, win == PLAYER1, f1, f2)
        strat2.observe(st, v, win == PLAYER2, f2, f1)
        if walker:
            wp, ws = walker
            x = ws.x
            tx.append(x)
            if x < 1 - 1e-12:
                audits.append(AuditRecord(step, "walk-floor", wp, f"x = {x:.15g}"))
            own = b1 if wp == PLAYER1 else b2
            if b1 + b2 and own / (b1 + b2) < ws.entitlement() - 1e-9:
                audits.append(AuditRecord(step, "entitlement", wp,
                                          f"ratio {own / (b1 + b2):.15g} < r_x {ws.entitlement():.15g}"))
        v = nxt
        if stop_at_target and v in targets:
            trace.reached = step + 1
            break
    return trace


# -- adversaries ------------------------------------------------------------

def hostile_moves(g: GameGraph, player):
    """Default move map for catalog strategies.

    On games with targets Player 2 keeps away from them (largest BFS
    distance, unreachable counts as infinite) and Player 1 heads for them.
    Otherwise moves follow the random-turn potentials at bias 1/2 when the
    game is strongly connected, and the successor weights if not.
    """
    if g.targets:
        dist = {}
        for t in g.targets:
            _, d = shortest_path_moves(g, t)
            for v, k in d.items():
                dist[v] = min(dist.get(v, k), k)
        key = lambda u: dist.get(u, math.inf)
        if player == PLAYER1:
            return {v: min(g.succ(v), key=lambda u: (key(u), g.index(u))) for v in g.vertices}
        return {v: min(g.succ(v), key=lambda u: (-key(u), g.index(u))) for v in g.vertices}
    if g.is_strongly_connected():
        sol = solve_mp(g, Fraction(1, 2))
        return dict(sol.move_max if player == PLAYER1 else sol.move_min)
    sign = 1 if player == PLAYER1 else -1
    return {v: min(g.succ(v), key=lambda u: (-sign * g.weights[u], g.index(u))) for v in g.vertices}


class CatalogStrategy(BiddingStrategy):
    def start(self, state, player):
        self.player = player
        self.moves = hostile_moves(state.game, player)

    def move(self, state):
        return self.moves[state.vertex]


class AllIn(CatalogStrategy):
    name = "all-in"

    def bid(self, state):
        return state.ratio(self.player)


class FractionBid(CatalogStrategy):
    def __init__(self, c):
        c = float(c)
        if not 0 <= c <= 1:
            raise ContractError(f"fraction must lie in [0, 1], got {c}")
        self.c = c
        self.name = f"fraction-{c:g}"

    def bid(self, state):
        return self.c * state.ratio(self.player)


class UniformRandom(CatalogStrategy):
    name = "random"

    def bid(self, state):
        return state.rng.random() * state.ratio(self.player)


class StrengthMimic(CatalogStrategy):
    """Bids own_ratio * (1 - own_ratio) * St(v), strengths from the bias-1/2 game."""

    name = "strength-mimic"

    def start(self, state, player):
        super().start(state, player)
        g = state.game
        if g.is_strongly_connected():
            self.strength = solve_mp(g, Fraction(1, 2)).strength
        else:
            self.strength = {v: 0.0 for v in g.vertices}

    def bid(self, state):
        a = state.ratio(self.player)
        return min(a, a * (1 - a) * self.strength[state.vertex])


class ThresholdOutbid(CatalogStrategy):
    """Tries to win exactly the biddings that matter.

    It bids half the threshold gap between the worst and best successor
    (on games with targets), or 1% above a forecast of the opponent's next
    bid based on the growth of its last two observed bids, whichever is
    larger, never more than its budget.
    """

    name = "reach-threshold"

    def start(self, state, player):
        super().start(state, player)
        g = state.game
        self.gap = {v: 0.0 for v in g.vertices}
        if g.targets:
            th = solve_reachability_thresholds(g, state.tau).th
            for v in g.vertices:
                vals = [th[u] for u in g.succ(v)]
                self.gap[v] = (max(vals) - min(vals)) / 2
        self.last = self.prev = 0.0

    def bid(self, state):
        a = state.ratio(self.player)
        growth = self.last / self.prev if self.prev > 0 else 1.0
        forecast = 1.01 * self.last * max(growth, 1.0)
        return min(a, max(self.gap[state.vertex], forecast))

    def observe(self, state, vertex, won, own_bid, other_bid):
        self.prev, self.last = self.last, other_bid


def builtin_adversaries():
    """Catalog of named strategy factories (each call builds a fresh instance)."""
    return {
        "all-in": AllIn,
        "fraction": lambda: FractionBid(0.5),
        "random": UniformRandom,
        "strength-mimic": StrengthMimic,
        "reach-threshold": ThresholdOutbid,
    }


MP_ADVERSARIES = ("all-in", "fraction", "random", "strength-mimic")
ALL_ADVERSARIES = MP_ADVERSARIES + ("reach-threshold",)


def make_adversary(name: str) -> BiddingStrategy:
    """Build a catalog strategy; ``fraction-<c>`` selects a custom fraction."""
    cat = builtin_adversaries()
    if name in cat:
        return cat[name]()
    if name.startswith("fraction-"):
        try:
            return FractionBid(float(name[len("fraction-"):]))
        except ValueError:
            pass
    raise ContractError(f"unknown adversary {name!r}; known: {', '.join(cat)} and fraction-<c>")


class ReplayStrategy(BiddingStrategy):
    """Replays recorded exact bids and, when winning, the recorded moves."""

    name = "replay"

    def __init__(self, bids, moves):
        self.bids = list(bids)
        self.moves = list(moves)

    def bid(self, state):
        return self.bids[state.step]

    def move(self, state):
        return self.moves[state.step]

    @classmethod
    def from_csv(cls, text, player):
        rows = list(csv.DictReader(io.StringIO(text)))
        if rows and f"bid{player}_exact" not in rows[0]:
            raise ContractError("replay needs a trace exported in exact mode")
        return cls([Fraction(r[f"bid{player}_exact"]) for r in rows], [r["move"] for r in rows])


# -- reporting ---------------------------------------------------------------

def _frac(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def trace_csv(trace: PlayTrace, exact=False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = list(_HEADER)
    if exact:
        header += ["bid1_exact", "bid2_exact", "b1_exact", "b2_exact"]
    w.writerow(header)
    for i in range(len(trace)):
        T = trace.totals[i]
        a1, a2 = trace.b1[i], trace.b2[i]
        t = a1 + a2
        row = [
            i,
            trace.vertices[i],
            f"{trace.bid1[i] / T:.15g}" if T else "0",
            f"{trace.bid2[i] / T:.15g}" if T else "0",
            trace.winners[i],
            trace.moves[i],
            f"{a1 / t:.15g}" if t else "0.5",
            f"{a2 / t:.15g}" if t else "0.5",
            f"{trace.energy[i]:.15g}",
            f"{trace.x[i]:.15g}" if trace.x is not None else "",
        ]
        if exact:
            n1, n2 = trace.normalized_after(i)
            row += [_frac(trace.bid_fraction(i, 1)), _frac(trace.bid_fraction(i, 2)), _frac(n1), _frac(n2)]
        w.writerow(row)
    return buf.getvalue()


def _round_weights(trace: PlayTrace):
    w = {v: float(x) for v, x in trace.game.weights.items()}
    return np.array([w[v] for v in trace.vertices])


def window_averages(trace: PlayTrace, tail_windows):
    if not len(trace):
        raise ContractError("empty trace")
    ws = _round_weights(trace)
    out = {}
    for W in tail_windows:
        if not 0 < W <= len(ws):
            raise ContractError(f"window {W} does not fit a trace of {len(ws)} rounds")
        out[W] = float(ws[-W:].mean())
    return out


def estimate_payoff(trace: PlayTrace, tail_windows) -> float:
    """Smallest tail-window average: a finite-horizon stand-in for the liminf."""
    return min(window_averages(trace, tail_windows).values())


@dataclass(frozen=True)
class LedgerReport:
    min_slack: float
    argmin: int          # number of rounds in the worst prefix
    prefixes: int


def audit_lemma3(trace: PlayTrace, rtb: RtbSolution, nu, mu) -> LedgerReport:
    """Energy/strength ledger inequality at every prefix of ``trace``.

    A round counts as won by the strategy owner exactly when the play moved
    to the owner's preferred successor ``rtb.move_max``; prefix slack is
    ``nu mu/(nu+mu) (E - P - k MP) - (mu I - nu G)`` for ``k`` rounds.

    Along an optimal play the inequality is tight, so summing float terms
    over long traces drifts by more than the tolerance.  The slack is
    instead written as exact per-(vertex, outcome) round counts times one
    float coefficient each.
    """
    if rtb is None:
        raise ContractError("the ledger audit needs the strategy's random-turn solution")
    g = trace.game
    idx = {v: i for i, v in enumerate(g.vertices)}
    vi = np.array([idx[v] for v in trace.vertices], dtype=np.intp)
    mi = np.array([idx[v] for v in trace.moves], dtype=np.intp)
    w = np.array([float(rtb.weights[v]) for v in g.vertices])
    st = np.array([float(rtb.strength[v]) for v in g.vertices])
    plus = np.array([idx[rtb.move_max[v]] for v in g.vertices], dtype=np.intp)
    won = plus[vi] == mi
    c = nu * mu / (nu + mu)
    base = c * (w - float(rtb.mp_value))
    coef = np.concatenate([base + nu * st, base - mu * st])   # lost, won
    n = len(g.vertices)
    cls = vi + n * won
    slack = np.full(len(vi) + 1, -c * float(rtb.pot_span))
    for j in np.unique(cls):
        counts = np.concatenate([[0], np.cumsum(cls == j)])
        slack += counts * coef[j]
    j = int(np.argmin(slack))
    return LedgerReport(float(slack[j]), j, len(slack))


@dataclass
class SimReport:
    steps: int
    payoff_running: float
    tail: dict
    tail_min: float
    tail_max: float
    audit_summary: dict
    seed: int
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self, include_wall_time=False) -> dict:
        out = {
            "steps": self.steps,
            "payoff_running": f"{self.payoff_running:.12g}",
            "tail_windows": {str(k): f"{v:.12g}" for k, v in self.tail.items()},
            "tail_min": f"{self.tail_min:.12g}",
            "tail_max": f"{self.tail_max:.12g}",
            "audit_summary": dict(self.audit_summary),
            "seed": self.seed,
        }
        out.update(self.extra)
        if include_wall_time:
            out["wall_time"] = self.wall_time
        return out


def default_windows(steps):
    ws = sorted({w for w in (steps // 10, steps // 4, steps // 2) if w > 0}) or [steps]
    return ws


def summarize(trace: PlayTrace, tail_windows=None, wall_time=0.0) -> SimReport:
    windows = default_windows(len(trace)) if tail_windows is None else tail_windows
    tail = window_averages(trace, windows)
    counts = Counter(a.kind for a in trace.audits)
    return SimReport(len(trace), trace.payoff_running, tail, min(tail.values()), max(tail.values()),
                     dict(sorted(counts.items())), trace.seed, wall_time)


def simulate(g, mech, budgets, strat1, strat2, tie_break="player1", steps=10**5, seed=0, tail_windows=None,
             **kw):
    """``run_play`` followed by ``summarize``; returns ``(trace, report)``."""
    t0 = time.perf_counter()
    trace = run_play(g, mech, budgets, strat1, strat2, tie_break, steps, seed, **kw)
    report = summarize(trace, tail_windows, time.perf_counter() - t0)
    for s in (strat1, strat2):
        if isinstance(s, MaxMpStrategy) and s.rtb is not None:
            rep = audit_lemma3(trace, s.rtb, s.nu, s.mu)
            report.extra["ledger_min_slack"] = f"{rep.min_slack:.12g}"
            report.extra["walk_min"] = f"{min(trace.x):.12g}" if trace.x else None
    if trace.reached is not None:
        report.extra["reached_at"] = trace.reached
    return trace, report
