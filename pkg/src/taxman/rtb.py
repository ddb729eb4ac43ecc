"""Random-turn games: at every step a coin with bias ``p`` picks the mover.

``solve_mp`` works on the base graph with the p-mixed Bellman operator

    T(h)(v) = w(v) + p * max_{u in N(v)} h(u) + (1 - p) * min_{u in N(v)} h(u)

instead of materialising the three-copies stochastic game; ``build_rtb``
exists for export and for cross-checking the construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

from . import linalg
from .core import GameGraph, strongly_connected_components, to_fraction
from .errors import ContractError, ConvergenceError, NumericalError


@dataclass(frozen=True)
class RtbGame:
    """The explicit stochastic game: copies ``(v, "1")``, ``(v, "2")``, ``(v, "N")``."""

    base: GameGraph
    p: Fraction
    player1: tuple
    player2: tuple
    nature: tuple
    edges: frozenset
    prob: Mapping
    weights: Mapping

    def to_dict(self) -> dict:
        name = lambda x: f"{x[0]}|{x[1]}"
        return {
            "p": str(self.p),
            "player1": [name(x) for x in self.player1],
            "player2": [name(x) for x in self.player2],
            "nature": [name(x) for x in self.nature],
            "edges": sorted([name(a), name(b)] for a, b in self.edges),
            "prob": {f"{name(a)}->{name(b)}": str(q) for (a, b), q in sorted(self.prob.items())},
        }


def build_rtb(g: GameGraph, p) -> RtbGame:
    p = to_fraction(p)
    if not 0 <= p <= 1:
        raise ContractError(f"bias must lie in [0, 1], got {p}")
    v1 = tuple((v, "1") for v in g.vertices)
    v2 = tuple((v, "2") for v in g.vertices)
    vn = tuple((v, "N") for v in g.vertices)
    edges = set()
    prob = {}
    for v in g.vertices:
        edges.add(((v, "N"), (v, "1")))
        edges.add(((v, "N"), (v, "2")))
        prob[((v, "N"), (v, "1"))] = p
        prob[((v, "N"), (v, "2"))] = 1 - p
        for u in g.succ(v):
            edges.add(((v, "1"), (u, "N")))
            edges.add(((v, "2"), (u, "N")))
    weights = {x: g.weights[x[0]] for x in v1 + v2 + vn}
    return RtbGame(g, p, v1, v2, vn, frozenset(edges), prob, weights)


def _succ_table(g: GameGraph):
    """Successor indices padded to a rectangle by repeating the first entry."""
    rows = [[g.index(u) for u in g.succ(v)] for v in g.vertices]
    width = max(len(r) for r in rows)
    return np.array([r + [r[0]] * (width - len(r)) for r in rows], dtype=np.intp)


def solve_reach_value(g: GameGraph, p, targets=None, tol=1e-10, max_iters=10**6) -> dict:
    """Value of reaching ``targets`` in the random-turn game, by value iteration.

    Iterates from the indicator of the targets, so the iterates increase
    monotonically to the least fixed point.
    """
    targets = g.targets if targets is None else frozenset(targets)
    if not targets:
        raise ContractError("reachability needs a non-empty target set")
    if tol <= 0:
        raise ContractError("tol must be positive")
    p = float(p)
    if not 0 <= p <= 1:
        raise ContractError(f"bias must lie in [0, 1], got {p}")
    table = _succ_table(g)
    is_target = np.array([v in targets for v in g.vertices])
    val = is_target.astype(float)
    delta = np.inf
    for it in range(1, max_iters + 1):
        nb = val[table]
        new = p * nb.max(axis=1) + (1 - p) * nb.min(axis=1)
        new[is_target] = 1.0
        delta = float(np.abs(new - val).max())
        val = new
        if delta < tol:
            val = _polish_reach(val, table, is_target, p)
            return {v: float(val[i]) for i, v in enumerate(g.vertices)}
    raise ConvergenceError("reachability value iteration did not converge", delta, max_iters)


def _polish_reach(val, table, is_target, p):
    """Solve the linear system of the greedy policy pair read off ``val``.

    Kept only when it is a better fixed point of the Bellman operator.
    """
    def bellman(x):
        nb = x[table]
        out = p * nb.max(axis=1) + (1 - p) * nb.min(axis=1)
        out[is_target] = 1.0
        return out

    rows = np.arange(len(val))
    nb = val[table]
    hi = table[rows, nb.argmax(axis=1)]
    lo = table[rows, nb.argmin(axis=1)]
    free = np.flatnonzero(~is_target & (val > 0))
    if free.size == 0:
        return val
    P = np.zeros((len(val), len(val)))
    np.add.at(P, (rows, hi), p)
    np.add.at(P, (rows, lo), 1 - p)
    fixed = np.setdiff1d(rows, free)
    A = np.eye(free.size) - P[np.ix_(free, free)]
    b = P[np.ix_(free, fixed)] @ val[fixed]
    try:
        x = val.copy()
        x[free] = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        return val
    if not np.all(np.isfinite(x)) or x.min() < -1e-12 or x.max() > 1 + 1e-12:
        return val
    x = np.clip(x, 0.0, 1.0)
    before = np.abs(bellman(val) - val).max()
    after = np.abs(bellman(x) - x).max()
    return x if after < before else val


# -- mean payoff ---------------------------------------------------------

@dataclass(frozen=True)
class RtbSolution:
    """Optimal play of the random-turn mean-payoff game at bias ``p``."""

    p: object
    mp_value: object
    pot: dict
    strength: dict
    move_max: dict
    move_min: dict
    pot_span: object
    weights: dict
    residual: float

    def to_dict(self) -> dict:
        num = lambda x: str(x) if isinstance(x, Fraction) else float(x)
        return {
            "p": num(self.p),
            "mp_value": num(self.mp_value),
            "pot": {v: num(x) for v, x in self.pot.items()},
            "strength": {v: num(x) for v, x in self.strength.items()},
            "move_max": dict(self.move_max),
            "move_min": dict(self.move_min),
            "pot_span": num(self.pot_span),
            "residual": self.residual,
        }


def evaluate_policy(succ_max, succ_min, w, p, exact=False):
    """Gain and bias of the Markov chain where Max moves to ``succ_max[i]``
    with probability ``p`` and Min to ``succ_min[i]`` otherwise.

    Handles several recurrent classes: each class gets its own gain, and
    the bias is the deviation vector (zero mean under each class's
    stationary distribution).  Returns ``(gain, bias)`` as lists.
    """
    n = len(w)
    one = Fraction(1) if exact else 1.0
    zero = one - one
    q = one - p
    P = [[zero] * n for _ in range(n)]
    for i in range(n):
        P[i][succ_max[i]] += p
        P[i][succ_min[i]] += q
    support = [[j for j in range(n) if P[i][j] != 0] for i in range(n)]
    comps = strongly_connected_components(range(n), support.__getitem__)
    comp_of = {i: k for k, c in enumerate(comps) for i in c}
    gain = [None] * n
    bias = [None] * n
    recurrent = set()
    for k, comp in enumerate(comps):
        if any(comp_of[j] != k for i in comp for j in support[i]):
            continue
        C = sorted(comp)
        recurrent.update(C)
        m = len(C)
        # stationary distribution: pi (I - P_C) = 0, sum(pi) = 1
        A = [[(one if a == b else zero) - P[C[b]][C[a]] for b in range(m)] for a in range(m)]
        A[-1] = [one] * m
        rhs = [zero] * (m - 1) + [one]
        pi = linalg.solve(A, rhs, exact)
        g = sum(pi[a] * w[C[a]] for a in range(m))
        M = [[(one if a == b else zero) - P[C[a]][C[b]] + pi[b] for b in range(m)] for a in range(m)]
        h = linalg.solve(M, [w[C[a]] - g for a in range(m)], exact)
        for a in range(m):
            gain[C[a]] = g
            bias[C[a]] = h[a]
    T = [i for i in range(n) if i not in recurrent]
    if T:
        R = sorted(recurrent)
        pos = {i: a for a, i in enumerate(T)}
        A = [[(one if a == b else zero) - P[T[a]][T[b]] for b in range(len(T))] for a in range(len(T))]
        gT = linalg.solve(A, [sum(P[i][j] * gain[j] for j in R) for i in T], exact)
        for i in T:
            gain[i] = gT[pos[i]]
        hT = linalg.solve(A, [w[i] - gain[i] + sum(P[i][j] * bias[j] for j in R) for i in T], exact)
        for i in T:
            bias[i] = hT[pos[i]]
    return gain, bias


def _discounted_values(succ_max, succ_min, w, p, lam):
    n = len(w)
    P = np.zeros((n, n))
    idx = np.arange(n)
    np.add.at(P, (idx, succ_max), p)
    np.add.at(P, (idx, succ_min), 1 - p)
    return linalg.solve_float(np.eye(n) - lam * P, w)


def _improve(values, policy, succ, better):
    """Switch every vertex whose current choice is beaten by a neighbour."""
    new = list(policy)
    changed = False
    for i, nbrs in enumerate(succ):
        best = policy[i]
        for u in nbrs:
            if better(values[u], values[best]):
                best = u
        if best != policy[i]:
            new[i] = best
            changed = True
    return new, changed


def _strategy_iteration(succ, w, p, lam, sigma, tau, max_rounds):
    """Hoffman-Karp iteration for the discounted random-turn game."""
    scale = (1.0 + float(np.abs(w).max())) / (1.0 - lam)
    eps = 1e-12 * scale
    up = lambda a, b: a > b + eps
    down = lambda a, b: a < b - eps
    for _ in range(max_rounds):
        for _ in range(max_rounds):
            v = _discounted_values(sigma, tau, w, p, lam)
            tau, changed = _improve(v, tau, succ, down)
            if not changed:
                break
        else:
            raise NumericalError("best-response iteration for Min did not terminate")
        sigma, changed = _improve(v, sigma, succ, up)
        if not changed:
            return sigma, tau
    raise NumericalError(f"strategy iteration cycled; last policies max={sigma} min={tau}")


def _certify(succ, gain, bias, sigma, tau, tol):
    """Largest violation of the optimality conditions for (sigma, tau)."""
    worst = max(gain) - min(gain)
    for i, nbrs in enumerate(succ):
        hi = max(bias[u] for u in nbrs)
        lo = min(bias[u] for u in nbrs)
        worst = max(worst, hi - bias[sigma[i]], bias[tau[i]] - lo)
    return worst


def _argbest(values, nbrs, sign, tie):
    """Best neighbour for ``sign`` (+1 max, -1 min); near-ties go to the smallest index."""
    target = max(sign * values[u] for u in nbrs)
    return min(u for u in nbrs if sign * values[u] >= target - tie)


_DISCOUNTS = (1 - 1e-3, 1 - 1e-5, 1 - 1e-7, 1 - 1e-9)


def solve_mp(g: GameGraph, p, tol=1e-10, exact=False, max_rounds=10_000) -> RtbSolution:
    """Mean-payoff value, potentials, strengths and optimal moves of RTB^p(g).

    Candidate positional strategies come from strategy iteration on the
    discounted game with discount factors approaching 1; a candidate is
    accepted once its mean-payoff gain/bias pair satisfies the optimality
    equations within ``tol`` (scaled by the largest weight).  With
    ``exact=True`` the accepted pair is re-evaluated over the rationals and
    every returned number is a Fraction.
    """
    if len(strongly_connected_components(g.vertices, g.succ)) != 1:
        raise ContractError("solve_mp needs a strongly connected game")
    p_exact = to_fraction(p)
    if not 0 <= p_exact <= 1:
        raise ContractError(f"bias must lie in [0, 1], got {p}")
    pf = float(p_exact)
    n = len(g)
    succ = [[g.index(u) for u in g.succ(v)] for v in g.vertices]
    w = np.array([float(g.weights[v]) for v in g.vertices])
    scale = 1.0 + float(np.abs(w).max())
    cert_tol = tol * scale

    sigma = [max(nb, key=lambda u: (w[u], -u)) for nb in succ]
    tau = [min(nb, key=lambda u: (w[u], u)) for nb in succ]
    violation = np.inf
    for lam in _DISCOUNTS:
        sigma, tau = _strategy_iteration(succ, w, pf, lam, sigma, tau, max_rounds)
        gain, bias = evaluate_policy(sigma, tau, w.tolist(), pf)
        violation = _certify(succ, gain, bias, sigma, tau, cert_tol)
        if violation <= cert_tol:
            break
    else:
        raise NumericalError(f"no certified optimal policy pair (violation {violation:.3e})")

    tie = cert_tol / 10
    sigma2 = [_argbest(bias, nb, +1, tie) for nb in succ]
    tau2 = [_argbest(bias, nb, -1, tie) for nb in succ]
    if (sigma2, tau2) != (sigma, tau):
        gain2, bias2 = evaluate_policy(sigma2, tau2, w.tolist(), pf)
        if _certify(succ, gain2, bias2, sigma2, tau2, cert_tol) <= cert_tol:
            sigma, tau, gain, bias = sigma2, tau2, gain2, bias2

    if exact:
        wq = [g.weights[v] for v in g.vertices]
        gain, bias = evaluate_policy(sigma, tau, wq, p_exact, exact=True)
        if _certify(succ, gain, bias, sigma, tau, 0) > 0:
            raise NumericalError("floating point policy is not exactly optimal")
        p_out, zero = p_exact, Fraction(0)
        weights = dict(zip(g.vertices, wq))
    else:
        gain, bias = [float(x) for x in gain], [float(x) for x in bias]
        p_out, zero = pf, 0.0
        weights = dict(zip(g.vertices, w.tolist()))

    value = gain[0]
    lo = min(bias)
    pot = [h - lo for h in bias]
    move_max = [_argbest(pot, nb, +1, zero if exact else tie) for nb in succ]
    move_min = [_argbest(pot, nb, -1, zero if exact else tie) for nb in succ]
    strength = [p_out * (1 - p_out) * (pot[move_max[i]] - pot[move_min[i]]) for i in range(n)]
    residual = max(
        abs(pot[i] - p_out * pot[move_max[i]] - (1 - p_out) * pot[move_min[i]] - weights[v] + value)
        for i, v in enumerate(g.vertices)
    )
    V = g.vertices
    return RtbSolution(
        p=p_out,
        mp_value=value,
        pot={V[i]: pot[i] for i in range(n)},
        strength={V[i]: strength[i] for i in range(n)},
        move_max={V[i]: V[move_max[i]] for i in range(n)},
        move_min={V[i]: V[move_min[i]] for i in range(n)},
        pot_span=zero - max(pot),
        weights=weights,
        residual=float(residual),
    )
