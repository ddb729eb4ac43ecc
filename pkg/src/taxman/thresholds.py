"""Threshold ratios for reachability and parity taxman games.

The local update is stored once in the parameterisation where the extra
factor multiplies the *bank's* share, and wrapped for the package-wide
convention (``tau`` = loser's share) by substituting ``1 - tau``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import GameGraph, scc_decompose, to_fraction
from .errors import ContractError, ConvergenceError, NumericalError


def bank_share_update(th_minus, th_plus, bank_share):
    """Local threshold when the winner pays ``bank_share`` of the bid to the bank."""
    return (th_minus + th_plus - bank_share * th_minus) / (2 - bank_share * (1 + th_minus - th_plus))


def local_taxman_update(th_minus, th_plus, tau):
    """Threshold of a vertex whose best/worst neighbours have thresholds
    ``th_minus <= th_plus``.  Exact when given Fractions.

    >>> local_taxman_update(Fraction(1, 5), Fraction(3, 5), 0)
    Fraction(3, 7)
    """
    if th_minus > th_plus:
        raise ContractError(f"need th_minus <= th_plus, got {th_minus} > {th_plus}")
    if not (0 <= th_minus and th_plus <= 1):
        raise ContractError("thresholds must lie in [0, 1]")
    if not 0 <= tau <= 1:
        raise ContractError(f"tau must lie in [0, 1], got {tau}")
    return bank_share_update(th_minus, th_plus, 1 - tau)


@dataclass(frozen=True)
class ThresholdMap:
    th: dict
    objective: str
    tau: Fraction
    residual: float
    iterations: int = 0

    def to_dict(self) -> dict:
        return {
            "tau": str(self.tau),
            "objective": self.objective,
            "th": {v: f"{x:.12g}" for v, x in self.th.items()},
            "residual": self.residual,
        }


def _table(g, idx):
    rows = [[idx[u] for u in g.succ(v)] for v in g.vertices]
    width = max(len(r) for r in rows)
    return np.array([r + [r[0]] * (width - len(r)) for r in rows], dtype=np.intp)


def _zero_region(g, boundary):
    """Non-boundary vertices from which Player 1 wins with any positive ratio.

    Largest set A such that every vertex of A has all its successors in A or
    in the zero-valued boundary, and can reach that boundary inside A.  Inside
    such a region Player 2 can never leave, and Player 1 forces the boundary
    with an arbitrarily small budget.
    """
    zeros = {v for v, x in boundary.items() if x == 0}
    cand = {v for v in g.vertices if v not in boundary}
    while True:
        keep = {v for v in cand if all(u in cand or u in zeros for u in g.succ(v))}
        sub = keep | zeros
        # backwards reachability to ``zeros`` inside ``sub``
        reach = set(zeros)
        frontier = True
        while frontier:
            frontier = False
            for v in keep:
                if v not in reach and any(u in reach for u in g.succ(v)):
                    reach.add(v)
                    frontier = True
        keep &= reach
        if keep == cand:
            return cand
        cand = keep


def solve_boundary_thresholds(g: GameGraph, boundary: dict, tau, tol=1e-10, max_iters=10**6,
                              objective="reachability") -> ThresholdMap:
    """Fixed point of the local taxman update with fixed values on ``boundary``.

    Vertices that cannot reach the boundary get threshold 1.  The remaining
    vertices are iterated from 1 (monotonically decreasing iterates), after
    the region with threshold exactly 0 has been settled combinatorially,
    which is where the poorman update converges only sublinearly.  The
    iterate is finally polished with Newton steps for the current choice of
    best/worst neighbours and kept only if that lowers the residual.
    """
    if tol <= 0:
        raise ContractError("tol must be positive")
    tau = to_fraction(tau)
    if not 0 <= tau <= 1:
        raise ContractError(f"tau must lie in [0, 1], got {tau}")
    bank = 1.0 - float(tau)
    boundary = {v: float(x) for v, x in boundary.items()}
    reach = g.reaching(boundary)
    fixed = dict(boundary)
    for v in g.vertices:
        if v not in reach:
            fixed[v] = 1.0
    for v in _zero_region(g, fixed):
        fixed[v] = 0.0

    n = len(g)
    idx = {v: i for i, v in enumerate(g.vertices)}
    table = _table(g, idx)
    free = np.array([v not in fixed for v in g.vertices])
    x = np.ones(n)
    for v, val in fixed.items():
        x[idx[v]] = val

    def step(x):
        nb = x[table]
        lo, hi = nb.min(axis=1), nb.max(axis=1)
        new = bank_share_update(lo, hi, bank)
        return np.where(free, new, x)

    iterations = 0
    delta = 0.0
    if free.any():
        for iterations in range(1, max_iters + 1):
            new = step(x)
            delta = float(np.abs(new - x).max())
            x = new
            if delta < tol:
                break
        else:
            raise ConvergenceError("threshold iteration did not converge", delta, max_iters)
        x = _polish(x, table, free, bank, step)
    residual = float(np.abs(step(x) - x).max())
    return ThresholdMap({v: float(x[i]) for i, v in enumerate(g.vertices)}, objective, tau, residual, iterations)


def _polish(x, table, free, bank, step):
    before = float(np.abs(step(x) - x).max())
    rows = np.arange(len(x))
    nb = x[table]
    lo_i = table[rows, nb.argmin(axis=1)]
    hi_i = table[rows, nb.argmax(axis=1)]
    F = np.flatnonzero(free)
    y = x.copy()
    try:
        for _ in range(4):
            lo, hi = y[lo_i], y[hi_i]
            num = (1 - bank) * lo + hi
            den = 2 - bank * (1 + lo - hi)
            d_lo = ((1 - bank) * den + bank * num) / den**2
            d_hi = (den - bank * num) / den**2
            J = np.eye(len(x))
            np.add.at(J, (rows, lo_i), -d_lo)
            np.add.at(J, (rows, hi_i), -d_hi)
            r = y - num / den
            y[F] -= np.linalg.solve(J[np.ix_(F, F)], r[F])
    except np.linalg.LinAlgError:
        return x
    if not np.all(np.isfinite(y)) or y.min() < -1e-12 or y.max() > 1 + 1e-12:
        return x
    y = np.clip(y, 0.0, 1.0)
    after = float(np.abs(step(y) - y).max())
    return y if after < before else x


def solve_reachability_thresholds(g: GameGraph, tau, tol=1e-10, max_iters=10**6, targets=None) -> ThresholdMap:
    targets = g.targets if targets is None else frozenset(targets)
    if not targets:
        raise ContractError("reachability thresholds need a non-empty target set")
    return solve_boundary_thresholds(g, {t: 0.0 for t in targets}, tau, tol, max_iters, "reachability")


def classify_bsccs(g: GameGraph):
    """``[(component, winning)]`` for each bottom SCC, winning iff its top parity index is odd."""
    if g.parity is None:
        raise ContractError("parity thresholds need parity indices on every vertex")
    dec = scc_decompose(g)
    return [(c, max(g.parity[v] for v in c) % 2 == 1) for c in dec.bottom_components]


def solve_parity_thresholds(g: GameGraph, tau, tol=1e-10, max_iters=10**6) -> ThresholdMap:
    boundary = {}
    for comp, winning in classify_bsccs(g):
        for v in comp:
            boundary[v] = 0.0 if winning else 1.0
    return solve_boundary_thresholds(g, boundary, tau, tol, max_iters, "parity")
