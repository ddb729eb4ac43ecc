"""Mean-payoff taxman values through the coin-bias map and their thresholds."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction

from .core import GameGraph, scc_decompose, to_fraction
from .errors import ContractError, ConvergenceError
from .rtb import solve_mp
from .thresholds import ThresholdMap, solve_boundary_thresholds


def _bias(tau, ratio):
    return (ratio + tau * (1 - ratio)) / (1 + tau)


def bias(tau, ratio):
    """Coin bias whose random-turn value equals the taxman value at ``ratio``.

    Exact for Fraction arguments; F(1, r) = 1/2 and F(0, r) = r.
    """
    if not 0 <= tau <= 1:
        raise ContractError(f"tau must lie in [0, 1], got {tau}")
    if not 0 < ratio < 1:
        raise ContractError(f"ratio must lie in (0, 1), got {ratio}")
    return _bias(tau, ratio)


@dataclass(frozen=True)
class BiasParams:
    tau: Fraction
    ratio: float
    bias: float

    @classmethod
    def of(cls, tau, ratio):
        tau = to_fraction(tau)
        return cls(tau, ratio, bias(tau, ratio))


def mp_value_taxman(g: GameGraph, tau, ratio, tol=1e-10) -> float:
    """Mean-payoff value of a strongly connected taxman game at Max ratio ``ratio``."""
    return solve_mp(g, bias(to_fraction(tau), to_fraction(ratio)), tol).mp_value


def value_curve(g: GameGraph, ratio, tau_grid, tol=1e-10):
    """``[(tau, value)]`` for each tau of a non-empty, sorted grid."""
    taus = [to_fraction(t) for t in tau_grid]
    if not taus:
        raise ContractError("tau grid is empty")
    if taus != sorted(taus):
        raise ContractError("tau grid must be sorted")
    return [(t, mp_value_taxman(g, t, ratio, tol)) for t in taus]


def curve_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tau", "value"])
    for tau, value in rows:
        w.writerow([f"{float(tau):.12g}", f"{value:.12g}"])
    return buf.getvalue()


@dataclass(frozen=True)
class DegenerateThreshold:
    """Richman case: the value does not depend on the ratio; ``sign`` is its sign."""

    sign: int
    value: float


def threshold_ratio_scc(g: GameGraph, tau, tol=1e-10, max_iters=200):
    """Ratio at which the taxman value of a strongly connected game crosses 0.

    Bisection on the ratio; returns the midpoint of the final bracket, so a
    flat stretch of zero values yields some point of that stretch.
    """
    tau = to_fraction(tau)
    if not 0 <= tau <= 1:
        raise ContractError(f"tau must lie in [0, 1], got {tau}")
    if tau == 1:
        value = solve_mp(g, Fraction(1, 2), tol).mp_value
        sign = 0 if abs(value) <= tol else (1 if value > 0 else -1)
        return DegenerateThreshold(sign, value)
    value_at = lambda r: solve_mp(g, _bias(tau, r), tol).mp_value
    if value_at(Fraction(0)) > tol:
        return 0.0
    if value_at(Fraction(1)) < -tol:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(max_iters):
        mid = (lo + hi) / 2
        if mid in (lo, hi):
            break
        if value_at(to_fraction(mid)) < 0:
            lo = mid
        else:
            hi = mid
    if hi - lo > 1e-12:
        raise ConvergenceError("bisection did not close the bracket", hi - lo, max_iters)
    return (lo + hi) / 2


@dataclass(frozen=True)
class MpThresholdResult:
    components: tuple      # ((vertices...), ratio-or-DegenerateThreshold) per bottom SCC
    th: ThresholdMap | None
    degenerate: bool

    def to_dict(self) -> dict:
        comps = []
        for vs, r in self.components:
            if isinstance(r, DegenerateThreshold):
                comps.append({"vertices": list(vs), "degenerate": True, "sign": r.sign, "value": r.value})
            else:
                comps.append({"vertices": list(vs), "ratio": f"{r:.12g}"})
        out = {"objective": "mean-payoff", "degenerate": self.degenerate, "components": comps}
        if self.th is not None:
            out.update(self.th.to_dict())
        return out


def solve_general_mp_thresholds(g: GameGraph, tau, tol=1e-10) -> MpThresholdResult:
    """Per-BSCC critical ratios, then the generalized reachability fixed point."""
    tau = to_fraction(tau)
    dec = scc_decompose(g)
    comps = []
    boundary = {}
    complete = True
    for comp in dec.bottom_components:
        vs = tuple(v for v in g.vertices if v in comp)
        r = threshold_ratio_scc(g.subgame(vs), tau, tol)
        comps.append((vs, r))
        if isinstance(r, DegenerateThreshold):
            if r.sign == 0:
                complete = False
                continue
            r = 0.0 if r.sign > 0 else 1.0
        for v in vs:
            boundary[v] = r
    th = solve_boundary_thresholds(g, boundary, tau, tol, objective="mean-payoff") if complete else None
    return MpThresholdResult(tuple(comps), th, tau == 1)
