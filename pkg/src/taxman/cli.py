"""Command-line front end.

Exit codes: 0 success, 2 input or parse error, 3 unsupported parameter or
infeasible request, 4 numerical failure.  Machine-readable output goes to
stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from fractions import Fraction

from . import __version__
from .core import Budgets, Mechanism, parse_game, scc_decompose, to_fraction
from .errors import (
    ContractError,
    ConvergenceError,
    GameFormatError,
    GameValidationError,
    InsufficientBudgetError,
    NumericalError,
    StrategyError,
    UnsupportedParameterError,
)
from .etr import export_etr_constraints, selection_from_thresholds
from .mpvalue import bias, curve_csv, solve_general_mp_thresholds, value_curve
from .rtb import solve_mp
from .sim import TIE_RULES, make_adversary, simulate, trace_csv
from .strategy import (
    strategy_from_dict,
    synth_max_mp_strategy,
    synth_min_mp_strategy,
    synth_qual_reach_strategy,
)
from .thresholds import solve_parity_thresholds, solve_reachability_thresholds

EXIT_OK, EXIT_INPUT, EXIT_UNSUPPORTED, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


# -- flag parsing -------------------------------------------------------------

def _rational(text):
    try:
        return to_fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _grid(text):
    return [_rational(t) for t in text.split(",") if t.strip()]


def _check(cond, message):
    if not cond:
        raise UsageError(message)


def _validate_flags(a):
    if getattr(a, "tau", None) is not None:
        _check(0 <= a.tau <= 1, f"--tau must lie in [0, 1], got {a.tau}")
    if getattr(a, "ratio", None) is not None:
        _check(0 < a.ratio < 1, f"--ratio must lie in (0, 1), got {a.ratio}")
    if getattr(a, "epsilon", None) is not None:
        _check(a.epsilon > 0, f"--epsilon must be positive, got {a.epsilon}")
    if getattr(a, "tol", None) is not None:
        _check(a.tol > 0, f"--tol must be positive, got {a.tol}")
    if getattr(a, "max_iters", None) is not None:
        _check(a.max_iters > 0, f"--max-iters must be positive, got {a.max_iters}")
    if getattr(a, "steps", None) is not None:
        _check(a.steps > 0, f"--steps must be a positive integer, got {a.steps}")
    if getattr(a, "episodes", None) is not None:
        _check(a.episodes > 0, f"--episodes must be positive, got {a.episodes}")
    if getattr(a, "budget1", None) is not None:
        _check(0 < a.budget1 < 1, f"--budget1 must lie in (0, 1), got {a.budget1}")


def _read_game(path):
    text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    return parse_game(text)


def _emit(doc):
    sys.stdout.write(json.dumps(doc, indent=2, sort_keys=False) + "\n")


# -- subcommands ----------------------------------------------------------------

def cmd_validate(a):
    g = _read_game(a.game)
    dec = scc_decompose(g)
    _emit({
        "vertices": len(g),
        "edges": len(g.edges),
        "targets": len(g.targets or ()),
        "parity": g.parity is not None,
        "components": len(dec.components),
        "bottom_components": len(dec.bottom_components),
        "strongly_connected": len(dec.components) == 1,
    })


def cmd_solve(a):
    g = _read_game(a.game)
    obj = a.objective
    if obj == "reach":
        doc = solve_reachability_thresholds(g, a.tau, a.tol, a.max_iters).to_dict()
    elif obj == "parity":
        doc = solve_parity_thresholds(g, a.tau, a.tol, a.max_iters).to_dict()
    elif obj == "mp-value":
        if a.ratio is None:
            raise UsageError("--ratio is required for mp-value")
        p = bias(a.tau, a.ratio)
        sol = solve_mp(g, p, a.tol)
        doc = {"tau": str(a.tau), "ratio": str(a.ratio), "bias": f"{float(p):.12g}",
               "value": f"{sol.mp_value:.12g}"}
        doc.update(sol.to_dict())
    else:
        doc = solve_general_mp_thresholds(g, a.tau, a.tol).to_dict()
        if g.is_strongly_connected():
            doc["threshold"] = doc["components"][0].get("ratio")
    if a.format == "csv":
        if "th" not in doc:
            raise UsageError("csv output is only available for threshold maps")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["vertex", "th"])
        w.writerows(doc["th"].items())
        sys.stdout.write(buf.getvalue())
    else:
        _emit(doc)


def cmd_curve(a):
    g = _read_game(a.game)
    taus = a.taus if a.taus else [Fraction(k, a.points - 1) for k in range(a.points)]
    _check(taus == sorted(taus) and all(0 <= t <= 1 for t in taus), "--taus must be sorted values in [0, 1]")
    sys.stdout.write(curve_csv(value_curve(g, a.ratio, taus, a.tol)))


def _synth(g, a):
    if a.kind == "reach":
        targets = sorted(g.targets or (), key=g.index)
        target = a.target or (targets[0] if targets else None)
        if target is None:
            raise UsageError("reach synthesis needs --target or targets in the game file")
        return synth_qual_reach_strategy(g, target, a.tau, a.epsilon)
    if a.ratio is None:
        raise UsageError("--ratio is required for mean-payoff synthesis")
    fn = synth_max_mp_strategy if a.kind == "max-mp" else synth_min_mp_strategy
    return fn(g, a.tau, a.ratio, float(a.epsilon), a.tol, a.initial_ratio)


def cmd_synth(a):
    g = _read_game(a.game)
    doc = _synth(g, a).to_dict()
    text = json.dumps(doc, indent=2) + "\n"
    if a.output:
        with open(a.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_player(spec, g):
    if os.path.isfile(spec):
        with open(spec, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise GameFormatError(f"strategy file {spec}: {exc.msg}", exc.lineno, exc.colno) from None
        return strategy_from_dict(doc, g)
    return make_adversary(spec)


def cmd_simulate(a):
    g = _read_game(a.game)
    budgets = Budgets(a.budget1, 1 - a.budget1)
    reports = []
    for ep in range(a.episodes):
        s1, s2 = _load_player(a.p1, g), _load_player(a.p2, g)
        t0 = time.perf_counter()
        trace, rep = simulate(g, Mechanism(a.tau), budgets, s1, s2, a.tie_break, a.steps, a.seed,
                              episode=ep, start=a.start, strict=a.strict, stop_at_target=a.stop_at_target)
        print(f"episode {ep}: {time.perf_counter() - t0:.3f}s", file=sys.stderr)
        doc = rep.to_dict()
        doc["episode"] = ep
        reports.append(doc)
        if a.trace:
            path = a.trace if a.episodes == 1 else f"{a.trace}.{ep}"
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(trace_csv(trace, exact=a.exact))
    _emit(reports[0] if a.episodes == 1 else reports)


def cmd_export_etr(a):
    g = _read_game(a.game)
    th = solve_reachability_thresholds(g, a.tau, a.tol, a.max_iters)
    sel = selection_from_thresholds(g, th.th)
    sys.stdout.write(export_etr_constraints(g, a.tau, a.vertex, sel))


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="taxman", description="Taxman bidding games: solve, synthesize, simulate.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, tau=True, tau_required=True):
        p.add_argument("game", help="game file, or - for stdin")
        if tau:
            p.add_argument("--tau", type=_rational, required=tau_required,
                           help="share of the winning bid paid to the loser (1 Richman, 0 poorman)")
        p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--max-iters", type=int, default=10**6)

    p = sub.add_parser("validate", help="parse a game file and report its structure")
    p.add_argument("game")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="thresholds or mean-payoff values")
    common(p)
    p.add_argument("--objective", choices=["reach", "parity", "mp-value", "mp-threshold"], required=True)
    p.add_argument("--ratio", type=_rational)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("curve", help="mean-payoff value as a function of tau (CSV)")
    common(p, tau=False)
    p.add_argument("--ratio", type=_rational, required=True)
    p.add_argument("--taus", type=_grid, help="comma-separated sorted tau values")
    p.add_argument("--points", type=int, default=11, help="evenly spaced grid size when --taus is absent")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("synth", help="synthesize a bidding strategy (JSON)")
    common(p)
    p.add_argument("--kind", choices=["max-mp", "min-mp", "reach"], required=True)
    p.add_argument("--ratio", type=_rational, help="target ratio of the strategy owner")
    p.add_argument("--epsilon", type=_rational, default=Fraction(1, 10))
    p.add_argument("--initial-ratio", type=_rational, help="actual starting ratio, fixes the walk start x0")
    p.add_argument("--target", help="target vertex for reach synthesis")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", help="play strategies against each other and audit the play")
    common(p)
    p.add_argument("--p1", required=True, help="strategy file or catalog name for player 1")
    p.add_argument("--p2", required=True, help="strategy file or catalog name for player 2")
    p.add_argument("--budget1", type=_rational, default=Fraction(1, 2), help="player 1's initial ratio")
    p.add_argument("--steps", type=int, default=10**5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--episodes", type=int, default=1)
    p.add_argument("--tie-break", choices=TIE_RULES, default="player1")
    p.add_argument("--start", help="start vertex (default: first vertex)")
    p.add_argument("--strict", action="store_true", help="abort on over-budget bids instead of clamping")
    p.add_argument("--stop-at-target", action="store_true")
    p.add_argument("--trace", help="write the per-round trace CSV here")
    p.add_argument("--exact", action="store_true", help="add exact p/q columns to the trace")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("export-etr", help="SMT-LIB query Th(vertex) >= 1/2")
    common(p)
    p.add_argument("--vertex", required=True)
    p.set_defaults(func=cmd_export_etr)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        _validate_flags(a)
        a.func(a)
        return EXIT_OK
    except (UsageError, GameFormatError, GameValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (UnsupportedParameterError, InsufficientBudgetError, ContractError, StrategyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (NumericalError, ConvergenceError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
