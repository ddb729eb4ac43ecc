"""SMT-LIB 2 export of the threshold query ``Th(v0) >= 1/2`` over the reals.

The best/worst neighbour of every vertex is supplied by the caller (usually
the numeric solution) instead of being guessed, which keeps the instance
quantifier- and disjunction-free.  A small reader for the emitted subset is
included so instances can be checked by substitution.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .core import GameGraph, to_fraction
from .errors import ContractError, GameFormatError


def _sym(v):
    if "|" in v or "\\" in v:
        raise ContractError(f"vertex id {v!r} cannot be written as an SMT-LIB symbol")
    return f"|x_{v}|"


def _num(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator) if q >= 0 else f"(- {-q.numerator})"
    body = f"(/ {abs(q.numerator)} {q.denominator})"
    return body if q >= 0 else f"(- {body})"


def selection_from_thresholds(g: GameGraph, th: dict):
    """Best (``v+``) and worst (``v-``) neighbour of each vertex under ``th``."""
    plus = {v: max(g.succ(v), key=lambda u: (th[u], -g.index(u))) for v in g.vertices}
    minus = {v: min(g.succ(v), key=lambda u: (th[u], g.index(u))) for v in g.vertices}
    return {"plus": plus, "minus": minus}


def export_etr_constraints(g: GameGraph, tau, v0, selection, targets=None) -> str:
    targets = g.targets if targets is None else frozenset(targets)
    if not targets:
        raise ContractError("the threshold query needs a target set")
    if v0 not in g.weights:
        raise ContractError(f"unknown vertex {v0!r}")
    tau = to_fraction(tau)
    bank = 1 - tau
    reach = g.reaching(targets)
    interior = [v for v in g.vertices if v not in targets and v in reach]
    for v in interior:
        for key in ("plus", "minus"):
            if v not in selection.get(key, {}):
                raise ContractError(f"selection has no {key!r} neighbour for vertex {v!r}")
            if selection[key][v] not in g.succ(v):
                raise ContractError(f"selected {key!r} neighbour of {v!r} is not a successor")

    out = [
        f"; threshold query Th({v0}) >= 1/2, taxman tau = {tau} (winner pays tau to the loser)",
        "(set-logic QF_NRA)",
    ]
    out += [f"(declare-fun {_sym(v)} () Real)" for v in g.vertices]
    for v in g.vertices:
        if v in targets:
            out.append(f"(assert (= {_sym(v)} 0))")
        elif v not in reach:
            out.append(f"(assert (= {_sym(v)} 1))")
    a = _num(bank)
    for v in interior:
        xp, xm = _sym(selection["plus"][v]), _sym(selection["minus"][v])
        for u in g.succ(v):
            out.append(f"(assert (<= {xm} {_sym(u)} {xp}))")
        out.append(
            f"(assert (= (* {_sym(v)} (- 2 (* {a} (+ 1 (- {xm} {xp}))))) (- (+ {xm} {xp}) (* {a} {xm}))))"
        )
    out.append(f"(assert (>= {_sym(v0)} (/ 1 2)))")
    out.append("(check-sat)")
    return "\n".join(out) + "\n"


# -- reader for the emitted subset ----------------------------------------

_TOKEN = re.compile(r"\s*(?:(;[^\n]*)|(\()|(\))|(\|[^|]*\|)|([^\s()|;]+))")


def _tokens(text):
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise GameFormatError(f"unexpected character at offset {pos}")
            return
        pos = m.end()
        if m.group(1):
            continue
        yield m.group(2) or m.group(3) or m.group(4) or m.group(5)


def read_sexprs(text):
    stack = [[]]
    for tok in _tokens(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise GameFormatError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise GameFormatError("unbalanced '('")
    return stack[0]


def parse_smtlib(text):
    """``(logic, variables, assertions)`` of an emitted document."""
    logic, variables, asserts = None, [], []
    for form in read_sexprs(text):
        head = form[0]
        if head == "set-logic":
            logic = form[1]
        elif head == "declare-fun":
            variables.append(form[1])
        elif head == "assert":
            asserts.append(form[1])
        elif head != "check-sat":
            raise GameFormatError(f"unsupported command {head!r}")
    return logic, variables, asserts


def _eval(term, env):
    if isinstance(term, str):
        if term in env:
            return env[term]
        return Fraction(term)
    op, args = term[0], [_eval(t, env) for t in term[1:]]
    if op == "+":
        return sum(args[1:], args[0])
    if op == "-":
        return -args[0] if len(args) == 1 else args[0] - sum(args[2:], args[1])
    if op == "*":
        out = args[0]
        for x in args[1:]:
            out = out * x
        return out
    if op == "/":
        out = args[0]
        for x in args[1:]:
            out = out / x
        return out
    raise GameFormatError(f"unsupported operator {op!r}")


def check_assignment(text, values):
    """Substitute ``values`` (vertex -> number) and measure every assertion.

    Returns ``(max equality residual, max inequality violation)``.
    """
    _, variables, asserts = parse_smtlib(text)
    env = {}
    for sym in variables:
        name = sym.strip("|")[2:]
        env[sym] = values[name]
    eq_res, ineq_viol = 0.0, 0.0
    for a in asserts:
        op, args = a[0], [_eval(t, env) for t in a[1:]]
        if op == "=":
            eq_res = max(eq_res, max(float(abs(x - args[0])) for x in args[1:]))
        elif op in ("<=", ">="):
            seq = args if op == "<=" else args[::-1]
            for lo, hi in zip(seq, seq[1:]):
                ineq_viol = max(ineq_viol, float(lo - hi))
        else:
            raise GameFormatError(f"unsupported relation {op!r}")
    return eq_res, ineq_viol


def find_bound_conflict(text):
    """Detect contradictory constant bounds on a single variable.

    Returns the offending variable, or None when no such conflict exists
    (which does not prove satisfiability).
    """
    _, variables, asserts = parse_smtlib(text)
    lo = {v: None for v in variables}
    hi = {v: None for v in variables}

    def const(t):
        try:
            return _eval(t, {})
        except (ValueError, ZeroDivisionError, KeyError, GameFormatError):
            return None

    for a in asserts:
        if len(a) != 3 or not isinstance(a[1], str) or a[1] not in lo:
            continue
        c = const(a[2])
        if c is None:
            continue
        x = a[1]
        if a[0] in ("=", ">="):
            lo[x] = c if lo[x] is None else max(lo[x], c)
        if a[0] in ("=", "<="):
            hi[x] = c if hi[x] is None else min(hi[x], c)
    for v in variables:
        if lo[v] is not None and hi[v] is not None and lo[v] > hi[v]:
            return v.strip("|")[2:]
    return None
