"""Game graphs, bidding mechanisms and budget arithmetic.

Conventions used throughout the package: Player 1 (Max) is the reachability
player / payoff maximiser, Player 2 (Min) the opponent.  The taxman parameter
``tau`` is the fraction of the winning bid paid to the *loser*; the remaining
``1 - tau`` goes to the bank.  Hence ``tau == 1`` is Richman bidding and
``tau == 0`` is poorman bidding.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import ContractError, GameFormatError, GameValidationError, IllegalBidError

PLAYER1 = 1
PLAYER2 = 2


def to_fraction(value) -> Fraction:
    """Exact conversion of ints, Fractions, decimal strings and floats."""
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # shortest repr, so 0.1 means 1/10 and not the binary expansion
        return Fraction(float.__repr__(value))
    return Fraction(value)


@dataclass(frozen=True)
class GameGraph:
    """Weighted directed graph with optional parity indices and targets.

    ``vertices`` fixes a total order on vertex ids; every deterministic
    tie-break in the package uses that order.
    """

    vertices: tuple
    weights: Mapping[str, Fraction]
    edges: frozenset
    parity: Mapping[str, int] | None = None
    targets: frozenset | None = None
    _succ: dict = field(init=False, repr=False, compare=False)
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vertices = tuple(self.vertices)
        object.__setattr__(self, "vertices", vertices)
        index = {}
        for i, v in enumerate(vertices):
            if not isinstance(v, str) or not v:
                raise GameValidationError("vertex id", f"vertex ids must be non-empty strings, got {v!r}")
            if v in index:
                raise GameValidationError("duplicate vertex", f"vertex {v!r} declared twice", v)
            index[v] = i
        weights = {}
        for v in vertices:
            if v not in self.weights:
                raise GameValidationError("missing weight", f"vertex {v!r} has no weight", v)
            weights[v] = to_fraction(self.weights[v])
        extra = set(self.weights) - set(index)
        if extra:
            raise GameValidationError("unknown vertex", f"weights given for undeclared vertices {sorted(extra)}")
        object.__setattr__(self, "weights", weights)

        edges = frozenset((a, b) for a, b in self.edges)
        succ = {v: [] for v in vertices}
        for a, b in edges:
            for end in (a, b):
                if end not in index:
                    raise GameValidationError("unknown vertex", f"edge ({a!r}, {b!r}) references undeclared vertex {end!r}", end)
            succ[a].append(b)
        for v in vertices:
            if not succ[v]:
                raise GameValidationError("sink vertex", f"vertex {v!r} has no outgoing edge", v)
            succ[v] = tuple(sorted(succ[v], key=index.__getitem__))
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "_succ", succ)
        object.__setattr__(self, "_index", index)

        if self.parity is not None:
            parity = {}
            for v in vertices:
                if v not in self.parity:
                    raise GameValidationError("missing parity", f"vertex {v!r} has no parity index", v)
                d = self.parity[v]
                if isinstance(d, bool) or not isinstance(d, int) or d < 1:
                    raise GameValidationError("parity index", f"parity of {v!r} must be a positive integer, got {d!r}", v)
                parity[v] = d
            object.__setattr__(self, "parity", parity)
        if self.targets is not None:
            targets = frozenset(self.targets)
            for t in targets:
                if t not in index:
                    raise GameValidationError("unknown vertex", f"target {t!r} is not a vertex", t)
            object.__setattr__(self, "targets", targets)

    def __hash__(self):
        return hash((self.vertices, self.edges))

    # -- structure -----------------------------------------------------

    def __len__(self):
        return len(self.vertices)

    def index(self, v) -> int:
        return self._index[v]

    def succ(self, v) -> tuple:
        """Neighbours of ``v`` ordered by vertex index."""
        return self._succ[v]

    def reaching(self, goal: Iterable[str]) -> set:
        """Vertices with a path (possibly empty) to some vertex of ``goal``."""
        pred = {v: [] for v in self.vertices}
        for a, b in self.edges:
            pred[b].append(a)
        seen = set(goal)
        stack = list(seen)
        while stack:
            u = stack.pop()
            for a in pred[u]:
                if a not in seen:
                    seen.add(a)
                    stack.append(a)
        return seen

    def is_strongly_connected(self) -> bool:
        return len(scc_decompose(self).components) == 1

    # -- derived games -------------------------------------------------

    def with_weights(self, weights: Mapping[str, Fraction]) -> "GameGraph":
        return GameGraph(self.vertices, dict(weights), self.edges, self.parity, self.targets)

    def negated(self) -> "GameGraph":
        return self.with_weights({v: -w for v, w in self.weights.items()})

    def shifted(self, c) -> "GameGraph":
        c = to_fraction(c)
        return self.with_weights({v: w + c for v, w in self.weights.items()})

    def subgame(self, keep: Iterable[str]) -> "GameGraph":
        """Induced subgraph on ``keep``; every kept vertex must keep a successor."""
        keep = set(keep)
        vs = tuple(v for v in self.vertices if v in keep)
        edges = frozenset((a, b) for a, b in self.edges if a in keep and b in keep)
        parity = None if self.parity is None else {v: self.parity[v] for v in vs}
        targets = None if self.targets is None else frozenset(self.targets & keep)
        return GameGraph(vs, {v: self.weights[v] for v in vs}, edges, parity, targets)

    def to_dict(self) -> dict:
        out = {"vertices": [], "edges": [[a, b] for a, b in sorted(self.edges, key=lambda e: (self.index(e[0]), self.index(e[1])))]}
        for v in self.vertices:
            w = self.weights[v]
            entry = {"id": v, "weight": w.numerator if w.denominator == 1 else f"{w.numerator}/{w.denominator}"}
            if self.parity is not None:
                entry["parity"] = self.parity[v]
            out["vertices"].append(entry)
        if self.targets is not None:
            out["targets"] = [v for v in self.vertices if v in self.targets]
        return out


_WEIGHT_RE = re.compile(r"^\s*[+-]?\d+\s*(/\s*\d+\s*)?$")


def _locate(text, needle):
    """1-based (line, column) of the first occurrence of ``needle`` in ``text``."""
    pos = text.find(needle)
    if pos < 0:
        return None, None
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def parse_weight(raw, text="") -> Fraction:
    if isinstance(raw, bool) or not isinstance(raw, (int, str)):
        line, col = _locate(text, json.dumps(raw)) if text else (None, None)
        raise GameFormatError(f"weight must be an integer or a 'p/q' string, got {raw!r}", line, col)
    if isinstance(raw, int):
        return Fraction(raw)
    if not _WEIGHT_RE.match(raw):
        line, col = _locate(text, json.dumps(raw)) if text else (None, None)
        raise GameFormatError(f"malformed weight {raw!r}", line, col)
    try:
        return Fraction(raw.replace(" ", ""))
    except ZeroDivisionError:
        line, col = _locate(text, json.dumps(raw)) if text else (None, None)
        raise GameFormatError(f"weight {raw!r} has a zero denominator", line, col) from None


def parse_game(text: str) -> GameGraph:
    """Parse and validate a game document (JSON, see README for the schema)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameFormatError(f"syntax error: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise GameFormatError("top level must be an object")
    unknown = set(doc) - {"vertices", "edges", "targets"}
    if unknown:
        raise GameFormatError(f"unknown top-level keys {sorted(unknown)}")
    if not isinstance(doc.get("vertices"), list) or not isinstance(doc.get("edges"), list):
        raise GameFormatError("'vertices' and 'edges' must be arrays")

    ids, weights, parity = [], {}, {}
    for item in doc["vertices"]:
        if not isinstance(item, dict) or "id" not in item or "weight" not in item:
            raise GameFormatError(f"vertex entries need 'id' and 'weight', got {item!r}")
        vid = item["id"]
        if not isinstance(vid, str):
            raise GameFormatError(f"vertex id must be a string, got {vid!r}")
        if vid in weights:
            raise GameValidationError("duplicate vertex", f"vertex {vid!r} declared twice", vid)
        ids.append(vid)
        weights[vid] = parse_weight(item["weight"], text)
        if "parity" in item:
            parity[vid] = item["parity"]
    if parity and len(parity) != len(ids):
        missing = [v for v in ids if v not in parity][0]
        raise GameValidationError("missing parity", f"vertex {missing!r} has no parity index", missing)

    edges = []
    for e in doc["edges"]:
        if not isinstance(e, list) or len(e) != 2 or not all(isinstance(x, str) for x in e):
            raise GameFormatError(f"edges must be [from, to] pairs of ids, got {e!r}")
        edges.append(tuple(e))
    targets = doc.get("targets")
    if targets is not None and (not isinstance(targets, list) or not all(isinstance(t, str) for t in targets)):
        raise GameFormatError("'targets' must be an array of ids")
    return GameGraph(tuple(ids), weights, frozenset(edges), parity or None,
                     None if targets is None else frozenset(targets))


def game_from_edges(weights: Mapping[str, object], edges, parity=None, targets=None) -> GameGraph:
    """Convenience constructor; vertex order follows ``weights``."""
    return GameGraph(tuple(weights), {v: to_fraction(w) for v, w in weights.items()},
                     frozenset(map(tuple, edges)), parity,
                     None if targets is None else frozenset(targets))


# -- strongly connected components -------------------------------------

@dataclass(frozen=True)
class SccDecomposition:
    components: tuple          # tuple of frozensets, sinks of the condensation first
    is_bottom: tuple
    condensation_edges: frozenset
    component_of: Mapping[str, int]

    @property
    def bottom_components(self):
        return [c for c, b in zip(self.components, self.is_bottom) if b]


def strongly_connected_components(nodes, succ):
    """Tarjan's algorithm, iterative.  ``succ(v)`` yields successors of ``v``.

    Components come out in reverse topological order of the condensation
    (bottom components before the components that reach them).
    """
    index, low = {}, {}
    on_stack = set()
    stack, comps = [], []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        work = [(root, iter(succ(root)))]
        while work:
            v, it = work[-1]
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ(w))))
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            else:
                work.pop()
                if work:
                    parent = work[-1][0]
                    low[parent] = min(low[parent], low[v])
                if low[v] == index[v]:
                    comp = []
                    while True:
                        w = stack.pop()
                        on_stack.discard(w)
                        comp.append(w)
                        if w == v:
                            break
                    comps.append(comp)
    return comps


def scc_decompose(g: GameGraph) -> SccDecomposition:
    comps = [frozenset(c) for c in strongly_connected_components(g.vertices, g.succ)]
    component_of = {v: k for k, c in enumerate(comps) for v in c}
    cedges = frozenset(
        (component_of[a], component_of[b]) for a, b in g.edges if component_of[a] != component_of[b]
    )
    leaving = {a for a, _ in cedges}
    bottom = tuple(k not in leaving for k in range(len(comps)))
    return SccDecomposition(tuple(comps), bottom, cedges, component_of)


# -- bidding mechanism ---------------------------------------------------

@dataclass(frozen=True)
class Mechanism:
    tau: Fraction

    def __post_init__(self):
        tau = to_fraction(self.tau)
        if not 0 <= tau <= 1:
            raise ContractError(f"taxman parameter must lie in [0, 1], got {tau}")
        object.__setattr__(self, "tau", tau)

    @classmethod
    def richman(cls):
        return cls(Fraction(1))

    @classmethod
    def poorman(cls):
        return cls(Fraction(0))


@dataclass(frozen=True)
class Budgets:
    b1: Fraction
    b2: Fraction

    def __post_init__(self):
        b1, b2 = to_fraction(self.b1), to_fraction(self.b2)
        if b1 < 0 or b2 < 0 or b1 + b2 <= 0:
            raise ContractError(f"budgets must be non-negative with positive sum, got ({b1}, {b2})")
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "b2", b2)

    @property
    def total(self) -> Fraction:
        return self.b1 + self.b2

    def ratio(self, player=PLAYER1) -> Fraction:
        own = self.b1 if player == PLAYER1 else self.b2
        return own / self.total

    def of(self, player) -> Fraction:
        return self.b1 if player == PLAYER1 else self.b2

    def normalized(self) -> "Budgets":
        t = self.total
        return Budgets(self.b1 / t, self.b2 / t)


def apply_bidding_outcome(bud: Budgets, mech: Mechanism, winner: int, bid) -> Budgets:
    """Budgets after ``winner`` pays ``bid``: tau*bid to the loser, the rest to the bank."""
    bid = to_fraction(bid)
    if winner not in (PLAYER1, PLAYER2):
        raise ContractError(f"winner must be 1 or 2, got {winner!r}")
    if bid < 0:
        raise ContractError(f"bids are non-negative, got {bid}")
    if bid > bud.of(winner):
        raise IllegalBidError(winner, bid, bud.of(winner))
    if winner == PLAYER1:
        return Budgets(bud.b1 - bid, bud.b2 + mech.tau * bid)
    return Budgets(bud.b1 + mech.tau * bid, bud.b2 - bid)
