"""Probabilistic labelled transition systems: data model, text format, validation."""

from __future__ import annotations

import re
from collections.abc import Iterable
from fractions import Fraction

from .dist import Dist, DistributionError

TAU = "tau"
_TOKEN = re.compile(r"[A-Za-z0-9_']+")


class ParseError(ValueError):
    """Syntax or validation error in a text input, with a source position."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


class DivergenceError(ValueError):
    """Raised when a weak-semantics operation is applied to a divergent system."""

    def __init__(self, witness: list[str]):
        self.witness = witness
        super().__init__("divergent pLTS: tau-cycle " + " -> ".join(witness))


class PLTS:
    """A finite pLTS.  Immutable; derived tables are memoised on the instance."""

    def __init__(
        self,
        states: Iterable[str],
        transitions: Iterable[tuple[str, str, Dist]],
        actions: Iterable[str] = (),
    ):
        self.states: tuple[str, ...] = tuple(states)
        if not self.states:
            raise ValueError("a pLTS needs at least one state")
        if len(set(self.states)) != len(self.states):
            raise ValueError("duplicate state names")
        self.index = {s: i for i, s in enumerate(self.states)}
        seen = set()
        trans = []
        for src, act, d in transitions:
            if src not in self.index:
                raise ValueError(f"undeclared state {src!r}")
            for t in d:
                if t not in self.index:
                    raise ValueError(f"undeclared state {t!r}")
            if (src, act, d) not in seen:
                seen.add((src, act, d))
                trans.append((src, act, d))
        self.transitions: tuple[tuple[str, str, Dist], ...] = tuple(trans)
        alphabet = set(actions) | {a for _, a, _ in trans}
        alphabet.discard(TAU)
        self.actions: tuple[str, ...] = tuple(sorted(alphabet))
        self._moves: dict[tuple[str, str], tuple[Dist, ...]] = {}
        for src, act, d in trans:
            self._moves[(src, act)] = self._moves.get((src, act), ()) + (d,)
        self._cache: dict = {}
        self.divergence = _find_tau_cycle(self)

    # structure queries
    def moves(self, s: str, a: str) -> tuple[Dist, ...]:
        return self._moves.get((s, a), ())

    def out(self, s: str) -> list[tuple[str, Dist]]:
        return [(a, d) for src, a, d in self.transitions if src == s]

    def enabled(self, s: str) -> frozenset[str]:
        return frozenset(a for src, a, _ in self.transitions if src == s)

    @property
    def actions_tau(self) -> tuple[str, ...]:
        return self.actions + (TAU,)

    @property
    def has_tau(self) -> bool:
        return any(a == TAU for _, a, _ in self.transitions)

    def is_divergence_free(self) -> bool:
        return self.divergence is None

    def require_divergence_free(self) -> None:
        if self.divergence is not None:
            raise DivergenceError(self.divergence)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PLTS):
            return NotImplemented
        return (
            self.states == other.states
            and set(self.transitions) == set(other.transitions)
            and self.actions == other.actions
        )

    def __hash__(self) -> int:
        return hash((self.states, frozenset(self.transitions), self.actions))

    def __repr__(self) -> str:
        return f"PLTS(states={len(self.states)}, transitions={len(self.transitions)})"


def enabled(plts: PLTS, s: str) -> frozenset[str]:
    return plts.enabled(s)


def refuses(plts: PLTS, dist: Dist, actions: Iterable[str]) -> bool:
    """True iff no support state of ``dist`` enables an action of ``actions`` or tau."""
    actions = frozenset(actions)
    if TAU in actions:
        raise ValueError("refusal sets range over external actions; tau is implicit")
    blocked = actions | {TAU}
    return all(not (plts.enabled(s) & blocked) for s in dist)


def detect_divergence(plts: PLTS) -> list[str] | None:
    return plts.divergence


def _find_tau_cycle(plts: PLTS) -> list[str] | None:
    succ: dict[str, list[str]] = {s: [] for s in plts.states}
    for src, act, d in plts.transitions:
        if act == TAU:
            for t in d:
                if t not in succ[src]:
                    succ[src].append(t)
    for s in succ:
        succ[s].sort(key=plts.index.__getitem__)
    colour = {s: 0 for s in plts.states}  # 0 new, 1 on stack, 2 done
    for root in plts.states:
        if colour[root]:
            continue
        stack = [(root, iter(succ[root]))]
        path = [root]
        colour[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                path.pop()
                colour[node] = 2
            elif colour[nxt] == 1:
                return path[path.index(nxt):] + [nxt]
            elif colour[nxt] == 0:
                colour[nxt] = 1
                path.append(nxt)
                stack.append((nxt, iter(succ[nxt])))
    return None


# text format

def _tokens(line: str):
    """Yield (column, token) pairs; punctuation '->' and ',' are separate tokens."""
    i = 0
    n = len(line)
    while i < n:
        c = line[i]
        if c.isspace():
            i += 1
        elif line.startswith("->", i):
            yield i + 1, "->"
            i += 2
        elif c in ",:":
            yield i + 1, c
            i += 1
        else:
            j = i
            while j < n and not line[j].isspace() and line[j] not in ",:" and not line.startswith("->", j):
                j += 1
            yield i + 1, line[i:j]
            i = j


def parse_plts(text: str) -> PLTS:
    states: list[str] = []
    declared: set[str] = set()
    actions: list[str] = []
    transitions: list[tuple[str, str, Dist]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = list(_tokens(line))
        if not toks:
            continue
        head_col, head = toks[0]
        if head in ("states", "actions") and len(toks) > 1 and toks[1][1] == ":":
            names = toks[2:]
            for col, name in names:
                if not _TOKEN.fullmatch(name):
                    raise ParseError(f"invalid identifier {name!r}", lineno, col)
                if head == "states":
                    if name in declared:
                        raise ParseError(f"duplicate state declaration {name!r}", lineno, col)
                    declared.add(name)
                    states.append(name)
                else:
                    if name == TAU:
                        raise ParseError("'tau' is internal and cannot be declared", lineno, col)
                    actions.append(name)
            continue
        transitions.append(_parse_transition(toks, lineno, declared))
    if not states:
        raise ParseError("missing 'states:' declaration", 1, 1)
    return PLTS(states, transitions, actions)


def _parse_transition(toks, lineno: int, declared: set[str]) -> tuple[str, str, Dist]:
    if len(toks) < 4 or toks[2][1] != "->":
        col = toks[min(2, len(toks) - 1)][0]
        raise ParseError("expected '<src> <action> -> <p> <tgt>, ...'", lineno, col)
    (scol, src), (acol, act) = toks[0], toks[1]
    for col, name in ((scol, src), (acol, act)):
        if not _TOKEN.fullmatch(name):
            raise ParseError(f"invalid identifier {name!r}", lineno, col)
    if src not in declared:
        raise ParseError(f"undeclared state {src!r}", lineno, scol)
    rest = toks[3:]
    groups: list[list] = [[]]
    for tok in rest:
        if tok[1] == ",":
            if not groups[-1]:
                raise ParseError("empty target entry", lineno, tok[0])
            groups.append([])
        else:
            groups[-1].append(tok)
    if not groups[-1]:
        raise ParseError("trailing ','", lineno, rest[-1][0])
    pairs: list[tuple[str, Fraction]] = []
    for group in groups:
        if len(group) == 1:
            # a bare state name carries the whole mass
            (tcol, tgt), wtxt, wcol = group[0], "1", group[0][0]
        elif len(group) == 2:
            (wcol, wtxt), (tcol, tgt) = group
        else:
            raise ParseError("expected '<weight> <state>'", lineno, group[0][0])
        try:
            w = Fraction(wtxt)
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"bad weight {wtxt!r}", lineno, wcol) from None
        if w <= 0 or "." in wtxt:
            raise ParseError(f"weights must be positive num/den rationals, got {wtxt!r}", lineno, wcol)
        if tgt not in declared:
            raise ParseError(f"undeclared state {tgt!r}", lineno, tcol)
        pairs.append((tgt, w))
    total = sum((w for _, w in pairs), Fraction(0))
    if total != 1:
        raise ParseError(f"weights sum to {total}, not 1", lineno, rest[0][0])
    try:
        return src, act, Dist(pairs)
    except DistributionError as exc:
        raise ParseError(str(exc), lineno, rest[0][0]) from None


def serialize_plts(plts: PLTS) -> str:
    lines = ["states: " + " ".join(plts.states)]
    if plts.actions:
        lines.append("actions: " + " ".join(plts.actions))
    for src, act, d in plts.transitions:
        body = ", ".join(f"{w} {t}" for t, w in d.items())
        lines.append(f"{src} {act} -> {body}")
    return "\n".join(lines) + "\n"


def load_plts(path: str) -> PLTS:
    with open(path, encoding="utf-8") as fh:
        return parse_plts(fh.read())
