"""Concrete syntax of pMu formulae and equation systems.

    true  false  phi /\\ psi  phi \\/ psi  and(...)  or(...)  not phi
    <a>phi  [a]phi  down phi  ref{a,b}  X  mu X. phi  nu X. phi
    oplus(phi, psi)   oplus(1/2*phi, 1/2*psi)   1/2*phi (+) 1/2*psi

Prefix operators bind tightest, then weights and ``(+)``, then ``/\\``, then
``\\/``; a fixpoint body extends as far right as possible.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from ..plts import TAU, ParseError
from .formula import (
    FALSE,
    TRUE,
    Box,
    Conj,
    Diamond,
    Disj,
    Down,
    Formula,
    Mu,
    Neg,
    Nu,
    OPlus,
    OPlusW,
    Ref,
    Var,
    _Fix,
    check_polarity,
    walk,
)

KEYWORDS = {"true", "false", "not", "down", "ref", "and", "or", "oplus", "mu", "nu"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<oplus>\(\+\))
  | (?P<and>/\\)
  | (?P<or>\\/)
  | (?P<num>\d+/\d+|\d+(?![A-Za-z_']))
  | (?P<name>[A-Za-z0-9_']+)
  | (?P<punct>[()<>\[\]{},*.=])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str, line: int = 1) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos + 1)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), line, pos + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, len(text) + 1))
    return toks


class _Parser:
    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        raise ParseError(msg, tok.line, tok.col)

    def expect(self, text: str) -> _Tok:
        t = self.next()
        if t.text != text:
            self.error(f"expected {text!r}, found {t.text or 'end of input'!r}", t)
        return t

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind in ("punct", "name", "and", "or", "oplus")

    # grammar

    def formula(self) -> Formula:
        t = self.peek()
        if t.kind == "name" and t.text in ("mu", "nu"):
            return self.fix()
        return self.disj()

    def fix(self) -> Formula:
        kw = self.next()
        var = self.next()
        if var.kind != "name" or var.text in KEYWORDS or not (var.text[0].isalpha() or var.text[0] == "_"):
            self.error("expected a variable name after fixpoint binder", var)
        self.expect(".")
        body = self.formula()
        return (Mu if kw.text == "mu" else Nu)(var.text, body)

    def disj(self) -> Formula:
        items = [self.conj()]
        while self.peek().kind == "or":
            self.next()
            items.append(self.conj())
        return items[0] if len(items) == 1 else Disj(items)

    def conj(self) -> Formula:
        items = [self.oplus()]
        while self.peek().kind == "and":
            self.next()
            items.append(self.oplus())
        return items[0] if len(items) == 1 else Conj(items)

    def oplus(self) -> Formula:
        start = self.peek()
        terms = [self.wterm()]
        while self.peek().kind == "oplus":
            self.next()
            terms.append(self.wterm())
        return self._choice(terms, start)

    def _choice(self, terms, tok) -> Formula:
        weighted = [w is not None for w, _ in terms]
        if any(weighted) and not all(weighted):
            self.error("cannot mix weighted and unweighted oplus arguments", tok)
        if all(weighted) and terms:
            try:
                return OPlusW(terms)
            except ValueError as exc:
                self.error(str(exc), tok)
        if len(terms) == 1:
            return terms[0][1]
        return OPlus(f for _, f in terms)

    def wterm(self):
        t = self.peek()
        if t.kind == "num":
            self.next()
            self.expect("*")
            return Fraction(t.text), self.unary()
        return None, self.unary()

    def unary(self) -> Formula:
        t = self.peek()
        if t.kind == "name" and t.text == "not":
            self.next()
            return Neg(self.unary())
        if t.kind == "name" and t.text == "down":
            self.next()
            return Down(self.unary())
        if t.kind == "name" and t.text in ("mu", "nu"):
            return self.fix()
        if t.text in ("<", "[") and t.kind == "punct":
            self.next()
            act = self.next()
            if act.kind not in ("name", "num"):
                self.error("expected an action name", act)
            self.expect(">" if t.text == "<" else "]")
            body = self.unary()
            return (Diamond if t.text == "<" else Box)(act.text, body)
        return self.atom()

    def atom(self) -> Formula:
        t = self.next()
        if t.kind == "punct" and t.text == "(":
            f = self.formula()
            self.expect(")")
            return f
        if t.kind == "name":
            if t.text == "true":
                return TRUE
            if t.text == "false":
                return FALSE
            if t.text == "ref":
                self.expect("{")
                acts = []
                while self.peek().text != "}":
                    a = self.next()
                    if a.kind not in ("name", "num"):
                        self.error("expected an action name", a)
                    if a.text == TAU:
                        self.error("ref{...} ranges over external actions; tau is implicit", a)
                    acts.append(a.text)
                    if self.peek().text == ",":
                        self.next()
                self.expect("}")
                return Ref(acts)
            if t.text in ("and", "or", "oplus"):
                self.expect("(")
                items = []
                if self.peek().text != ")":
                    items.append(self.wterm_full())
                    while self.peek().text == ",":
                        self.next()
                        items.append(self.wterm_full())
                self.expect(")")
                if t.text == "oplus":
                    if not items:
                        return OPlus(())
                    weighted = [w is not None for w, _ in items]
                    if all(weighted):
                        return self._choice(items, t)
                    if any(weighted):
                        self.error("cannot mix weighted and unweighted oplus arguments", t)
                    return OPlus(f for _, f in items)
                if any(w is not None for w, _ in items):
                    self.error(f"weights are only allowed inside oplus", t)
                fs = [f for _, f in items]
                return Conj(fs) if t.text == "and" else Disj(fs)
            if t.text in KEYWORDS:
                self.error(f"unexpected keyword {t.text!r}", t)
            if not (t.text[0].isalpha() or t.text[0] == "_"):
                self.error(f"invalid variable name {t.text!r}", t)
            return Var(t.text)
        self.error(f"unexpected {t.text or 'end of input'!r}", t)

    def wterm_full(self):
        t = self.peek()
        if t.kind == "num" and self.toks[self.i + 1].text == "*":
            self.next()
            self.next()
            return Fraction(t.text), self.formula()
        return None, self.formula()


def parse_formula(text: str, line: int = 1) -> Formula:
    p = _Parser(_tokenize(text, line))
    f = p.formula()
    if p.peek().kind != "eof":
        p.error(f"unexpected trailing {p.peek().text!r}")
    try:
        check_polarity(f)
    except ValueError as exc:
        raise ParseError(str(exc), line, 1) from None
    return f


def print_formula(phi: Formula) -> str:
    memo: dict[int, str] = {}

    def go(n: Formula) -> str:
        hit = memo.get(id(n))
        if hit is not None:
            return hit
        if isinstance(n, Conj):
            if not n.items:
                out = "true"
            elif len(n.items) == 1:
                out = f"and({go(n.items[0])})"
            else:
                out = "(" + " /\\ ".join(go(c) for c in n.items) + ")"
        elif isinstance(n, Disj):
            if not n.items:
                out = "false"
            elif len(n.items) == 1:
                out = f"or({go(n.items[0])})"
            else:
                out = "(" + " \\/ ".join(go(c) for c in n.items) + ")"
        elif isinstance(n, Neg):
            out = "not " + go(n.body)
        elif isinstance(n, Diamond):
            out = f"<{n.action}>" + go(n.body)
        elif isinstance(n, Box):
            out = f"[{n.action}]" + go(n.body)
        elif isinstance(n, Down):
            out = "down " + go(n.body)
        elif isinstance(n, OPlus):
            out = "oplus(" + ", ".join(go(c) for c in n.items) + ")"
        elif isinstance(n, OPlusW):
            out = "oplus(" + ", ".join(f"{p}*{go(c)}" for p, c in n.items) + ")"
        elif isinstance(n, Ref):
            out = "ref{" + ",".join(sorted(n.actions)) + "}"
        elif isinstance(n, Var):
            out = n.name
        elif isinstance(n, _Fix):
            kw = "mu" if isinstance(n, Mu) else "nu"
            out = f"({kw} {n.var}. {go(n.body)})"
        else:
            raise TypeError(f"not a formula: {n!r}")
        memo[id(n)] = out
        return out

    return go(phi)


@dataclass(frozen=True)
class EquationSystem:
    """Ordered equations ``X_i = phi_i`` with fixpoint-free bodies; the first is the root."""

    equations: tuple[tuple[str, Formula], ...]

    def __post_init__(self):
        names = [x for x, _ in self.equations]
        if len(set(names)) != len(names):
            raise ValueError("equation variables must be distinct")
        if not names:
            raise ValueError("an equation system needs at least one equation")
        known = set(names)
        for x, body in self.equations:
            if any(isinstance(n, _Fix) for n in walk(body)):
                raise ValueError(f"body of {x!r} contains a fixpoint binder")
            extra = body.free_vars - known
            if extra:
                raise ValueError(f"body of {x!r} mentions unknown variables {sorted(extra)}")

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(x for x, _ in self.equations)

    @property
    def root(self) -> str:
        return self.equations[0][0]

    def body(self, x: str) -> Formula:
        for y, f in self.equations:
            if y == x:
                return f
        raise KeyError(x)

    def as_dict(self) -> dict[str, Formula]:
        return dict(self.equations)


def parse_equations(text: str) -> EquationSystem:
    eqs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            raise ParseError("expected 'X = formula'", lineno, 1)
        lhs, rhs = line.split("=", 1)
        name = lhs.strip()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", name) or name in KEYWORDS:
            raise ParseError(f"invalid variable name {name!r}", lineno, 1)
        body = parse_formula(" " * (len(lhs) + 1) + rhs, lineno)
        eqs.append((name, body))
    try:
        return EquationSystem(tuple(eqs))
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def print_equations(system: EquationSystem) -> str:
    return "".join(f"{x} = {print_formula(f)}\n" for x, f in system.equations)
