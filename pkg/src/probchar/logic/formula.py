"""pMu abstract syntax.

Nodes are immutable and hashable.  Hashes and free-variable sets are cached
per node, so formulae built with heavy sharing (as produced by substitution)
stay cheap to compare and traverse.
"""

from __future__ import annotations

from fractions import Fraction

from ..plts import TAU


class Formula:
    __slots__ = ("_hash", "_fv")

    def _key(self) -> tuple:
        raise NotImplementedError

    def children(self) -> tuple[Formula, ...]:
        return ()

    def __hash__(self) -> int:
        try:
            return self._hash
        except AttributeError:
            h = hash((type(self).__name__,) + self._key())
            object.__setattr__(self, "_hash", h)
            return h

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if type(self) is not type(other) or hash(self) != hash(other):
            return False
        return self._key() == other._key()

    def __setattr__(self, name, value):
        raise AttributeError("formulae are immutable")

    @property
    def free_vars(self) -> frozenset[str]:
        try:
            return self._fv
        except AttributeError:
            fv = self._compute_fv()
            object.__setattr__(self, "_fv", fv)
            return fv

    def _compute_fv(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for c in self.children():
            out |= c.free_vars
        return out

    def __repr__(self) -> str:
        from .syntax import print_formula

        return f"{type(self).__name__}<{print_formula(self)}>"

    def __str__(self) -> str:
        from .syntax import print_formula

        return print_formula(self)


def _set(obj, **fields):
    for k, v in fields.items():
        object.__setattr__(obj, k, v)


class Conj(Formula):
    __slots__ = ("items",)

    def __init__(self, items=()):
        _set(self, items=tuple(items))

    def _key(self):
        return self.items

    def children(self):
        return self.items


class Disj(Formula):
    __slots__ = ("items",)

    def __init__(self, items=()):
        _set(self, items=tuple(items))

    def _key(self):
        return self.items

    def children(self):
        return self.items


class Neg(Formula):
    __slots__ = ("body",)

    def __init__(self, body: Formula):
        _set(self, body=body)

    def _key(self):
        return (self.body,)

    def children(self):
        return (self.body,)


class Diamond(Formula):
    __slots__ = ("action", "body")

    def __init__(self, action: str, body: Formula):
        _set(self, action=action, body=body)

    def _key(self):
        return (self.action, self.body)

    def children(self):
        return (self.body,)


class Box(Formula):
    __slots__ = ("action", "body")

    def __init__(self, action: str, body: Formula):
        _set(self, action=action, body=body)

    def _key(self):
        return (self.action, self.body)

    def children(self):
        return (self.body,)


class OPlus(Formula):
    """Unweighted probabilistic choice: some convex split satisfies the parts."""

    __slots__ = ("items",)

    def __init__(self, items=()):
        _set(self, items=tuple(items))

    def _key(self):
        return self.items

    def children(self):
        return self.items


class OPlusW(Formula):
    """Weighted probabilistic choice with fixed positive weights summing to 1."""

    __slots__ = ("items",)

    def __init__(self, items):
        items = tuple((Fraction(p), f) for p, f in items)
        if any(p <= 0 for p, _ in items):
            raise ValueError("weights of a weighted oplus must be positive")
        if sum((p for p, _ in items), Fraction(0)) != 1:
            raise ValueError("weights of a weighted oplus must sum to 1")
        _set(self, items=items)

    def _key(self):
        return self.items

    def children(self):
        return tuple(f for _, f in self.items)


class Down(Formula):
    __slots__ = ("body",)

    def __init__(self, body: Formula):
        _set(self, body=body)

    def _key(self):
        return (self.body,)

    def children(self):
        return (self.body,)


class Ref(Formula):
    __slots__ = ("actions",)

    def __init__(self, actions):
        actions = frozenset(actions)
        if TAU in actions:
            raise ValueError("ref(A) ranges over external actions; tau is implicit")
        _set(self, actions=actions)

    def _key(self):
        return tuple(sorted(self.actions))


class Var(Formula):
    __slots__ = ("name",)

    def __init__(self, name: str):
        _set(self, name=name)

    def _key(self):
        return (self.name,)

    def _compute_fv(self):
        return frozenset((self.name,))


class _Fix(Formula):
    __slots__ = ("var", "body")

    def __init__(self, var: str, body: Formula):
        _set(self, var=var, body=body)

    def _key(self):
        return (self.var, self.body)

    def children(self):
        return (self.body,)

    def _compute_fv(self):
        return self.body.free_vars - {self.var}


class Mu(_Fix):
    __slots__ = ()


class Nu(_Fix):
    __slots__ = ()


TRUE = Conj(())
FALSE = Disj(())


def conj(items) -> Formula:
    """Conjunction that flattens nested conjunctions and drops ``true``."""
    flat = []
    for f in items:
        if isinstance(f, Conj):
            flat.extend(f.items)
        else:
            flat.append(f)
    return flat[0] if len(flat) == 1 else Conj(flat)


def walk(phi: Formula):
    """Yield every distinct node of the formula DAG once."""
    seen = set()
    stack = [phi]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        yield node
        stack.extend(node.children())


def size(phi: Formula) -> int:
    """Number of distinct DAG nodes."""
    return sum(1 for _ in walk(phi))


def substitute(phi: Formula, name: str, replacement: Formula) -> Formula:
    """Replace free occurrences of ``name`` by ``replacement``, preserving sharing.

    Capture cannot happen for the call patterns used here (the replacement's
    free variables are never rebound inside ``phi``); it is still checked.
    """
    memo: dict[int, Formula] = {}
    rfv = replacement.free_vars

    def go(node: Formula) -> Formula:
        if name not in node.free_vars:
            return node
        hit = memo.get(id(node))
        if hit is not None:
            return hit
        if isinstance(node, Var):
            out = replacement
        elif isinstance(node, _Fix):
            if node.var in rfv:
                raise ValueError(f"substitution would capture {node.var!r}")
            out = type(node)(node.var, go(node.body))
        elif isinstance(node, (Conj, Disj, OPlus)):
            out = type(node)(go(c) for c in node.items)
        elif isinstance(node, OPlusW):
            out = OPlusW((p, go(c)) for p, c in node.items)
        elif isinstance(node, (Diamond, Box)):
            out = type(node)(node.action, go(node.body))
        elif isinstance(node, (Neg, Down)):
            out = type(node)(go(node.body))
        else:
            out = node
        memo[id(node)] = out
        return out

    return go(phi)


def check_polarity(phi: Formula) -> None:
    """Raise ValueError if a fixpoint variable occurs under an odd number of negations."""
    def go(node, parity: dict[str, int], negs: int, seen: set):
        key = (id(node), negs % 2, tuple(sorted((k, v % 2) for k, v in parity.items() if k in node.free_vars)))
        if key in seen:
            return
        seen.add(key)
        if isinstance(node, Var):
            if node.name in parity and (negs - parity[node.name]) % 2:
                raise ValueError(f"variable {node.name!r} occurs under an odd number of negations")
            return
        if isinstance(node, _Fix):
            go(node.body, {**parity, node.var: negs}, negs, seen)
            return
        inc = 1 if isinstance(node, Neg) else 0
        for c in node.children():
            go(c, parity, negs + inc, seen)

    go(phi, {}, 0, set())
