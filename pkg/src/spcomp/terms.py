"""Symbolic terms: atoms, pairing and encryption.

Terms are immutable trees. Equality is structural, so ``Pair(a, Pair(b, c))``
and ``Pair(Pair(a, b), c)`` are different terms.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Union


class Sort(enum.Enum):
    ROLE = "r"
    NONCE = "n"
    KEY = "k"

    @property
    def symbol(self) -> str:
        return self.value


class Func(enum.Enum):
    SK = "sk"
    PK = "pk"
    PVK = "pvk"
    H = "h"
    MK = "mk"


class TermError(ValueError):
    pass


@dataclass(frozen=True)
class EmptyTerm:
    def __str__(self) -> str:
        return "."


EMPTY = EmptyTerm()


@dataclass(frozen=True)
class Atom:
    name: str
    sort: Sort

    def __post_init__(self) -> None:
        if not self.name:
            raise TermError("atom name must be non-empty")

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Pair:
    left: "Term"
    right: "Term"

    def __post_init__(self) -> None:
        if self.left is EMPTY or self.right is EMPTY:
            raise TermError("the empty term cannot appear inside a pair")

    def __str__(self) -> str:
        return format_term(self)


@dataclass(frozen=True)
class Enc:
    body: "Term"
    func: Func
    key: "Term"

    def __post_init__(self) -> None:
        if self.body is EMPTY or self.key is EMPTY:
            raise TermError("the empty term cannot appear inside an encryption")

    def __str__(self) -> str:
        return format_term(self)


Term = Union[EmptyTerm, Atom, Pair, Enc]


def pair(*terms: Term) -> Term:
    """Right-associated tuple: ``pair(a, b, c) == Pair(a, Pair(b, c))``."""
    if not terms:
        return EMPTY
    result = terms[-1]
    for t in reversed(terms[:-1]):
        result = Pair(t, result)
    return result


def subterms(t: Term) -> Iterator[Term]:
    """Pre-order walk of every subterm of ``t``, including ``t`` itself."""
    stack = [t]
    while stack:
        cur = stack.pop()
        yield cur
        if isinstance(cur, Pair):
            stack.append(cur.right)
            stack.append(cur.left)
        elif isinstance(cur, Enc):
            stack.append(cur.key)
            stack.append(cur.body)


def subterm(t1: Term, t2: Term) -> bool:
    """The sub-term relation: ``t1`` occurs in ``t2`` (reflexive)."""
    if t1 == t2:
        return True
    if isinstance(t2, Pair):
        return subterm(t1, t2.left) or subterm(t1, t2.right)
    if isinstance(t2, Enc):
        return subterm(t1, t2.body) or subterm(t1, t2.key)
    return False


def is_encrypted(t: Term) -> bool:
    return isinstance(t, Enc)


def atoms_of(t: Term) -> frozenset[Atom]:
    return frozenset(s for s in subterms(t) if isinstance(s, Atom))


def size(t: Term) -> int:
    """Number of constructor nodes in ``t``."""
    return sum(1 for _ in subterms(t))


def depth(t: Term) -> int:
    if isinstance(t, Pair):
        return 1 + max(depth(t.left), depth(t.right))
    if isinstance(t, Enc):
        return 1 + max(depth(t.body), depth(t.key))
    return 0


def replace(t: Term, old: Term, new: Term) -> Term:
    """Replace every occurrence of ``old`` in ``t`` by ``new`` (single pass)."""
    if t == old:
        return new
    if isinstance(t, Pair):
        left, right = replace(t.left, old, new), replace(t.right, old, new)
        if left is t.left and right is t.right:
            return t
        return Pair(left, right)
    if isinstance(t, Enc):
        body, key = replace(t.body, old, new), replace(t.key, old, new)
        if body is t.body and key is t.key:
            return t
        return Enc(body, t.func, key)
    return t


def rename_atom(t: Term, old: Atom, fresh: Atom) -> Term:
    if old.sort is not fresh.sort:
        raise TermError(
            f"cannot rename {old.name} ({old.sort.name.lower()}) to "
            f"{fresh.name} ({fresh.sort.name.lower()}): sorts differ"
        )
    return replace(t, old, fresh)


def canonicalize(t: Term) -> Term:
    """Replace each atom by its sort symbol, keeping the tree shape."""
    if isinstance(t, Atom):
        return Atom(t.sort.symbol, t.sort)
    if isinstance(t, Pair):
        return Pair(canonicalize(t.left), canonicalize(t.right))
    if isinstance(t, Enc):
        return Enc(canonicalize(t.body), t.func, canonicalize(t.key))
    return t


def format_term(t: Term) -> str:
    """Surface syntax. Pairs are right-associated; a left-nested pair is
    parenthesised."""
    if isinstance(t, EmptyTerm):
        return "."
    if isinstance(t, Atom):
        return t.name
    if isinstance(t, Enc):
        return "{%s}%s(%s)" % (format_term(t.body), t.func.value, format_term(t.key))
    left = format_term(t.left)
    if isinstance(t.left, Pair):
        left = f"({left})"
    return f"{left}, {format_term(t.right)}"


def sort_key(t: Term) -> str:
    return format_term(t)
