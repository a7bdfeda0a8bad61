"""Partial and complete term connections.

A connection end is a transmitted node together with one of the sub-terms
of its payload. Connections run forward in time: the pre-condition's message
strictly precedes the post-condition's message.

* partial: one end is encrypted, the other is not, and the unencrypted term
  occurs inside the encrypted one;
* complete: both ends are encrypted, the terms differ, and either the pre
  term occurs whole inside the post term, or the two share function and key
  and the pre term's body occurs inside the post term.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator

from .strands import POS, KStrandSpace, NodeRef, node_term
from .terms import EMPTY, Enc, Term, format_term, replace, subterms


class Kind(enum.Enum):
    PARTIAL = "partial"
    COMPLETE = "complete"


@dataclass(frozen=True)
class ConnectionEnd:
    message: int
    node: NodeRef
    term: Term = EMPTY
    sign: str = POS

    @property
    def strand(self) -> str:
        return self.node.strand

    def to_json(self) -> dict:
        return {"message": self.message, "strand": self.node.strand, "index": self.node.index,
                "sign": self.sign, "term": format_term(self.term)}

    def __str__(self) -> str:
        return f"<{self.sign}{self.node.strand}.{self.node.index} (msg {self.message}), {format_term(self.term)}>"


@dataclass(frozen=True)
class Connection:
    kind: Kind
    pre: ConnectionEnd
    post: ConnectionEnd

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "pre": self.pre.to_json(), "post": self.post.to_json()}

    def __str__(self) -> str:
        arrow = "|->p" if self.kind is Kind.PARTIAL else "|->c"
        return f"{self.pre} {arrow} {self.post}"


def _conn_key(c: Connection):
    return (c.kind.value, c.pre.message, c.post.message, format_term(c.pre.term), format_term(c.post.term),
            c.pre.node, c.post.node)


@dataclass(frozen=True)
class SecurityProperty:
    connections: frozenset = frozenset()

    def __iter__(self) -> Iterator[Connection]:
        return iter(sorted(self.connections, key=_conn_key))

    def __len__(self) -> int:
        return len(self.connections)

    def __contains__(self, c) -> bool:
        return c in self.connections

    def of_kind(self, kind: Kind) -> list[Connection]:
        return [c for c in self if c.kind is kind]

    def rewrite(self, old: Term, new: Term) -> "SecurityProperty":
        """Substitute ``new`` for ``old`` inside every connection end."""
        def end(e: ConnectionEnd) -> ConnectionEnd:
            return ConnectionEnd(e.message, e.node, replace(e.term, old, new), e.sign)
        return SecurityProperty(frozenset(Connection(c.kind, end(c.pre), end(c.post)) for c in self.connections))

    def to_json(self) -> list:
        return [c.to_json() for c in self]


def connection_ends(space: KStrandSpace) -> list[ConnectionEnd]:
    """Every (transmission, sub-term) pair of the protocol messages in a space.

    Memory traffic is ignored; it is not part of the protocol.
    """
    ends = []
    for k, (src, _dst) in enumerate(space.message_edges(), 1):
        seen = set()
        for t in subterms(node_term(space, src)):
            if t is EMPTY or t in seen:
                continue
            seen.add(t)
            ends.append(ConnectionEnd(k, src, t, POS))
    return ends


class _SubtermIndex:
    def __init__(self):
        self._cache: dict[Term, frozenset] = {}

    def within(self, small: Term, big: Term) -> bool:
        subs = self._cache.get(big)
        if subs is None:
            subs = self._cache[big] = frozenset(subterms(big))
        return small in subs


def is_partial(t1: Term, t2: Term, idx: _SubtermIndex | None = None) -> bool:
    idx = idx or _SubtermIndex()
    e1, e2 = isinstance(t1, Enc), isinstance(t2, Enc)
    if e1 == e2:
        return False
    plain, enc = (t1, t2) if e2 else (t2, t1)
    return idx.within(plain, enc)


def is_complete(t1: Term, t2: Term, idx: _SubtermIndex | None = None) -> bool:
    idx = idx or _SubtermIndex()
    if not (isinstance(t1, Enc) and isinstance(t2, Enc)) or t1 == t2:
        return False
    if idx.within(t1, t2):
        return True
    return t1.func is t2.func and t1.key == t2.key and idx.within(t1.body, t2)


def _pairs(ends: list[ConnectionEnd]) -> Iterable[tuple[ConnectionEnd, ConnectionEnd]]:
    for a in ends:
        for b in ends:
            if a.message < b.message:
                yield a, b


def partial_connections(space: KStrandSpace) -> SecurityProperty:
    idx = _SubtermIndex()
    ends = connection_ends(space)
    return SecurityProperty(frozenset(
        Connection(Kind.PARTIAL, a, b) for a, b in _pairs(ends) if is_partial(a.term, b.term, idx)
    ))


def complete_connections(space: KStrandSpace) -> SecurityProperty:
    idx = _SubtermIndex()
    ends = [e for e in connection_ends(space) if isinstance(e.term, Enc)]
    return SecurityProperty(frozenset(
        Connection(Kind.COMPLETE, a, b) for a, b in _pairs(ends) if is_complete(a.term, b.term, idx)
    ))


def security_property(space: KStrandSpace) -> SecurityProperty:
    return SecurityProperty(partial_connections(space).connections | complete_connections(space).connections)
