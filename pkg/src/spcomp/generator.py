"""Parallel compositions of two message sequences.

Each candidate is a lattice path over an ``m x n`` grid: a right step takes
the next message of the first protocol, a down step the next message of the
second, and a diagonal step concatenates one of each.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from itertools import islice
from typing import Iterable, Iterator, Optional

from .strands import Message, Protocol
from .terms import Pair, format_term


class StepKind(enum.IntEnum):
    TAKE1 = 0
    TAKE2 = 1
    CONCAT = 2


@dataclass(frozen=True, order=True)
class Step:
    kind: StepKind
    i: Optional[int] = None  # 1-based index into the first protocol
    j: Optional[int] = None  # 1-based index into the second protocol

    def __str__(self) -> str:
        if self.kind is StepKind.TAKE1:
            return f"P1.{self.i}"
        if self.kind is StepKind.TAKE2:
            return f"P2.{self.j}"
        return f"P1.{self.i}+P2.{self.j}"

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.name.lower()}
        if self.i is not None:
            out["i"] = self.i
        if self.j is not None:
            out["j"] = self.j
        return out


def take1(i: int) -> Step:
    return Step(StepKind.TAKE1, i, None)


def take2(j: int) -> Step:
    return Step(StepKind.TAKE2, None, j)


def concat(i: int, j: int) -> Step:
    return Step(StepKind.CONCAT, i, j)


@dataclass(frozen=True)
class GeneratedCandidate:
    steps: tuple[Step, ...]
    provenance: tuple[str, str] = ("P1", "P2")
    index: int = 0

    @property
    def kinds(self) -> tuple[int, ...]:
        return tuple(int(s.kind) for s in self.steps)

    def concats(self) -> list[Step]:
        return [s for s in self.steps if s.kind is StepKind.CONCAT]

    def __str__(self) -> str:
        return " ; ".join(str(s) for s in self.steps)


def lattice_paths(m: int, n: int) -> Iterator[tuple[Step, ...]]:
    """All paths from (0, 0) to (m, n); at each branch Take1 < Take2 < Concat."""
    path: list[Step] = []

    def walk(i: int, j: int) -> Iterator[tuple[Step, ...]]:
        if i == m and j == n:
            yield tuple(path)
            return
        if i < m:
            path.append(take1(i + 1))
            yield from walk(i + 1, j)
            path.pop()
        if j < n:
            path.append(take2(j + 1))
            yield from walk(i, j + 1)
            path.pop()
        if i < m and j < n:
            path.append(concat(i + 1, j + 1))
            yield from walk(i + 1, j + 1)
            path.pop()

    yield from walk(0, 0)


def generate(p1: Protocol, p2: Protocol) -> Iterator[GeneratedCandidate]:
    prov = (p1.name, p2.name)
    for k, steps in enumerate(lattice_paths(len(p1.messages), len(p2.messages)), 1):
        yield GeneratedCandidate(steps, prov, k)


@lru_cache(maxsize=None)
def count_generated(m: int, n: int) -> int:
    """Central Delannoy-type count: D(m, n) = D(m-1, n) + D(m, n-1) + D(m-1, n-1)."""
    if m == 0 or n == 0:
        return 1
    return count_generated(m - 1, n) + count_generated(m, n - 1) + count_generated(m - 1, n - 1)


def endpoints_match(p1: Protocol, p2: Protocol, step: Step) -> bool:
    a, b = p1.messages[step.i - 1], p2.messages[step.j - 1]
    return a.endpoints() == b.endpoints()


def filter_endpoints(candidates: Iterable[GeneratedCandidate], p1: Protocol,
                     p2: Protocol) -> Iterator[GeneratedCandidate]:
    for c in candidates:
        if all(endpoints_match(p1, p2, s) for s in c.concats()):
            yield c


def count_filtered(p1: Protocol, p2: Protocol) -> int:
    m, n = len(p1.messages), len(p2.messages)
    table = [[1] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            table[i][j] = table[i - 1][j] + table[i][j - 1]
            if p1.messages[i - 1].endpoints() == p2.messages[j - 1].endpoints():
                table[i][j] += table[i - 1][j - 1]
    return table[m][n]


class IncompatibleConcat(ValueError):
    pass


@dataclass(frozen=True)
class RealizedMessage:
    message: Message
    step: Step


def realize_messages(candidate: GeneratedCandidate, p1: Protocol, p2: Protocol) -> list[RealizedMessage]:
    out = []
    for s in candidate.steps:
        if s.kind is StepKind.TAKE1:
            msg = p1.messages[s.i - 1]
        elif s.kind is StepKind.TAKE2:
            msg = p2.messages[s.j - 1]
        else:
            a, b = p1.messages[s.i - 1], p2.messages[s.j - 1]
            if a.endpoints() != b.endpoints():
                raise IncompatibleConcat(
                    f"{s}: {a.sender}->{a.receiver} cannot be concatenated with {b.sender}->{b.receiver}")
            msg = Message(a.sender, a.receiver, Pair(a.payload, b.payload))
        out.append(RealizedMessage(msg, s))
    return out


def merge_declarations(p1: Protocol, p2: Protocol, name: str, messages=()) -> Protocol:
    """A protocol over the union of both vocabularies and knowledge."""

    def union(xs, ys):
        out = list(xs)
        out += [y for y in ys if y not in out]
        return tuple(out)

    roles = union(p1.roles, p2.roles)
    knowledge = {r.name: p1.knows(r.name) | p2.knows(r.name) for r in roles}
    return Protocol(
        name=name,
        roles=roles,
        nonces=union(p1.nonces, p2.nonces),
        keys=union(p1.keys, p2.keys),
        keypairs=union(p1.keypairs, p2.keypairs),
        knowledge=knowledge,
        secrets=p1.secrets | p2.secrets,
        messages=tuple(messages),
    )


def realize(candidate: GeneratedCandidate, p1: Protocol, p2: Protocol) -> Protocol:
    msgs = [rm.message for rm in realize_messages(candidate, p1, p2)]
    return merge_declarations(p1, p2, f"{p1.name}_{p2.name}_{candidate.index}", msgs)


def candidate_to_json(candidate: GeneratedCandidate, p1: Protocol, p2: Protocol) -> dict:
    out = {"index": candidate.index, "steps": [s.to_json() for s in candidate.steps]}
    try:
        out["messages"] = [
            {"sender": rm.message.sender.name, "receiver": rm.message.receiver.name,
             "payload": format_term(rm.message.payload)}
            for rm in realize_messages(candidate, p1, p2)
        ]
    except IncompatibleConcat:
        out["messages"] = None
    return out


def limited(it: Iterable, limit: Optional[int]) -> Iterator:
    return iter(it) if limit is None else islice(it, limit)
