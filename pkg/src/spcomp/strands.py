"""Protocols and their k-strand space representation."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace as dc_replace
from typing import Iterable, Iterator, Mapping

from .terms import EMPTY, Atom, Enc, Func, Sort, Term, atoms_of, format_term, subterm, subterms


class Classifier(enum.Enum):
    PARTICIPANT = "C_R"
    MEMORY = "C_M"


POS = "+"
NEG = "-"

MEMORY_SUFFIX = "~mem"


@dataclass(frozen=True)
class Message:
    sender: Atom
    receiver: Atom
    payload: Term

    def endpoints(self) -> tuple[str, str]:
        return (self.sender.name, self.receiver.name)

    def __str__(self) -> str:
        return f"{self.sender} -> {self.receiver} : {format_term(self.payload)}"


@dataclass(frozen=True, eq=True)
class Protocol:
    name: str
    roles: tuple[Atom, ...] = ()
    nonces: tuple[Atom, ...] = ()
    keys: tuple[Atom, ...] = ()
    keypairs: tuple[tuple[Atom, Atom], ...] = ()
    knowledge: Mapping[str, frozenset] = field(default_factory=dict)
    secrets: frozenset = frozenset()
    messages: tuple[Message, ...] = ()

    __hash__ = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        # every role gets an entry so equality does not depend on how the
        # protocol was built
        know = {r.name: frozenset(self.knowledge.get(r.name, ())) for r in self.roles}
        for extra, ts in self.knowledge.items():
            know.setdefault(extra, frozenset(ts))
        object.__setattr__(self, "knowledge", know)

    @property
    def atoms(self) -> tuple[Atom, ...]:
        pairs = tuple(a for kp in self.keypairs for a in kp)
        return self.roles + self.nonces + self.keys + pairs

    @property
    def sorts(self) -> dict[str, Sort]:
        return {a.name: a.sort for a in self.atoms}

    def role(self, name: str) -> Atom:
        for r in self.roles:
            if r.name == name:
                return r
        raise KeyError(name)

    def knows(self, role: str) -> frozenset:
        return self.knowledge.get(role, frozenset())

    def inverse_keys(self) -> dict[Atom, Atom]:
        inv: dict[Atom, Atom] = {}
        for pub, priv in self.keypairs:
            inv[pub] = priv
            inv[priv] = pub
        return inv


def validate_protocol(p: Protocol) -> list[str]:
    """Problems with ``p`` as plain strings; empty when valid."""
    problems = []
    declared: dict[str, Atom] = {}
    for a in p.atoms:
        if a.name in declared:
            problems.append(f"duplicate declaration of {a.name}")
        declared[a.name] = a

    def check_term(t: Term, where: str) -> None:
        for s in subterms(t):
            if isinstance(s, Atom):
                d = declared.get(s.name)
                if d is None:
                    problems.append(f"undeclared atom {s.name} in {where}")
                elif d.sort is not s.sort:
                    problems.append(f"sort conflict for {s.name} in {where}")
            elif isinstance(s, Enc) and s.func is Func.MK:
                problems.append(f"reserved function mk used in {where}")

    roles = set(p.roles)
    for role, terms in p.knowledge.items():
        if role not in {r.name for r in roles}:
            problems.append(f"knowledge declared for unknown role {role}")
        for t in terms:
            check_term(t, f"knowledge of {role}")
    for i, m in enumerate(p.messages, 1):
        for end in (m.sender, m.receiver):
            if end not in roles:
                problems.append(f"message {i}: {end.name} is not a declared role")
        if m.sender == m.receiver:
            problems.append(f"message {i}: sender and receiver are both {m.sender.name}")
        check_term(m.payload, f"message {i}")
    for s in p.secrets:
        check_term(s, "secrets")
        carriers = [m.payload for m in p.messages] + [t for ts in p.knowledge.values() for t in ts]
        if not any(subterm(s, c) for c in carriers):
            problems.append(f"secret {format_term(s)} does not occur in the protocol")
    return problems


@dataclass(frozen=True)
class SignedTerm:
    sign: str
    payload: Term

    def __str__(self) -> str:
        return f"{self.sign}{format_term(self.payload)}"


@dataclass(frozen=True)
class KStrand:
    knowledge: frozenset
    classifier: Classifier
    participant: Atom
    trace: tuple[SignedTerm, ...] = ()

    @property
    def name(self) -> str:
        if self.classifier is Classifier.MEMORY:
            return self.participant.name + MEMORY_SUFFIX
        return self.participant.name

    def __len__(self) -> int:
        return len(self.trace)


@dataclass(frozen=True, order=True)
class NodeRef:
    strand: str
    index: int

    def __str__(self) -> str:
        return f"<{self.strand},{self.index}>"


@dataclass(frozen=True)
class KStrandSpace:
    strands: tuple[KStrand, ...] = ()
    cross_edges: tuple[tuple[NodeRef, NodeRef], ...] = ()

    def strand(self, name: str) -> KStrand:
        for s in self.strands:
            if s.name == name:
                return s
        raise KeyError(name)

    def participant_strands(self) -> list[KStrand]:
        return [s for s in self.strands if s.classifier is Classifier.PARTICIPANT]

    def signed(self, n: NodeRef) -> SignedTerm:
        s = self.strand(n.strand)
        if not 1 <= n.index <= len(s.trace):
            raise IndexError(f"node {n} out of range 1..{len(s.trace)}")
        return s.trace[n.index - 1]

    def nodes(self) -> Iterator[NodeRef]:
        for s in self.strands:
            for i in range(1, len(s.trace) + 1):
                yield NodeRef(s.name, i)

    def message_edges(self) -> list[tuple[NodeRef, NodeRef]]:
        """Cross edges between participant strands, in message order."""
        names = {s.name for s in self.participant_strands()}
        return [e for e in self.cross_edges if e[0].strand in names and e[1].strand in names]

    def messages(self) -> list[Message]:
        out = []
        for src, dst in self.message_edges():
            out.append(Message(self.strand(src.strand).participant,
                               self.strand(dst.strand).participant,
                               node_term(self, src)))
        return out

    def map_payloads(self, fn) -> "KStrandSpace":
        strands = tuple(
            dc_replace(s, trace=tuple(SignedTerm(st.sign, fn(st.payload)) for st in s.trace))
            for s in self.strands
        )
        return dc_replace(self, strands=strands)


def node_term(space: KStrandSpace, n: NodeRef) -> Term:
    return space.signed(n).payload


def node_sign(space: KStrandSpace, n: NodeRef) -> str:
    return space.signed(n).sign


def to_strand_space(p: Protocol) -> KStrandSpace:
    traces: dict[str, list[SignedTerm]] = {r.name: [] for r in p.roles}
    edges = []
    for m in p.messages:
        traces[m.sender.name].append(SignedTerm(POS, m.payload))
        src = NodeRef(m.sender.name, len(traces[m.sender.name]))
        traces[m.receiver.name].append(SignedTerm(NEG, m.payload))
        dst = NodeRef(m.receiver.name, len(traces[m.receiver.name]))
        edges.append((src, dst))
    strands = tuple(
        KStrand(frozenset(p.knows(r.name)), Classifier.PARTICIPANT, r, tuple(traces[r.name]))
        for r in p.roles
    )
    return KStrandSpace(strands, tuple(edges))


def sent_terms(space: KStrandSpace) -> frozenset:
    out = {st.payload for s in space.strands for st in s.trace if st.sign == POS}
    out.add(EMPTY)
    return frozenset(out)


def validate_space(space: KStrandSpace) -> list[str]:
    violations = []
    seen = set()
    for s in space.strands:
        if s.name in seen:
            violations.append(f"duplicate strand {s.name}")
        seen.add(s.name)
    for src, dst in space.cross_edges:
        try:
            a, b = space.signed(src), space.signed(dst)
        except (KeyError, IndexError) as exc:
            violations.append(f"edge {src}->{dst} refers to a missing node ({exc})")
            continue
        if src.strand == dst.strand:
            violations.append(f"edge {src}->{dst} stays on one strand")
        if a.sign != POS or b.sign != NEG:
            violations.append(f"edge {src}->{dst} does not go from + to -")
        if a.payload != b.payload:
            violations.append(f"edge {src}->{dst} joins unequal terms")
    return violations


def recover_messages(space: KStrandSpace) -> list[Message]:
    """Rebuild the global message list by ordering cross edges so that each
    strand's nodes are consumed in trace order."""
    edges = list(space.message_edges())
    pos = {s.name: 1 for s in space.participant_strands()}
    out = []
    while edges:
        for k, (src, dst) in enumerate(edges):
            if pos[src.strand] == src.index and pos[dst.strand] == dst.index:
                pos[src.strand] += 1
                pos[dst.strand] += 1
                out.append(Message(space.strand(src.strand).participant,
                                   space.strand(dst.strand).participant,
                                   node_term(space, src)))
                del edges[k]
                break
        else:
            raise ValueError("cross edges admit no consistent message order")
    return out


def protocol_atoms(p: Protocol) -> frozenset:
    found: set[Atom] = set()
    for m in p.messages:
        found |= atoms_of(m.payload)
    for ts in p.knowledge.values():
        for t in ts:
            found |= atoms_of(t)
    return frozenset(found)


def all_atoms(terms: Iterable[Term]) -> frozenset:
    found: set[Atom] = set()
    for t in terms:
        found |= atoms_of(t)
    return frozenset(found)
