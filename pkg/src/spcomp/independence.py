"""Composability pre-checks: key-secrecy independence and structural
independence of two protocols."""

from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace
from typing import Iterable, Iterator

from .strands import Message, NodeRef, Protocol
from .terms import Atom, Enc, Func, Pair, Sort, Term, atoms_of, canonicalize, format_term, rename_atom, subterms


@dataclass(frozen=True)
class Location:
    """A transmission: message number plus the sender's node."""

    message: int
    node: NodeRef

    def to_json(self) -> dict:
        return {"message": self.message, "strand": self.node.strand, "index": self.node.index}


@dataclass(frozen=True)
class SecrecyViolation:
    secret: Term
    offending_term: Term
    location: Location
    owning_protocol: str
    secret_protocol: str

    def to_json(self) -> dict:
        return {
            "secret": format_term(self.secret),
            "secret_protocol": self.secret_protocol,
            "offending_term": format_term(self.offending_term),
            "owning_protocol": self.owning_protocol,
            "location": self.location.to_json(),
        }


@dataclass(frozen=True)
class StructuralClash:
    signature: Term
    key_signature: Term
    terms: tuple[Term, Term]
    locations: tuple[Location, Location]

    def to_json(self) -> dict:
        return {
            "signature": format_term(self.signature),
            "key_signature": format_term(self.key_signature),
            "terms": [format_term(t) for t in self.terms],
            "locations": [loc.to_json() for loc in self.locations],
        }


def transmissions(p: Protocol) -> Iterator[tuple[Location, Message]]:
    # a strand holds both the receptions and the transmissions of its role
    seen: dict[str, int] = {}
    for k, m in enumerate(p.messages, 1):
        for end in (m.sender.name, m.receiver.name):
            seen[end] = seen.get(end, 0) + 1
        yield Location(k, NodeRef(m.sender.name, seen[m.sender.name])), m


def long_term_keys(p: Protocol) -> frozenset:
    """Key atoms held initially by some role and never sent in a non-key
    position of any message."""
    held = {t for ts in p.knowledge.values() for t in ts if isinstance(t, Atom) and t.sort is Sort.KEY}
    exposed: set[Atom] = set()
    for m in p.messages:
        exposed |= _exposed_atoms(m.payload)
    return frozenset(held - exposed)


def _exposed_atoms(t: Term) -> set:
    if isinstance(t, Atom):
        return {t}
    if isinstance(t, Pair):
        return _exposed_atoms(t.left) | _exposed_atoms(t.right)
    if isinstance(t, Enc):
        return _exposed_atoms(t.body)
    return set()


def insecure_occurrence(secret: Term, t: Term, safe_keys: frozenset, protected: bool = False) -> bool:
    """True if some occurrence of ``secret`` in ``t`` is not under a safe key.

    Key positions never expose their contents, and neither does a hash.
    """
    if t == secret and not protected:
        return True
    if isinstance(t, Pair):
        return (insecure_occurrence(secret, t.left, safe_keys, protected)
                or insecure_occurrence(secret, t.right, safe_keys, protected))
    if isinstance(t, Enc):
        inner = protected or t.func is Func.H or t.key in safe_keys
        return insecure_occurrence(secret, t.body, safe_keys, inner)
    return False


def _one_way(owner: Protocol, other: Protocol) -> list[SecrecyViolation]:
    safe = long_term_keys(other)
    out = []
    for secret in sorted(owner.secrets, key=format_term):
        for loc, m in transmissions(other):
            if insecure_occurrence(secret, m.payload, safe):
                out.append(SecrecyViolation(secret, m.payload, loc, other.name, owner.name))
    return out


def check_secrecy_independence(p1: Protocol, p2: Protocol) -> list[SecrecyViolation]:
    return _one_way(p1, p2) + _one_way(p2, p1)


def rename_in_protocol(p: Protocol, mapping: dict) -> Protocol:
    """Apply a sort-preserving atom renaming everywhere in ``p``."""

    def rn(t: Term) -> Term:
        for old, new in mapping.items():
            t = rename_atom(t, old, new)
        return t

    def ra(a: Atom) -> Atom:
        return mapping.get(a, a)

    names = {old.name: new.name for old, new in mapping.items()}

    return dc_replace(
        p,
        roles=tuple(ra(a) for a in p.roles),
        nonces=tuple(ra(a) for a in p.nonces),
        keys=tuple(ra(a) for a in p.keys),
        keypairs=tuple((ra(a), ra(b)) for a, b in p.keypairs),
        knowledge={names.get(r, r): frozenset(rn(t) for t in ts) for r, ts in p.knowledge.items()},
        secrets=frozenset(rn(t) for t in p.secrets),
        messages=tuple(Message(ra(m.sender), ra(m.receiver), rn(m.payload)) for m in p.messages),
    )


def _fresh_name(name: str, taken: set) -> str:
    candidate = name + "'"
    while candidate in taken:
        candidate += "'"
    return candidate


@dataclass(frozen=True)
class Renaming:
    old: Atom
    new: Atom

    def to_json(self) -> dict:
        return {"old": self.old.name, "new": self.new.name, "sort": self.old.sort.name.lower()}


def rename_conflicts(p1: Protocol, p2: Protocol) -> tuple[Protocol, Protocol, list[Renaming]]:
    """Freshen, in ``p2``, every shared non-role atom behind a secrecy violation."""
    shared = set(p1.atoms) & set(p2.atoms)
    culprits: set[Atom] = set()
    for v in check_secrecy_independence(p1, p2):
        culprits |= {a for a in atoms_of(v.secret) if a in shared and a.sort is not Sort.ROLE}
    if not culprits:
        return p1, p2, []
    taken = {a.name for a in p1.atoms} | {a.name for a in p2.atoms}
    mapping = {}
    for a in sorted(culprits, key=lambda x: x.name):
        fresh = Atom(_fresh_name(a.name, taken), a.sort)
        taken.add(fresh.name)
        mapping[a] = fresh
    report = [Renaming(old, new) for old, new in mapping.items()]
    return p1, rename_in_protocol(p2, mapping), report


def sent_encryptions(p: Protocol) -> Iterator[tuple[Location, Enc]]:
    for loc, m in transmissions(p):
        for s in subterms(m.payload):
            if isinstance(s, Enc):
                yield loc, s


def structural_clashes(side1: Iterable[tuple[Location, Enc]], side2: Iterable[tuple[Location, Enc]],
                       ignore_identical: bool = False) -> list[StructuralClash]:
    """One clash per distinct pair of encryptions whose canonical forms agree."""
    first1: dict[Enc, Location] = {}
    for loc, e in side1:
        first1.setdefault(e, loc)
    first2: dict[Enc, Location] = {}
    for loc, e in side2:
        first2.setdefault(e, loc)
    by_sig: dict[Term, list[Enc]] = {}
    for e in first2:
        by_sig.setdefault(canonicalize(e), []).append(e)
    clashes = []
    for u, loc_u in first1.items():
        sig = canonicalize(u)
        for v in by_sig.get(sig, ()):
            if ignore_identical and u == v:
                continue
            clashes.append(StructuralClash(sig, canonicalize(u.key), (u, v), (loc_u, first2[v])))
    return clashes


def check_structural_independence(p1: Protocol, p2: Protocol) -> list[StructuralClash]:
    return structural_clashes(sent_encryptions(p1), sent_encryptions(p2))
