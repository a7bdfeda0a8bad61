"""Dynamic knowledge: memory strands and term derivability."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .strands import NEG, POS, Classifier, KStrand, KStrandSpace, NodeRef, SignedTerm
from .terms import EMPTY, Atom, Enc, Func, Pair, Sort, Term, subterms

MEMORY_KEY_PREFIX = "_mem_"


class MemoryStrandError(ValueError):
    """Raised for strands that cannot be given a memory strand."""


def memory_key(participant: Atom) -> Atom:
    return Atom(MEMORY_KEY_PREFIX + participant.name, Sort.KEY)


def gen_know(received: Term, previous: Term) -> Term:
    """Grow the knowledge term by one reception."""
    if previous is EMPTY:
        return received
    return Pair(previous, received)


@dataclass(frozen=True)
class MemoryPair:
    participant_strand: KStrand
    memory_strand: KStrand
    key: Atom


def _is_memory_term(t: Term) -> bool:
    return isinstance(t, Enc) and t.func is Func.MK


def _mk(t: Term, key: Atom) -> Enc:
    return Enc(t, Func.MK, key)


def gen_memory_strands(s: KStrand, key: Optional[Atom] = None) -> MemoryPair:
    if s.classifier is not Classifier.PARTICIPANT:
        raise MemoryStrandError(f"strand {s.name} is not a participant strand")
    for st in s.trace:
        if any(_is_memory_term(x) for x in subterms(st.payload)):
            raise MemoryStrandError(f"strand {s.name} already exchanges memory terms")
    km = key or memory_key(s.participant)
    knowledge = s.knowledge | {km}
    part: list[SignedTerm] = []
    mem: list[SignedTerm] = []
    know: Term = EMPTY
    for st in s.trace:
        part.append(st)
        if st.sign == NEG:
            know = gen_know(st.payload, know)
            part.append(SignedTerm(POS, _mk(st.payload, km)))
            part.append(SignedTerm(NEG, _mk(know, km)))
            mem.append(SignedTerm(NEG, _mk(st.payload, km)))
            mem.append(SignedTerm(POS, _mk(know, km)))
    return MemoryPair(
        KStrand(knowledge, Classifier.PARTICIPANT, s.participant, tuple(part)),
        KStrand(knowledge, Classifier.MEMORY, s.participant, tuple(mem)),
        km,
    )


def with_memory(space: KStrandSpace) -> KStrandSpace:
    """Give every participant strand its memory strand and rewire the edges."""
    strands: list[KStrand] = []
    memory: list[KStrand] = []
    remap: dict[str, dict[int, int]] = {}
    mem_edges = []
    for s in space.strands:
        if s.classifier is not Classifier.PARTICIPANT:
            strands.append(s)
            continue
        pair = gen_memory_strands(s)
        strands.append(pair.participant_strand)
        memory.append(pair.memory_strand)
        old_to_new = {}
        old = 0
        mem_idx = 0
        for new, st in enumerate(pair.participant_strand.trace, 1):
            if not _is_memory_term(st.payload):
                old += 1
                old_to_new[old] = new
                continue
            mem_idx += 1
            p_node = NodeRef(s.name, new)
            m_node = NodeRef(pair.memory_strand.name, mem_idx)
            mem_edges.append((p_node, m_node) if st.sign == POS else (m_node, p_node))
        remap[s.name] = old_to_new
    edges = []
    for src, dst in space.cross_edges:
        src = NodeRef(src.strand, remap.get(src.strand, {}).get(src.index, src.index))
        dst = NodeRef(dst.strand, remap.get(dst.strand, {}).get(dst.index, dst.index))
        edges.append((src, dst))
    return KStrandSpace(tuple(strands) + tuple(memory), tuple(edges) + tuple(mem_edges))


def memory_term_before(strand: KStrand, index: int) -> Term:
    """The knowledge term built from every protocol reception strictly
    before node ``index`` (the empty term if there is none)."""
    know: Term = EMPTY
    for st in strand.trace[:index - 1]:
        if st.sign == NEG and not _is_memory_term(st.payload):
            know = gen_know(st.payload, know)
    return know


def _inverse(key: Term, func: Func, inverses: Mapping) -> Optional[Term]:
    if func in (Func.SK, Func.MK):
        return key
    if func in (Func.PK, Func.PVK):
        return inverses.get(key)
    return None


def analyze(knowledge: Iterable[Term], inverses: Mapping = {}) -> frozenset:
    """Saturate ``knowledge`` under projection and decryption."""
    known = {t for t in knowledge if t is not EMPTY}
    changed = True
    while changed:
        changed = False
        for t in list(known):
            new: tuple = ()
            if isinstance(t, Pair):
                new = (t.left, t.right)
            elif isinstance(t, Enc):
                inv = _inverse(t.key, t.func, inverses)
                if inv is not None and synthesizable(inv, known):
                    new = (t.body,)
            for x in new:
                if x not in known:
                    known.add(x)
                    changed = True
    return frozenset(known)


def synthesizable(t: Term, known) -> bool:
    if t is EMPTY or t in known:
        return True
    if isinstance(t, Pair):
        return synthesizable(t.left, known) and synthesizable(t.right, known)
    if isinstance(t, Enc):
        return synthesizable(t.body, known) and synthesizable(t.key, known)
    return False


def constructable(t: Term, knowledge: Iterable[Term], memory: Term = EMPTY, inverses: Mapping = {}) -> bool:
    """Can ``t`` be built from static knowledge plus the memory term?

    Symbolic (Dolev-Yao) derivability: pairing, projection, encryption with a
    derivable key, and decryption with a derivable inverse key. ``sk`` and
    ``mk`` are symmetric, ``pk``/``pvk`` decrypt with the paired key from
    ``inverses``, and ``h`` never decrypts.
    """
    base = set(knowledge)
    if memory is not EMPTY:
        base.add(memory)
    return synthesizable(t, analyze(base, inverses))
