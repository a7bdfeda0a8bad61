"""Term composition of generated candidates.

For each candidate the two protocols are laid out in one k-strand space, every
concatenated pair of payloads is fused into a single term, dependent terms are
rewritten so connections survive, memory strands are added and each
transmission is checked for constructability.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace as dc_replace
from typing import Optional

from .connections import Connection, ConnectionEnd, Kind, SecurityProperty, security_property
from .generator import (GeneratedCandidate, StepKind, count_generated, filter_endpoints, generate,
                        merge_declarations)
from .independence import (Location, Renaming, rename_conflicts, sent_encryptions,
                           structural_clashes)
from .memory import constructable, memory_term_before, with_memory
from .strands import (NEG, POS, Classifier, KStrand, KStrandSpace, Message, NodeRef, Protocol,
                      SignedTerm, to_strand_space)
from .terms import Enc, Pair, Term, format_term, replace, subterm

log = logging.getLogger(__name__)

# which branch of the composition fired for a concatenated pair
MERGE_CONNECTED = "merge"            # same key, body is a connection end at the node
MERGE_UPDATE = "merge+update"        # same key, connection sequence rewritten
EMBED_UPDATE = "embed+update"        # second term placed inside the first's encryption
PAIR = "pair"                        # plain pairing, nothing to rewrite


class CompositionError(ValueError):
    pass


@dataclass(frozen=True)
class ComposedTerm:
    term: Term
    branch: str
    xi: SecurityProperty


@dataclass(frozen=True)
class Action:
    position: int
    step: str
    branch: str
    first: Term
    second: Term
    result: Term

    def to_json(self) -> dict:
        return {"message": self.position, "step": self.step, "branch": self.branch,
                "first": format_term(self.first), "second": format_term(self.second),
                "result": format_term(self.result)}


@dataclass
class CompositionResult:
    candidate: GeneratedCandidate
    space: KStrandSpace
    realized: Protocol
    accepted: bool
    reason: Optional[str]
    property: SecurityProperty
    trace: list = field(default_factory=list)
    images: SecurityProperty = field(default_factory=SecurityProperty)
    clashes: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "accepted" if self.accepted else "rejected"

    @property
    def message_count(self) -> int:
        return len(self.realized.messages)

    def missing_connections(self) -> list[Connection]:
        """Rewritten input complete connections absent from the output."""
        return [c for c in self.images if c not in self.property]


def init_unified_space(p1: Protocol, p2: Protocol) -> KStrandSpace:
    merged = merge_declarations(p1, p2, "unified")
    strands = tuple(
        KStrand(frozenset(merged.knows(r.name)), Classifier.PARTICIPANT, r, ()) for r in merged.roles
    )
    return KStrandSpace(strands, ())


def append_message(space: KStrandSpace, msg: Message) -> KStrandSpace:
    strands = list(space.strands)
    names = [s.name for s in strands]
    src = dst = None
    for k, (role, sign) in enumerate(((msg.sender, POS), (msg.receiver, NEG))):
        i = names.index(role.name)
        s = strands[i]
        strands[i] = dc_replace(s, trace=s.trace + (SignedTerm(sign, msg.payload),))
        ref = NodeRef(s.name, len(s.trace) + 1)
        if k == 0:
            src = ref
        else:
            dst = ref
    return KStrandSpace(tuple(strands), space.cross_edges + ((src, dst),))


def set_message_payload(space: KStrandSpace, k: int, payload: Term) -> KStrandSpace:
    src, dst = space.message_edges()[k - 1]
    strands = []
    for s in space.strands:
        trace = list(s.trace)
        for ref in (src, dst):
            if ref.strand == s.name:
                trace[ref.index - 1] = SignedTerm(trace[ref.index - 1].sign, payload)
        strands.append(dc_replace(s, trace=tuple(trace)))
    return dc_replace(space, strands=tuple(strands))


def _same_cipher(t1: Term, t2: Term) -> bool:
    return isinstance(t1, Enc) and isinstance(t2, Enc) and t1.func is t2.func and t1.key == t2.key


def compose_terms(t1: Term, t2: Term, xi1: SecurityProperty, n1: Optional[NodeRef] = None,
                  n2: Optional[NodeRef] = None, embed: bool = True) -> ComposedTerm:
    """Fuse a concatenated pair of payloads; ``t1`` comes from the first protocol."""
    if _same_cipher(t1, t2):
        merged = Enc(Pair(t1.body, t2.body), t1.func, t1.key)
        connected = any(
            c.kind is Kind.COMPLETE and ((c.post.term == t1.body and c.post.node == n1)
                                         or (c.pre.term == t1.body and c.pre.node == n1))
            for c in xi1
        )
        branch = MERGE_CONNECTED if connected else MERGE_UPDATE
        return ComposedTerm(merged, branch, xi1.rewrite(t1, merged))
    if isinstance(t1, Enc) and embed:
        merged = Enc(Pair(t1.body, t2), t1.func, t1.key)
        return ComposedTerm(merged, EMBED_UPDATE, xi1.rewrite(t1, merged))
    return ComposedTerm(Pair(t1, t2), PAIR, xi1)


def propagate_connection_updates(space: KStrandSpace, modified: Term, replacement: Term,
                                 xi: SecurityProperty) -> tuple[KStrandSpace, SecurityProperty]:
    """Rewrite every payload and connection end that contains ``modified``."""
    if modified == replacement:
        return space, xi
    if subterm(modified, replacement):
        raise CompositionError(
            f"rewriting {format_term(modified)} to {format_term(replacement)} would nest the term in itself")
    return space.map_payloads(lambda t: replace(t, modified, replacement)), xi.rewrite(modified, replacement)


def _translate(c: Connection, positions: dict[int, int], space: KStrandSpace) -> Connection:
    edges = space.message_edges()

    def end(e: ConnectionEnd) -> ConnectionEnd:
        k = positions[e.message]
        return ConnectionEnd(k, edges[k - 1][0], e.term, e.sign)

    return Connection(c.kind, end(c.pre), end(c.post))


def compose_candidate(candidate: GeneratedCandidate, p1: Protocol, p2: Protocol,
                      embed: bool = True) -> CompositionResult:
    space1, space2 = to_strand_space(p1), to_strand_space(p2)
    xi1, xi2 = security_property(space1), security_property(space2)
    nodes1 = [src for src, _ in space1.message_edges()]
    nodes2 = [src for src, _ in space2.message_edges()]

    space = init_unified_space(p1, p2)
    pos1: dict[int, int] = {}
    pos2: dict[int, int] = {}
    pending: dict[int, list[Term]] = {}
    for k, step in enumerate(candidate.steps, 1):
        if step.kind is StepKind.TAKE1:
            space = append_message(space, p1.messages[step.i - 1])
            pos1[step.i] = k
        elif step.kind is StepKind.TAKE2:
            space = append_message(space, p2.messages[step.j - 1])
            pos2[step.j] = k
        else:
            a, b = p1.messages[step.i - 1], p2.messages[step.j - 1]
            if a.endpoints() != b.endpoints():
                raise CompositionError(f"candidate {candidate.index}: {step} joins different endpoints")
            space = append_message(space, Message(a.sender, a.receiver, Pair(a.payload, b.payload)))
            pending[k] = [a.payload, b.payload]
            pos1[step.i], pos2[step.j] = k, k

    # images of every transmitted encryption, for the structural check
    enc1 = [[Location(pos1[loc.message], loc.node), e] for loc, e in sent_encryptions(p1)]
    enc2 = [[Location(pos2[loc.message], loc.node), e] for loc, e in sent_encryptions(p2)]

    def rewrite_all(old: Term, new: Term) -> None:
        nonlocal space, xi1, xi2
        space, xi1 = propagate_connection_updates(space, old, new, xi1)
        xi2 = xi2.rewrite(old, new)
        for parts in pending.values():
            parts[:] = [replace(t, old, new) for t in parts]
        for item in enc1 + enc2:
            item[1] = replace(item[1], old, new)

    trace: list[Action] = []
    try:
        for k, step in enumerate(candidate.steps, 1):
            if step.kind is not StepKind.CONCAT:
                continue
            t1, t2 = pending.pop(k)
            composed = compose_terms(t1, t2, xi1, nodes1[step.i - 1], nodes2[step.j - 1], embed)
            trace.append(Action(k, str(step), composed.branch, t1, t2, composed.term))
            space = set_message_payload(space, k, composed.term)
            if composed.branch != PAIR:
                rewrite_all(t1, composed.term)
            if composed.branch in (MERGE_CONNECTED, MERGE_UPDATE):
                rewrite_all(t2, composed.term)
    except CompositionError as exc:
        realized = merge_declarations(p1, p2, f"{p1.name}_{p2.name}_{candidate.index}", space.messages())
        return CompositionResult(candidate, space, realized, False, str(exc), SecurityProperty(), trace)

    realized = merge_declarations(p1, p2, f"{p1.name}_{p2.name}_{candidate.index}", space.messages())
    full = with_memory(space)
    reason = _first_unconstructable(full, realized)
    prop = security_property(full)

    images = frozenset(
        _translate(c, pos1, full) for c in xi1 if c.kind is Kind.COMPLETE
    ) | frozenset(
        _translate(c, pos2, full) for c in xi2 if c.kind is Kind.COMPLETE
    )
    clashes = structural_clashes(((loc, e) for loc, e in enc1), ((loc, e) for loc, e in enc2),
                                 ignore_identical=True)
    return CompositionResult(candidate, full, realized, reason is None, reason, prop, trace,
                             SecurityProperty(images), clashes)


def _first_unconstructable(space: KStrandSpace, realized: Protocol) -> Optional[str]:
    """Check every transmission of every participant strand, memory traffic included."""
    inverses = realized.inverse_keys()
    sources = {src: k for k, (src, _dst) in enumerate(space.message_edges(), 1)}
    for s in space.participant_strands():
        for idx, st in enumerate(s.trace, 1):
            if st.sign != POS:
                continue
            memory = memory_term_before(s, idx)
            if not constructable(st.payload, s.knowledge, memory, inverses):
                k = sources.get(NodeRef(s.name, idx))
                where = f"message {k}" if k is not None else f"memory node {idx}"
                return f"{where}: {s.name} cannot construct {format_term(st.payload)}"
    return None


def _step_key(r: CompositionResult):
    return r.candidate.kinds


def select_min_messages(results: list[CompositionResult]) -> CompositionResult:
    accepted = [r for r in results if r.accepted]
    if not accepted:
        raise ValueError("no accepted composition to select from")
    return min(accepted, key=lambda r: (r.message_count, _step_key(r)))


def select_first(results: list[CompositionResult]) -> CompositionResult:
    for r in results:
        if r.accepted:
            return r
    raise ValueError("no accepted composition to select from")


SELECTORS = {"min-messages": select_min_messages, "first": select_first}


@dataclass
class Summary:
    p1: Protocol
    p2: Protocol
    renamings: list
    generated: int
    filtered: int
    results: list

    @property
    def accepted(self) -> list[CompositionResult]:
        return [r for r in self.results if r.accepted]

    def select(self, strategy: str = "min-messages") -> Optional[CompositionResult]:
        try:
            return SELECTORS[strategy](self.results)
        except ValueError:
            return None


def _compose_job(args):
    candidate, p1, p2, embed = args
    return compose_candidate(candidate, p1, p2, embed)


def compose_all(p1: Protocol, p2: Protocol, embed: bool = True, jobs: int = 1,
                limit: Optional[int] = None, rename: bool = True) -> Summary:
    renamings: list[Renaming] = []
    if rename:
        p1, p2, renamings = rename_conflicts(p1, p2)
    generated = count_generated(len(p1.messages), len(p2.messages))
    candidates = list(filter_endpoints(generate(p1, p2), p1, p2))
    filtered = len(candidates)
    if limit is not None:
        candidates = candidates[:limit]
    work = [(c, p1, p2, embed) for c in candidates]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_compose_job, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        results = [_compose_job(w) for w in work]
    log.info("composed %d candidates, %d accepted", len(results), sum(r.accepted for r in results))
    return Summary(p1, p2, renamings, generated, filtered, results)
