import sys

import pytest
from hypothesis import strategies as st

from spcomp import corpus
from spcomp.terms import Atom, Enc, Func, Pair, Sort

ROLES = [Atom(n, Sort.ROLE) for n in ("A", "B", "S")]
NONCES = [Atom(n, Sort.NONCE) for n in ("Na", "Nb", "Nc")]
KEYS = [Atom(n, Sort.KEY) for n in ("K1", "K2", "K3")]
ATOMS = ROLES + NONCES + KEYS

atoms = st.sampled_from(ATOMS)
keys = st.sampled_from(KEYS)
funcs = st.sampled_from([Func.SK, Func.PK, Func.PVK, Func.H])


def terms_up_to(max_depth: int, leaves=atoms):
    """Random terms whose depth does not exceed ``max_depth``."""
    if max_depth == 0:
        return leaves
    sub = terms_up_to(max_depth - 1, leaves)
    return st.one_of(
        leaves,
        st.builds(Pair, sub, sub),
        st.builds(Enc, sub, funcs, keys),
    )


terms = terms_up_to(4)


@pytest.fixture(scope="session")
def woolam():
    return corpus.load("WooLamPi3")


@pytest.fixture(scope="session")
def yahalom():
    return corpus.load("LoweYahalom")


@pytest.fixture(scope="session")
def corpus_summary(woolam, yahalom):
    from spcomp.composer import compose_all
    return compose_all(woolam, yahalom)



@st.composite
def protocols(draw, max_messages=6):
    """Random well-formed protocols over the shared atom pool."""
    from spcomp.strands import Message, Protocol
    n = draw(st.integers(1, max_messages))
    msgs = []
    for _ in range(n):
        sender, receiver = draw(st.lists(st.sampled_from(ROLES), min_size=2, max_size=2, unique=True))
        msgs.append(Message(sender, receiver, draw(terms_up_to(3))))
    knowledge = {r.name: frozenset(draw(st.sets(atoms, max_size=4)) | {r}) for r in ROLES}
    return Protocol("R", tuple(ROLES), tuple(NONCES), tuple(KEYS), (), knowledge, frozenset(), tuple(msgs))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
