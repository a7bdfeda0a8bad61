import pytest
from hypothesis import given, strategies as st

from spcomp.generator import (IncompatibleConcat, StepKind, count_filtered, count_generated,
                              filter_endpoints, generate, lattice_paths, realize, realize_messages)
from spcomp.spec_parser import parse_protocol

from oracles import brute_paths


def one_message(name, sender="A", receiver="B"):
    return parse_protocol(f"protocol {name}\nroles A, B\nknows A: A\n1. {sender} -> {receiver} : A\n")


@pytest.mark.parametrize("m,n", [(m, n) for m in range(5) for n in range(5)])
def test_count_matches_brute_force(m, n):
    assert count_generated(m, n) == len(brute_paths(m, n))


@pytest.mark.parametrize("m,n,expected", [(1, 1, 3), (2, 2, 13), (5, 5, 1683), (0, 4, 1)])
def test_known_counts(m, n, expected):
    assert count_generated(m, n) == expected


@pytest.mark.parametrize("m,n", [(1, 2), (3, 3), (2, 4)])
def test_paths_are_distinct_and_complete(m, n):
    paths = list(lattice_paths(m, n))
    assert len(paths) == len(set(paths)) == count_generated(m, n)
    assert {tuple(int(s.kind) for s in p) for p in paths} == brute_paths(m, n)


@given(st.integers(0, 6), st.integers(0, 6))
def test_recurrence(m, n):
    if m and n:
        assert count_generated(m, n) == (count_generated(m - 1, n) + count_generated(m, n - 1)
                                         + count_generated(m - 1, n - 1))
    else:
        assert count_generated(m, n) == 1


def test_order_is_take1_first():
    p, q = one_message("P"), one_message("Q")
    kinds = [c.kinds for c in generate(p, q)]
    assert kinds == [(0, 1), (1, 0), (2,)]


def test_steps_preserve_each_protocol_order(woolam, yahalom):
    for c in generate(woolam, yahalom):
        firsts = [s.i for s in c.steps if s.kind is not StepKind.TAKE2]
        seconds = [s.j for s in c.steps if s.kind is not StepKind.TAKE1]
        assert firsts == [1, 2, 3, 4, 5]
        assert seconds == [1, 2, 3, 4, 5]


def test_filter_drops_mismatched_concat():
    p, q = one_message("P"), one_message("Q", "B", "A")
    assert [c.kinds for c in filter_endpoints(generate(p, q), p, q)] == [(0, 1), (1, 0)]
    concat_only = list(generate(p, q))[2]
    with pytest.raises(IncompatibleConcat):
        realize_messages(concat_only, p, q)


def test_corpus_counts(woolam, yahalom):
    assert sum(1 for _ in generate(woolam, yahalom)) == 1683
    assert sum(1 for _ in filter_endpoints(generate(woolam, yahalom), woolam, yahalom)) == 408
    assert count_filtered(woolam, yahalom) == 408


def test_realize_message_count(woolam, yahalom):
    for c in filter_endpoints(generate(woolam, yahalom), woolam, yahalom):
        p = realize(c, woolam, yahalom)
        assert len(p.messages) == 10 - len(c.concats())
        assert p.name == f"WooLamPi3_LoweYahalom_{c.index}"
