import pytest
from hypothesis import given, settings

from spcomp.terms import (EMPTY, Atom, Enc, Func, Pair, Sort, TermError, atoms_of, canonicalize,
                          depth, format_term, is_encrypted, pair, rename_atom, replace, size,
                          subterm, subterms)

from conftest import atoms, terms, terms_up_to
from oracles import tree_positions

A, B = Atom("A", Sort.ROLE), Atom("B", Sort.ROLE)
Na = Atom("Na", Sort.NONCE)
K = Atom("K", Sort.KEY)


def test_pair_is_right_associated():
    assert pair(A, B, Na) == Pair(A, Pair(B, Na))
    assert pair(A) == A
    assert pair() is EMPTY


def test_empty_cannot_nest():
    with pytest.raises(TermError):
        Pair(EMPTY, A)
    with pytest.raises(TermError):
        Enc(EMPTY, Func.SK, K)


@pytest.mark.parametrize("small,big,expected", [
    (A, A, True),
    (A, Pair(B, A), True),
    (Na, Enc(Pair(A, Na), Func.SK, K), True),
    (K, Enc(Na, Func.SK, K), True),
    (Pair(A, B), Pair(A, Pair(B, Na)), False),
    (Enc(Na, Func.SK, K), Enc(Na, Func.PK, K), False),
])
def test_subterm_examples(small, big, expected):
    assert subterm(small, big) is expected


@given(terms, terms)
@settings(max_examples=300)
def test_subterm_matches_subtree_oracle(t1, t2):
    assert subterm(t1, t2) == (t1 in tree_positions(t2).values())


@given(terms)
def test_subterms_enumerates_every_position(t):
    assert sorted(map(format_term, subterms(t))) == sorted(map(format_term, tree_positions(t).values()))
    assert size(t) == len(tree_positions(t))


@given(terms, terms, terms)
def test_subterm_is_transitive(a, b, c):
    if subterm(a, b) and subterm(b, c):
        assert subterm(a, c)


@given(terms)
def test_depth_bounds_size(t):
    assert size(t) <= 2 ** (depth(t) + 1) - 1


@given(terms)
def test_canonicalize_is_idempotent_and_keeps_shape(t):
    c = canonicalize(t)
    assert canonicalize(c) == c
    assert depth(c) == depth(t)
    assert {a.name for a in atoms_of(c)} <= {"r", "n", "k"}


@given(terms, atoms)
def test_rename_to_same_sort_fresh_atom_is_invertible(t, a):
    fresh = Atom(a.name + "'", a.sort)
    renamed = rename_atom(t, a, fresh)
    assert a not in atoms_of(renamed)
    assert rename_atom(renamed, fresh, a) == t
    assert canonicalize(renamed) == canonicalize(t)


def test_rename_rejects_sort_change():
    with pytest.raises(TermError, match="sorts differ"):
        rename_atom(Na, Na, Atom("X", Sort.KEY))


@given(terms, terms)
def test_replace_removes_old_when_new_avoids_it(t, old):
    new = Atom("Fresh", Sort.NONCE)
    assert not subterm(old, replace(t, old, new))


def test_is_encrypted():
    assert is_encrypted(Enc(A, Func.H, K))
    assert not is_encrypted(Pair(A, B))


@pytest.mark.parametrize("t,text", [
    (pair(A, B, Na), "A, B, Na"),
    (Pair(Pair(A, B), Na), "(A, B), Na"),
    (Enc(pair(A, Na), Func.PK, K), "{A, Na}pk(K)"),
    (EMPTY, "."),
])
def test_format(t, text):
    assert format_term(t) == text


@given(terms_up_to(6))
@settings(max_examples=50)
def test_deep_terms_respect_depth_bound(t):
    assert depth(t) <= 6
