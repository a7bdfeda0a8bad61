"""Acceptance suite: one PASS/FAIL line per criterion.

Run directly (``python tests/test_acceptance.py``) or through pytest, which
prints the same lines in its terminal summary.
"""

import filecmp
import random
import sys
import tempfile
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import bfs_derivable, brute_paths, max_concat_matching, tree_positions  # noqa: E402
from spcomp import corpus  # noqa: E402
from spcomp.cli import main as cli_main  # noqa: E402
from spcomp.composer import compose_all  # noqa: E402
from spcomp.connections import complete_connections  # noqa: E402
from spcomp.generator import count_generated, filter_endpoints, generate  # noqa: E402
from spcomp.independence import (check_secrecy_independence, check_structural_independence,  # noqa: E402
                                 rename_conflicts)
from spcomp.memory import constructable, gen_memory_strands  # noqa: E402
from spcomp.strands import NEG, POS, Classifier, KStrand, SignedTerm, to_strand_space  # noqa: E402
from spcomp.terms import EMPTY, Atom, Enc, Func, Pair, Sort, depth, format_term, subterm, subterms  # noqa: E402

RESULTS: list[str] = []
SEED = 20240601

ATOMS = ([Atom(n, Sort.ROLE) for n in "ABS"] + [Atom(n, Sort.NONCE) for n in ("Na", "Nb")]
         + [Atom(n, Sort.KEY) for n in ("K1", "K2", "K3")])
KEYS = [a for a in ATOMS if a.sort is Sort.KEY]
INVERSES = {KEYS[0]: KEYS[1], KEYS[1]: KEYS[0]}


def random_term(rng, max_depth):
    if max_depth == 0 or rng.random() < 0.3:
        return rng.choice(ATOMS)
    if rng.random() < 0.5:
        return Pair(random_term(rng, max_depth - 1), random_term(rng, max_depth - 1))
    func = rng.choice([Func.SK, Func.PK, Func.PVK, Func.H])
    return Enc(random_term(rng, max_depth - 1), func, rng.choice(KEYS))


def report(number, title, ok, detail):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    RESULTS.append(line)
    print(line)
    return ok


@pytest.fixture(scope="module")
def pair():
    return corpus.load("WooLamPi3"), corpus.load("LoweYahalom")


@pytest.fixture(scope="module")
def summary(pair):
    start = time.perf_counter()
    s = compose_all(*pair)
    return s, time.perf_counter() - start


def test_c01_generation_count(pair):
    start = time.perf_counter()
    n = sum(1 for _ in generate(*pair))
    elapsed = time.perf_counter() - start
    assert report(1, "generation count", n == 1683 and elapsed < 1.0, f"{n} candidates in {elapsed:.3f}s")


def test_c02_endpoint_filter(pair):
    n = sum(1 for _ in filter_endpoints(generate(*pair), *pair))
    assert report(2, "endpoint filter", n == 408, f"{n} survive")


def test_c03_connection_inventory(pair):
    woolam, yahalom = pair
    cw = list(complete_connections(to_strand_space(woolam)))
    cy = list(complete_connections(to_strand_space(yahalom)))
    inner = format_term(cw[0].pre.term) if cw else None
    ok = len(cw) == 1 and len(cy) == 0 and inner == "{Nb}sk(Kas)"
    assert report(3, "connection inventory", ok, f"WooLamPi3={len(cw)} LoweYahalom={len(cy)} inner={inner}")


def test_c04_independence_workflow(pair):
    before = check_secrecy_independence(*pair)
    p1, p2, renamings = rename_conflicts(*pair)
    after = check_secrecy_independence(p1, p2) + check_structural_independence(p1, p2)
    names = [(r.old.name, r.new.name) for r in renamings]
    ok = {format_term(v.secret) for v in before} == {"Nb"} and names == [("Nb", "Nb'")] and not after
    assert report(4, "independence workflow", ok,
                  f"{len(before)} violation(s) on Nb, renamed {names}, {len(after)} after")


def test_c05_connection_preservation(summary):
    s, elapsed = summary
    accepted = s.accepted
    missing = sum(1 for r in accepted if r.missing_connections())
    clashes = sum(1 for r in accepted if r.clashes)
    # the corpus has exactly one complete connection, so every result carries one image
    imaged = sum(1 for r in accepted if len(r.images) == 1)
    ok = accepted and missing == 0 and clashes == 0 and imaged == len(accepted) and elapsed < 30
    assert report(5, "connection preservation", ok,
                  f"{len(accepted)} accepted, {missing} missing an image, {clashes} with clashes, "
                  f"pipeline {elapsed:.1f}s")


def test_c06_count_oracle():
    mismatches = [(m, n) for m in range(7) for n in range(7)
                  if count_generated(m, n) != len(brute_paths(m, n))]
    recurrence = all(count_generated(m, n) == count_generated(m - 1, n) + count_generated(m, n - 1)
                     + count_generated(m - 1, n - 1) for m in range(1, 7) for n in range(1, 7))
    boundary = all(count_generated(k, 0) == count_generated(0, k) == 1 for k in range(7))
    ok = not mismatches and recurrence and boundary and count_generated(2, 2) == 13 and count_generated(1, 1) == 3
    assert report(6, "count oracle", ok, f"m,n<=6 mismatches={mismatches}, D(2,2)={count_generated(2, 2)}")


def test_c07_subterm_oracle():
    rng = random.Random(SEED)
    disagreements = 0
    hits = 0
    for _ in range(1000):
        big = random_term(rng, 6)
        small = rng.choice(list(subterms(big))) if rng.random() < 0.5 else random_term(rng, 3)
        expected = small in tree_positions(big).values()
        hits += expected
        disagreements += subterm(small, big) != expected
        assert depth(big) <= 6
    assert report(7, "sub-term oracle", disagreements == 0,
                  f"1000 pairs, {hits} related, {disagreements} disagreements")


def test_c08_derivability_oracle():
    rng = random.Random(SEED + 1)
    disagreements = 0
    positives = 0
    for _ in range(500):
        knowledge = [random_term(rng, 3) for _ in range(rng.randint(1, 5))]
        if rng.random() < 0.5:
            parts = [t for k in knowledge for t in subterms(k)]
            target = rng.choice(parts)
        else:
            target = random_term(rng, 4)
        expected = bfs_derivable(target, knowledge, INVERSES)
        positives += expected
        disagreements += constructable(target, knowledge, EMPTY, INVERSES) != expected
    assert report(8, "derivability oracle", disagreements == 0,
                  f"500 instances, {positives} derivable, {disagreements} disagreements")


def _shape_ok(s):
    pair = gen_memory_strands(s)
    part, mem = pair.participant_strand.trace, pair.memory_strand.trace
    receptions = sum(1 for x in s.trace if x.sign == NEG)
    mk = [x for x in part if isinstance(x.payload, Enc) and x.payload.func is Func.MK]
    return (len(part) == len(s.trace) + 2 * receptions and len(mem) == 2 * receptions
            and len(mk) == len(mem)
            and all(a.payload == b.payload and a.sign != b.sign for a, b in zip(mk, mem)))


def test_c09_algorithm_shape(pair):
    strands = [s for p in pair for s in to_strand_space(p).strands]
    rng = random.Random(SEED + 2)
    for _ in range(200):
        who = rng.choice(ATOMS[:3])
        trace = tuple(SignedTerm(rng.choice([POS, NEG]), random_term(rng, 3)) for _ in range(rng.randint(0, 8)))
        strands.append(KStrand(frozenset({who}), Classifier.PARTICIPANT, who, trace))
    bad = sum(1 for s in strands if not _shape_ok(s))
    assert report(9, "memory strand shape", bad == 0, f"{len(strands)} strands, {bad} malformed")


def test_c10_min_messages(pair, summary):
    s, _ = summary
    chosen = s.select("min-messages")
    expected = 10 - max_concat_matching(*pair)
    got = chosen.message_count if chosen else None
    assert report(10, "min-messages selection", got == expected == 7, f"selected {got}, oracle {expected}")


def test_c11_determinism():
    with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
        for out in (a, b):
            cli_main(["compose", "corpus:WooLamPi3", "corpus:LoweYahalom", "-o", out, "--jobs", "2"])
        names = sorted(p.name for p in Path(a).iterdir())
        _, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
        same = names == sorted(p.name for p in Path(b).iterdir()) and not mismatch and not errors
    assert report(11, "determinism", same, f"{len(names)} files compared byte for byte")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
