import random
from itertools import product

import pytest

from abdex import apply_valuation, find_homomorphisms, gaifman_partition, isomorphic
from abdex.terms import EngineError, Fact, cnull, const, fact, onull, var


def test_single_atom_match():
    homs = find_homomorphisms([fact("R", var("x"), var("y"))], [fact("R", const("a"), const("b"))])
    assert homs == [{var("x"): const("a"), var("y"): const("b")}]


def test_repeated_variable_blocks():
    homs = find_homomorphisms([fact("R", var("x"), var("x"))], [fact("R", const("a"), const("b"))])
    assert homs == []


def brute_homs(pattern, target, frozen=frozenset()):
    """Exhaustive-enumeration oracle: try every assignment of pattern terms."""
    pat_terms = sorted(
        {t for f in pattern for t in f.args if not t.is_const() and t not in frozen},
        key=str,
    )
    tgt_terms = sorted({t for f in target for t in f.args}, key=str)
    found = []
    for combo in product(tgt_terms, repeat=len(pat_terms)):
        m = dict(zip(pat_terms, combo))
        image = {Fact(f.rel, tuple(m.get(a, a) for a in f.args)) for f in pattern}
        if image <= set(target):
            found.append(m)
    return found


def test_shared_null_join_counted_by_oracle():
    pattern = [fact("S", var("x"), var("z")), fact("S", var("y"), var("z"))]
    target = [fact("S", const("a"), onull(1)), fact("S", const("b"), onull(1))]
    homs = find_homomorphisms(pattern, target)
    assert len(homs) == 4
    oracle = brute_homs(pattern, target)
    assert {tuple(sorted((k.render(), v.render()) for k, v in h.items())) for h in homs} == {
        tuple(sorted((k.render(), v.render()) for k, v in h.items())) for h in oracle
    }


def test_hom_images_contained_in_target():
    rng = random.Random(7)
    consts = [const(c) for c in "ab"]
    for _ in range(30):
        target = {
            Fact("R", (rng.choice(consts), rng.choice(consts))) for _ in range(3)
        }
        pattern = [fact("R", var("x"), var("y")), fact("R", var("y"), var("x"))]
        for h in find_homomorphisms(pattern, target):
            image = {Fact(f.rel, tuple(h.get(a, a) for a in f.args)) for f in pattern}
            assert image <= target


def test_frozen_terms_stay_fixed():
    pattern = [fact("R", var("x"), var("y"))]
    target = [fact("R", const("a"), const("b")), fact("R", const("c"), const("b"))]
    homs = find_homomorphisms(pattern, target, frozen=[var("x")])
    assert homs == []


def test_apply_valuation_simple():
    table = [fact("R", const("a"), onull(1))]
    assert apply_valuation(table, {onull(1): const("b")}) == {fact("R", const("a"), const("b"))}


def test_apply_valuation_set_collapse():
    table = [fact("R", cnull(1)), fact("R", onull(1))]
    grounded = apply_valuation(table, {cnull(1): const("a"), onull(1): const("a")})
    assert grounded == {fact("R", const("a"))}


def test_apply_valuation_missing_null_errors():
    with pytest.raises(EngineError):
        apply_valuation([fact("R", onull(1))], {})


def test_apply_valuation_four_column_example():
    table = [fact("R", const("a"), onull(1), cnull(1), cnull(2))]
    v = {onull(1): const("a"), cnull(1): const("b"), cnull(2): const("c")}
    assert apply_valuation(table, v) == {
        fact("R", const("a"), const("a"), const("b"), const("c"))
    }


def test_gaifman_partition_head_example():
    p, t, e = var("p"), var("t"), var("e")
    head = [fact("PT", p, t), fact("TE", t, e), fact("PR", p)]
    blocks = gaifman_partition(head, frozen=[p, e])
    rendered = [sorted(f.render() for f in b) for b in blocks]
    assert sorted(rendered) == [["PR(p)"], ["PT(p, t)", "TE(t, e)"]]


def test_gaifman_partition_ground_singletons():
    blocks = gaifman_partition([fact("R", const("a")), fact("S", const("b"))])
    assert [[f.render() for f in b] for b in blocks] == [["R(a)"], ["S(b)"]]


def test_gaifman_partition_connected_component_oracle():
    x, y, z = var("x"), var("y"), var("z")
    table = [fact("S", x, z), fact("T", z, y), fact("T", x, y)]
    blocks = gaifman_partition(table, frozen=[x, y])
    rendered = sorted(sorted(f.render() for f in b) for b in blocks)
    assert rendered == [["S(x, z)", "T(z, y)"], ["T(x, y)"]]


def test_gaifman_partition_properties():
    rng = random.Random(3)
    terms = [const("a"), onull(1), onull(2), onull(3), cnull(1)]
    for _ in range(40):
        table = {
            Fact("R", (rng.choice(terms), rng.choice(terms))) for _ in range(4)
        }
        blocks = gaifman_partition(table)
        flat = [f for b in blocks for f in b]
        assert len(flat) == len(table) and set(flat) == set(table)
        null_homes = {}
        for i, b in enumerate(blocks):
            for f in b:
                for a in f.args:
                    if a.is_null():
                        null_homes.setdefault(a, set()).add(i)
        assert all(len(homes) == 1 for homes in null_homes.values())
        shuffled = list(table)
        rng.shuffle(shuffled)
        again = gaifman_partition(shuffled)
        assert [set(b) for b in again] == [set(b) for b in blocks]


def test_isomorphic_examples():
    assert isomorphic([fact("R", onull(1))], [fact("R", onull(2))])
    assert not isomorphic([fact("R", onull(1))], [fact("R", cnull(1))])
    assert not isomorphic(
        [fact("R", onull(1), onull(1))], [fact("R", onull(1), onull(2))]
    )
