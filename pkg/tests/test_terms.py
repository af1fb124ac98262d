import pytest

from abdex import Fact, cnull, const, fact, onull, var
from abdex.terms import (
    ArityConflictError,
    EngineError,
    make_instance,
    make_table,
    schema_of,
    sorted_facts,
    term_key,
)


def test_term_kinds_are_disjoint():
    assert const("a") != var("a")
    assert onull(1) != cnull(1)
    assert const("1") != onull(1)


def test_term_rendering():
    assert const("a").render() == "a"
    assert onull(3).render() == "?o3"
    assert cnull(12).render() == "?c12"
    assert var("x").render() == "x"


def test_fact_rendering():
    f = fact("R", const("a"), onull(1))
    assert f.render() == "R(a, ?o1)"


def test_schema_conflict_detected():
    with pytest.raises(ArityConflictError):
        schema_of([fact("R", const("a")), fact("R", const("a"), const("b"))])


def test_instance_rejects_nulls():
    with pytest.raises(EngineError):
        make_instance([fact("R", onull(1))])


def test_table_rejects_variables():
    with pytest.raises(EngineError):
        make_table([fact("R", var("x"))])


def test_sorted_facts_is_deterministic():
    facts = [fact("S", const("b")), fact("R", const("z")), fact("R", const("a"))]
    ordered = sorted_facts(facts)
    assert [f.render() for f in ordered] == ["R(a)", "R(z)", "S(b)"]
    assert sorted_facts(reversed(facts)) == ordered


def test_term_key_orders_kinds():
    ks = [term_key(t) for t in (const("z"), onull(1), cnull(1), var("a"))]
    assert ks == sorted(ks)
