import pytest

from abdex import parse_facts, parse_mapping, parse_query
from abdex.generators import (
    GraphInput,
    gen_clique,
    gen_threecol_check,
    gen_threecol_eval,
    gen_threecol_existence,
    is_two_colorable,
    parse_graph,
)
from abdex.terms import EngineError
from helpers import brute_colorable


def graph(edges, verts=()):
    vs = sorted({v for e in edges for v in e} | set(verts))
    return GraphInput(tuple(vs), tuple(edges))


TRIANGLE = graph([("1", "2"), ("2", "3"), ("1", "3")])


def test_parse_graph_edge_list():
    g = parse_graph("a b\nb c\n% comment\nd\n")
    assert g.vertices == ("a", "b", "c", "d")
    assert g.edges == (("a", "b"), ("b", "c"))


def test_self_loop_rejected():
    with pytest.raises(EngineError):
        GraphInput(("a",), (("a", "a"),))


def test_two_colorability_matches_brute_force():
    cases = [
        graph([]),
        graph([("a", "b")]),
        TRIANGLE,
        graph([("1", "2"), ("2", "3"), ("3", "4"), ("4", "1")]),
        graph([("1", "2"), ("2", "3"), ("3", "1"), ("3", "4")]),
    ]
    for g in cases:
        assert is_two_colorable(g) == brute_colorable(g, 2)


def test_generated_artifacts_reparse():
    for case in (
        gen_threecol_existence(TRIANGLE),
        gen_threecol_check(TRIANGLE),
        gen_threecol_eval(TRIANGLE),
        gen_clique(TRIANGLE, 3),
    ):
        prog = parse_mapping(case.mapping)
        assert prog.is_annotated()
        parse_facts(case.facts)
        if case.candidate:
            parse_facts(case.candidate)
        if case.query:
            parse_query(case.query)


def test_existence_instance_shape():
    case = gen_threecol_existence(TRIANGLE)
    facts = parse_facts(case.facts)
    d_facts = [f for f in facts if f.rel == "D"]
    assert len(d_facts) == 6
    assert "not 2-colorable" in case.note


def test_existence_note_for_bipartite_graph():
    case = gen_threecol_existence(graph([("a", "b")]))
    assert "trivially true" in case.note


def test_clique_slot_pairs():
    case = gen_clique(TRIANGLE, 3)
    facts = parse_facts(case.facts)
    c0 = [f for f in facts if f.rel == "C0"]
    assert len(c0) == 6
    with pytest.raises(EngineError):
        gen_clique(TRIANGLE, 1)


def test_manifest_parameters():
    case = gen_threecol_check(TRIANGLE)
    assert case.manifest["problem"] == "three-col-check"
    assert sorted(case.manifest["vertices"]) == ["1", "2", "3"]
