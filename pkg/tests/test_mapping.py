import random

import pytest

from abdex import (
    affected_positions,
    annotation_cardinality,
    annotation_density,
    check_safety,
    derive_views,
    is_gav_reducible,
    parse_mapping,
    translate_tgds,
)
from abdex.terms import EngineError
from helpers import random_tgd_program

EX9 = """
abd: R(x, y) <-> T@1(x, z), T@1(y, z), T@2(x, y).
abd: S(x, x), R(x, x) <-> V@1(x).
aegd: T@1(x, y), V@1(x) -> x = y.
"""

THM2_SET = """
abd: V(x) <-> B@1(x, v), C@1(x, v).
abd: E0(x, y) <-> E@1(x, y).
abd: D(z, v) <-> B@1(x, z), C@1(y, v), E@1(x, y).
"""

THM3_SET = """
abd: D(z, v) <-> B@1(x, z), C@1(y, v), E@1(x, y).
abd: V(x, v) <-> B@2(x, v).
abd: V(x, v) <-> C@2(x, v).
"""


def test_density_running_example():
    per, overall = annotation_density(parse_mapping(EX9))
    assert per == {"T": 2, "V": 1} and overall == 2


def test_density_single_abd():
    _, overall = annotation_density(parse_mapping("abd: R(x) <-> S@1(x)."))
    assert overall == 1


def test_density_reduction_sets():
    _, overall = annotation_density(parse_mapping(THM2_SET))
    assert overall == 2
    per3, overall3 = annotation_density(parse_mapping(THM3_SET))
    assert overall3 == 1


def test_cardinality_running_example():
    per, overall = annotation_cardinality(parse_mapping(EX9))
    assert per == {"T": 2, "V": 1} and overall == 2


def test_cardinality_reduction_set():
    _, overall = annotation_cardinality(parse_mapping(THM3_SET))
    assert overall == 2


def test_cardinality_empty_program():
    prog = parse_mapping("tgd: R(x) -> S(x).")
    assert annotation_cardinality(prog) == ({"S": 0}, 0)


def test_affected_positions_running_example():
    assert affected_positions(parse_mapping(EX9)) == {("T", 1, 2)}


def test_affected_positions_without_existentials():
    assert affected_positions(parse_mapping("abd: R(x, y) <-> S@1(x, y).")) == set()


def test_affected_positions_of_translated_intro():
    prog = translate_tgds(parse_mapping("tgd: P(p, e) -> PC(p, cc), CE(cc, e)."))
    assert affected_positions(prog) == {("PC", 1, 2), ("CE", 1, 1)}


def test_safety_running_example():
    assert check_safety(parse_mapping(EX9)).safe


def test_unsafe_aegd_on_affected_position():
    prog = parse_mapping(
        "abd: Emp0(ssn, name) <-> Emp@1(eid, name).\n"
        "aegd: Emp@1(eid, name1), Emp@1(eid, name2) -> name1 = name2.\n"
    )
    report = check_safety(prog)
    assert not report.safe and len(report.offending) == 1


def test_safe_without_repeated_variables():
    prog = parse_mapping(
        "abd: R(x) <-> S@1(x, z).\naegd: S@1(x, y) -> x = y.\n"
    )
    assert check_safety(prog).safe


def test_gav_reducible_examples():
    shared = parse_mapping(
        "tgd: P(p, e) -> PE(p, e).\n"
        "tgd: PT(p, t) -> PE(p, eid), TM(eid, tid).\n"
    )
    assert not is_gav_reducible(shared.tgds)
    full = parse_mapping("tgd: R(x, y) -> S(x, y).")
    assert is_gav_reducible(full.tgds)
    split = parse_mapping("tgd: R(x, y) -> S(x, z), V(x, w).")
    assert is_gav_reducible(split.tgds)


def test_translation_splits_head_blocks():
    prog = translate_tgds(parse_mapping("tgd: P(p, e) -> PT(p, t), TE(t, e), PR(p)."))
    rendered = sorted(d.render() for d in prog.abds)
    assert rendered == [
        "abd: P(p, e) <-> PR@1(p).",
        "abd: P(p, e) <-> PT@1(p, t), TE@1(t, e).",
    ]


def test_translation_of_full_tgd_is_single_block_per_atom():
    prog = translate_tgds(parse_mapping("tgd: R(x, y) -> S(x, y), V(y)."))
    assert len(prog.abds) == 2


def test_translation_of_intro_keeps_connected_block_together():
    prog = translate_tgds(parse_mapping("tgd: P(p, e) -> PC(p, cc), CE(cc, e)."))
    assert len(prog.abds) == 1 and len(prog.abds[0].head) == 2


def test_translation_density_is_one_on_random_programs():
    rng = random.Random(5)
    for _ in range(60):
        prog = random_tgd_program(rng)
        out = translate_tgds(prog)
        _, overall = annotation_density(out)
        assert overall == 1


def test_translation_expands_egds_over_annotation_product():
    safe = parse_mapping(
        "tgd: R(x) -> S(x, z).\n"
        "tgd: P(x) -> S(x, w).\n"
        "egd: S(x, y1), S(x, y2) -> y1 = y2.\n"
    )
    out = translate_tgds(safe)  # join column is unaffected: stays safe
    assert len(out.aegds) == 4  # two annotations per body atom


def test_translation_rejects_join_on_affected_position():
    prog = parse_mapping(
        "tgd: R(x) -> S(x, z).\n"
        "tgd: P(x) -> S(x, w).\n"
        "egd: S(x1, y), S(x2, y) -> x1 = x2.\n"
    )
    with pytest.raises(EngineError):
        translate_tgds(prog)


def test_translation_warns_on_unreflected_egd():
    prog = parse_mapping(
        "tgd: R(x) -> S(x).\negd: W(x, y) -> x = y.\n"
    )
    with pytest.warns(UserWarning):
        out = translate_tgds(prog)
    assert not out.aegds


def test_views():
    prog = parse_mapping(EX9)
    views = derive_views(prog)
    assert views.forward_tgds[0].render() == "tgd: R(x, y) -> T(x, z), T(y, z), T(x, y)."
    assert views.backward[0].head == prog.abds[0].head
    renamed = {views.diamond_rename[k] for k in views.diamond_rename}
    assert renamed == {"T_1", "T_2", "V_1"}


def test_gav_reducibility_matches_split_structure():
    # when reducible, every existential sits in exactly one atom of the
    # forward view after splitting, checked constructively
    prog = parse_mapping("abd: R(x, y) <-> S@1(x, z), V@2(x, w).")
    views = derive_views(prog)
    assert is_gav_reducible(views.forward_tgds)
    from abdex.homs import gaifman_partition
    from abdex.mapping import atom_vars

    for t in views.forward_tgds:
        blocks = gaifman_partition([a.fact() for a in t.head], frozen=atom_vars(t.body))
        for block in blocks:
            for v in t.existential_vars:
                assert sum(1 for f in block for a in f.args if a == v) <= 1
