import random
from itertools import product

from abdex import sat_check
from abdex.conditions import GlobalCondition, family_satisfies, make_clause, make_condition
from abdex.terms import cnull, const, onull


def cond(*clauses):
    return make_condition(clauses)


def test_forced_violation():
    c = cond([(onull(1), const("a"))])
    assert not sat_check([(onull(1), const("a"))], c)


def test_distinct_constants_never_merge():
    assert not sat_check([(const("a"), const("b"))], GlobalCondition())


def test_distinct_classes_satisfiable():
    c = cond([(cnull(1), onull(3))])
    assert sat_check([(cnull(1), onull(2))], c)


def brute_sat(equalities, condition, n_consts):
    """Assignment-search oracle over a small fresh-constant domain."""
    terms = sorted(
        {t for e in equalities for t in e} | condition.terms(), key=str
    )
    nulls = [t for t in terms if t.is_null()]
    domain = [const(f"d{i}") for i in range(n_consts)] + [
        t for t in terms if t.is_const()
    ]
    for combo in product(domain, repeat=len(nulls)):
        m = dict(zip(nulls, combo))

        def val(t):
            return m.get(t, t)

        if any(val(a) != val(b) for a, b in equalities):
            continue
        if all(
            any(val(a) != val(b) for a, b in clause) for clause in condition.clauses
        ):
            return True
    return False


def test_sat_check_agrees_with_brute_force():
    rng = random.Random(11)
    pool = [onull(1), onull(2), cnull(1), cnull(2), const("a"), const("b")]
    for _ in range(300):
        eqs = [
            (rng.choice(pool), rng.choice(pool)) for _ in range(rng.randint(0, 3))
        ]
        clauses = []
        for _ in range(rng.randint(0, 3)):
            lits = [
                (rng.choice(pool), rng.choice(pool))
                for _ in range(rng.randint(1, 2))
            ]
            clause = make_clause(lits)
            if clause:
                clauses.append(clause)
        condition = GlobalCondition(tuple(clauses))
        nulls = {t for e in eqs for t in e if t.is_null()} | {
            t for t in condition.terms() if t.is_null()
        }
        expected = brute_sat(eqs, condition, len(nulls) + 2)
        assert sat_check(eqs, condition) == expected, (eqs, condition)


def test_family_satisfaction_rules():
    # four-column example: the third tuple family violates both literals
    condition = cond([(onull(1), const("a")), (cnull(2), onull(1))])
    v = {cnull(1): const("b"), cnull(2): const("a")}
    copies = [{onull(1): const("a")}, {onull(1): const("b")}, {onull(1): const("c")}]
    assert not family_satisfies(v, copies, condition)
    v2 = {cnull(1): const("b"), cnull(2): const("c")}
    copies2 = [{onull(1): const("a")}, {onull(1): const("b")}]
    assert family_satisfies(v2, copies2, condition)


def test_open_null_disequality_is_per_copy():
    condition = cond([(onull(1), onull(2))])
    copies = [
        {onull(1): const("a"), onull(2): const("b")},
        {onull(1): const("b"), onull(2): const("a")},
    ]
    # copy 1's value of the first null equals copy 2's value of the second
    assert not family_satisfies({}, copies, condition)


def test_reflexive_literal_dropped_by_clause_builder():
    assert make_clause([(onull(1), onull(1))]) == ()
    assert make_clause([(onull(1), onull(1)), (onull(1), const("a"))]) == (
        (const("a"), onull(1)),
    )
