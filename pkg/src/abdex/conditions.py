"""Global conditions over semi-naive tables and their satisfiability checks.

A global condition is a conjunction of clauses; each clause is a
disjunction of disequalities between constants and nulls.  Open nulls
are revalued per copy of the table, so a disequality touching an open
null quantifies over every copy in a valuation family.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .terms import CNULL, CONST, ONULL, Term, term_key

Diseq = tuple[Term, Term]
Clause = tuple[Diseq, ...]


def _norm_diseq(a: Term, b: Term) -> Diseq:
    return (a, b) if term_key(a) <= term_key(b) else (b, a)


def make_clause(diseqs: Iterable[tuple[Term, Term]]) -> Clause:
    """Normalize a clause: drop reflexive literals, dedupe, sort.

    Returns the empty tuple when every literal was reflexive, i.e. the
    clause is an unsatisfiable contradiction.
    """
    out = {_norm_diseq(a, b) for a, b in diseqs if a != b}
    return tuple(sorted(out, key=lambda d: (term_key(d[0]), term_key(d[1]))))


@dataclass(frozen=True)
class GlobalCondition:
    clauses: tuple[Clause, ...] = ()

    def is_trivial(self) -> bool:
        return not self.clauses

    def terms(self) -> set[Term]:
        return {t for c in self.clauses for d in c for t in d}

    def render(self) -> str:
        lines = []
        for c in self.clauses:
            lines.append(" | ".join(f"{a.render()} != {b.render()}" for a, b in c))
        return "\n".join(lines) + ("\n" if lines else "")


TRIVIAL = GlobalCondition()


def make_condition(clauses: Iterable[Iterable[tuple[Term, Term]]]) -> GlobalCondition:
    normed = []
    for c in clauses:
        nc = make_clause(c)
        if not nc:
            raise ValueError("contradictory (empty) clause in global condition")
        normed.append(nc)
    return GlobalCondition(tuple(sorted(set(normed))))


class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict[Term, Term] = {}

    def find(self, x: Term) -> Term:
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: Term, b: Term) -> bool:
        """Merge; returns False when two distinct constants would collapse."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return True
        if ra.is_const() and rb.is_const():
            return False
        # keep a constant as the class representative when one exists
        if rb.is_const():
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def sat_check(
    equalities: Sequence[tuple[Term, Term]], condition: GlobalCondition
) -> bool:
    """Can the forced equalities coexist with the condition?

    Congruence closure over the equalities (failing when two distinct
    constants merge), then every clause needs one literal whose sides
    land in distinct classes: distinct classes are simultaneously
    realizable by globally distinct constants.
    """
    uf = _UnionFind()
    for a, b in equalities:
        if not uf.union(a, b):
            return False
    for clause in condition.clauses:
        if not any(uf.find(a) != uf.find(b) for a, b in clause):
            return False
    return True


def _family_sat_diseq(
    x: Term, y: Term, closed_val: dict[Term, Term], copies: Sequence[dict[Term, Term]]
) -> bool:
    """One disequality under a closed valuation and a family of open-copy valuations."""
    if term_key(x) > term_key(y):
        x, y = y, x
    # term_key orders const < onull < cnull
    if x.kind == CONST and y.kind == CONST:
        return x != y
    if x.kind == CONST and y.kind == ONULL:
        return all(v[y] != x for v in copies)
    if x.kind == CONST and y.kind == CNULL:
        return closed_val[y] != x
    if x.kind == ONULL and y.kind == ONULL:
        return all(vi[x] != vj[y] for vi in copies for vj in copies)
    if x.kind == ONULL and y.kind == CNULL:
        return all(closed_val[y] != v[x] for v in copies)
    return closed_val[x] != closed_val[y]


def family_satisfies(
    closed_val: dict[Term, Term],
    copies: Sequence[dict[Term, Term]],
    condition: GlobalCondition,
) -> bool:
    """Satisfaction of a condition by (closed valuation, open-copy family)."""
    return all(
        any(_family_sat_diseq(x, y, closed_val, copies) for x, y in clause)
        for clause in condition.clauses
    )
