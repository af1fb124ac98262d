"""The three-step annotated chase and the standard oblivious chase.

Step 1 fires every abd body match once, inventing fresh open nulls for
head-only variables and labeling produced facts with their atoms'
annotations.  Step 2 runs the aegds to fixpoint, merging nulls into
fresh closed nulls (or constants) and failing on a constant clash.
Step 3 enumerates head-to-body triggers and either emits a
disequality clause per unmatched reverse trigger or fails when a
clause degenerates to a contradiction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable

from .conditions import GlobalCondition, make_clause
from .homs import exists_extension, find_homomorphisms
from .mapping import Abd, Aegd, Egd, MappingProgram, Tgd, annotation_density
from .terms import (
    CNULL,
    ONULL,
    Fact,
    Labeling,
    Term,
    cnull,
    fact_key,
    merge_labels,
    onull,
    sorted_facts,
    term_key,
)


@dataclass
class ChaseOutcome:
    ok: bool
    table: frozenset[Fact] = frozenset()
    condition: GlobalCondition = GlobalCondition()
    labels: Labeling = field(default_factory=dict)
    t1: frozenset[Fact] = frozenset()
    t1_labels: Labeling = field(default_factory=dict)
    t2: frozenset[Fact] = frozenset()
    t2_labels: Labeling = field(default_factory=dict)
    phase: str | None = None  # forward | egd | backward on failure
    witness: str | None = None
    heuristic: bool = False  # density > 1: result not authoritative


class ChaseFailure(Exception):
    def __init__(self, phase: str, witness: str):
        self.phase = phase
        self.witness = witness
        super().__init__(f"{phase} phase failed: {witness}")


def _ordered(items: list, reverse: bool) -> list:
    return list(reversed(items)) if reverse else items


def forward_chase(
    instance: Iterable[Fact], prog: MappingProgram, reverse_order: bool = False
) -> tuple[frozenset[Fact], Labeling]:
    """Oblivious forward step: one firing per (abd, body homomorphism)."""
    I = frozenset(instance)
    facts: set[Fact] = set()
    labels: Labeling = {}
    counter = 0
    for abd in _ordered(list(prog.abds), reverse_order):
        body = [a.fact() for a in abd.body]
        homs = find_homomorphisms(body, I)
        for h in _ordered(homs, reverse_order):
            ext = dict(h)
            for z in sorted(abd.head_only_vars, key=term_key):
                counter += 1
                ext[z] = onull(counter)
            for atom in abd.head:
                f = Fact(atom.rel, tuple(ext.get(t, t) for t in atom.args))
                facts.add(f)
                merge_labels(labels, f, [atom.annotation])
    return frozenset(facts), labels


def _substitute(
    facts: set[Fact], labels: Labeling, old: Term, new: Term
) -> tuple[set[Fact], Labeling]:
    out_facts: set[Fact] = set()
    out_labels: Labeling = {}
    for f in facts:
        g = Fact(f.rel, tuple(new if a == old else a for a in f.args))
        out_facts.add(g)
        merge_labels(out_labels, g, labels[f])
    return out_facts, out_labels


def _aegd_triggers(
    aegd: Aegd, facts: set[Fact], labels: Labeling
) -> list[dict[Term, Term]]:
    """Joint homomorphisms of the aegd body into the table, respecting labels."""
    atoms = list(aegd.body)
    by_atom: list[list[Fact]] = []
    for a in atoms:
        cands = [
            f
            for f in sorted_facts(facts)
            if f.rel == a.rel and a.annotation in labels.get(f, frozenset())
        ]
        if not cands:
            return []
        by_atom.append(cands)

    from .homs import match_args

    out: list[dict[Term, Term]] = []

    def rec(i: int, binding: dict[Term, Term]) -> None:
        if i == len(atoms):
            out.append(binding)
            return
        for f in by_atom[i]:
            b = match_args(atoms[i].args, f.args, binding, frozenset())
            if b is not None:
                rec(i + 1, b)

    rec(0, {})
    return out


def egd_chase(
    t1: Iterable[Fact],
    labels: Labeling,
    aegds: list[Aegd],
    reverse_order: bool = False,
) -> tuple[frozenset[Fact], Labeling]:
    """Aegd fixpoint; raises ChaseFailure on a constant clash."""
    facts = set(t1)
    labs = dict(labels)
    counter = 0
    changed = True
    while changed:
        changed = False
        for aegd in _ordered(list(aegds), reverse_order):
            for h in _ordered(_aegd_triggers(aegd, facts, labs), reverse_order):
                x = h.get(aegd.left, aegd.left)
                y = h.get(aegd.right, aegd.right)
                if x == y:
                    continue
                if x.is_const() and y.is_const():
                    raise ChaseFailure(
                        "egd",
                        f"{aegd.render()} equates constants "
                        f"{x.render()} and {y.render()}",
                    )
                if x.is_const() or y.is_const():
                    c, n = (x, y) if x.is_const() else (y, x)
                    facts, labs = _substitute(facts, labs, n, c)
                else:
                    counter += 1
                    fresh = cnull(counter)
                    facts, labs = _substitute(facts, labs, x, fresh)
                    facts, labs = _substitute(facts, labs, y, fresh)
                changed = True
                break
            if changed:
                break
    return frozenset(facts), labs


def _compatible(a: Term, b: Term) -> bool:
    return a == b or a.is_null() or b.is_null()


def backward_chase(
    t2: Iterable[Fact],
    labels: Labeling,
    instance: Iterable[Fact],
    prog: MappingProgram,
    reverse_order: bool = False,
) -> GlobalCondition:
    """Reverse-trigger sweep building the global condition.

    A trigger picks one label-respecting match per head atom; matches
    may disagree on a shared variable only when a null is involved.
    When the instantiated body has no homomorphism into the source
    instance, the conjunction of cross-match equalities is negated
    into one clause; an empty clause fails the chase.
    """
    I = frozenset(instance)
    T = frozenset(t2)
    clauses: set = set()
    fresh_counter = [0]

    for abd in _ordered(list(prog.abds), reverse_order):
        atoms = list(abd.head)
        cand_lists = []
        for a in atoms:
            cands = [
                f
                for f in sorted_facts(T)
                if f.rel == a.rel and a.annotation in labels.get(f, frozenset())
            ]
            cand_lists.append(cands)
        if any(not c for c in cand_lists):
            continue
        head_vars = sorted(
            {t for a in atoms for t in a.args if t.is_var()}, key=term_key
        )
        for combo in product(*[_ordered(c, reverse_order) for c in cand_lists]):
            per_atom: list[dict[Term, Term]] = []
            ok = True
            for a, f in zip(atoms, combo):
                h: dict[Term, Term] = {}
                for p, v in zip(a.args, f.args):
                    if p.is_const():
                        if p != v:
                            ok = False
                            break
                    elif p in h and h[p] != v:
                        ok = False
                        break
                    else:
                        h[p] = v
                if not ok:
                    break
                per_atom.append(h)
            if not ok:
                continue
            values: dict[Term, list[Term]] = {}
            for h in per_atom:
                for k, v in h.items():
                    values.setdefault(k, []).append(v)
            if any(
                not _compatible(a, b)
                for vs in values.values()
                for i, a in enumerate(vs)
                for b in vs[i + 1 :]
            ):
                continue
            # combined map: agreement wins, else a constant, else first match
            h_joint: dict[Term, Term] = {}
            for k, vs in values.items():
                consts = [v for v in vs if v.is_const()]
                h_joint[k] = consts[0] if consts else vs[0]
            pattern = []
            ext = dict(h_joint)
            for y in sorted(abd.body_only_vars, key=term_key):
                fresh_counter[0] += 1
                ext[y] = Term(ONULL, 10_000_000 + fresh_counter[0])
            for a in abd.body:
                pattern.append(Fact(a.rel, tuple(ext.get(t, t) for t in a.args)))
            if exists_extension(pattern, I, {}):
                continue
            equalities = []
            for x in head_vars:
                vs = values.get(x, [])
                for i in range(len(vs)):
                    for j in range(i + 1, len(vs)):
                        equalities.append((vs[i], vs[j]))
            clause = make_clause(equalities)
            if not clause:
                desc = ", ".join(f.render() for f in combo)
                raise ChaseFailure(
                    "backward",
                    f"trigger {{{desc}}} for {abd.render()} has no source match "
                    "and only reflexive equalities",
                )
            clauses.add(clause)
    return GlobalCondition(tuple(sorted(clauses)))


def annotated_chase(
    instance: Iterable[Fact], prog: MappingProgram, reverse_order: bool = False
) -> ChaseOutcome:
    """Forward, egd and backward steps composed into a universal representative."""
    _, density = annotation_density(prog)
    heuristic = density > 1
    t1, l1 = forward_chase(instance, prog, reverse_order)
    try:
        t2, l2 = egd_chase(t1, l1, prog.aegds, reverse_order)
    except ChaseFailure as e:
        return ChaseOutcome(
            ok=False, t1=t1, t1_labels=l1, phase=e.phase, witness=e.witness,
            heuristic=heuristic,
        )
    try:
        cond = backward_chase(t2, l2, instance, prog, reverse_order)
    except ChaseFailure as e:
        return ChaseOutcome(
            ok=False, t1=t1, t1_labels=l1, t2=t2, t2_labels=l2,
            phase=e.phase, witness=e.witness, heuristic=heuristic,
        )
    return ChaseOutcome(
        ok=True, table=t2, condition=cond, labels=l2,
        t1=t1, t1_labels=l1, t2=t2, t2_labels=l2, heuristic=heuristic,
    )


# ---------------------------------------------------------------------------
# standard OWA chase for unidirectional programs


def owa_chase(
    instance: Iterable[Fact], tgds: list[Tgd], egds: list[Egd]
) -> frozenset[Fact]:
    """Oblivious source-to-target chase, then the standard egd chase.

    Raises ChaseFailure on an egd constant clash.  Invented nulls are
    plain labeled nulls (carried as open nulls; the kind is irrelevant
    under the single-valuation semantics of naive tables).
    """
    I = frozenset(instance)
    facts: set[Fact] = set()
    counter = 0
    for tgd in tgds:
        body = [a.fact() for a in tgd.body]
        for h in find_homomorphisms(body, I):
            ext = dict(h)
            for z in sorted(tgd.existential_vars, key=term_key):
                counter += 1
                ext[z] = onull(counter)
            for atom in tgd.head:
                facts.add(Fact(atom.rel, tuple(ext.get(t, t) for t in atom.args)))

    changed = True
    while changed:
        changed = False
        for egd in egds:
            body = [a.fact() for a in egd.body]
            for h in find_homomorphisms(body, facts):
                x = h.get(egd.left, egd.left)
                y = h.get(egd.right, egd.right)
                if x == y:
                    continue
                if x.is_const() and y.is_const():
                    raise ChaseFailure(
                        "egd",
                        f"{egd.render()} equates constants {x.render()} and {y.render()}",
                    )
                if y.is_const() or (
                    x.is_null() and y.is_null() and term_key(y) < term_key(x)
                ):
                    x, y = y, x
                facts = {  # replace y by x everywhere
                    Fact(f.rel, tuple(x if a == y else a for a in f.args))
                    for f in facts
                }
                changed = True
                break
            if changed:
                break
    return frozenset(facts)
