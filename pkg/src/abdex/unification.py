"""Unifiers between a pattern table and subsets of a semi-naive table.

A unifier folds the target table inward: one idempotent fold per copy
for the open nulls, a single idempotent fold for the closed nulls, and
a pattern assignment that lands exactly on the folded union.  The mgu
set keeps one representative per equivalence class of the most general
unifiers over all subsets no larger than the pattern.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, combinations_with_replacement, permutations, product
from typing import Iterable, Sequence

from .terms import (
    BudgetExceededError,
    CNULL,
    ONULL,
    Fact,
    Term,
    dom,
    fact_key,
    sorted_facts,
    term_key,
)

MAX_PATTERN_ATOMS = 6
DEFAULT_PROBES = 200_000

Map = tuple[tuple[Term, Term], ...]


def _as_map(d: dict[Term, Term]) -> Map:
    return tuple(sorted(d.items(), key=lambda kv: term_key(kv[0])))


def _apply(m: Map, t: Term) -> Term:
    for k, v in m:
        if k == t:
            return v
    return t


def _apply_facts(m: Map, facts: Iterable[Fact]) -> frozenset[Fact]:
    return frozenset(
        Fact(f.rel, tuple(_apply(m, a) for a in f.args)) for f in facts
    )


@dataclass(frozen=True)
class Unifier:
    table: tuple[Fact, ...]  # the (sub)table this unifier folds
    theta1: Map  # pattern holes -> folded values
    theta2: Map  # closed-null fold
    open_folds: tuple[Map, ...]  # one fold per copy

    def sort_key(self) -> tuple:
        return (
            tuple(fact_key(f) for f in self.table),
            self.theta1,
            self.theta2,
            self.open_folds,
        )


def _idempotent_maps(domain: list[Term], values: list[Term], budget: list[int]) -> list[Map]:
    """All idempotent maps domain -> values (folds: the image is fixed pointwise)."""
    if not domain:
        return [()]
    out = []
    for choice in product(values, repeat=len(domain)):
        budget[0] -= 1
        if budget[0] < 0:
            raise BudgetExceededError("unifier fold enumeration budget exhausted")
        m = dict(zip(domain, choice))
        if all(m.get(v, v) == v for v in choice):
            out.append(_as_map(m))
    return out


def enumerate_unifiers(
    pattern: Iterable[Fact],
    table: Iterable[Fact],
    max_copies: int | None = None,
    probes: int = DEFAULT_PROBES,
) -> list[Unifier]:
    """Exhaustive unifier enumeration for a pattern and one target table.

    Pattern holes are its variables and nulls; constants are rigid on
    both sides.  Copies are bounded by the pattern size (each pattern
    atom needs at most one fold of the table).
    """
    V = sorted_facts(pattern)
    T = sorted_facts(table)
    if len(V) > MAX_PATTERN_ATOMS:
        raise BudgetExceededError(f"pattern larger than {MAX_PATTERN_ATOMS} atoms")
    if not V or not T:
        return []
    budget = [probes]

    pat_consts = sorted({t for t in dom(V) if t.is_const()}, key=term_key)
    holes = sorted({t for t in dom(V) if not t.is_const()}, key=term_key)
    t_dom = sorted(dom(T), key=term_key)
    opens = [t for t in t_dom if t.kind == ONULL]
    closed = [t for t in t_dom if t.kind == CNULL]
    fold_values = sorted(set(t_dom) | set(pat_consts), key=term_key)

    open_maps = _idempotent_maps(opens, fold_values, budget)
    closed_maps = _idempotent_maps(closed, fold_values, budget)
    k_max = max_copies if max_copies is not None else len(V)

    out: list[Unifier] = []
    seen = set()
    for k in range(1, k_max + 1):
        for copy_folds in combinations_with_replacement(open_maps, k):
            union: set[Fact] = set()
            for m in copy_folds:
                union.update(_apply_facts(m, T))
            for closed_fold in closed_maps:
                budget[0] -= 1
                if budget[0] < 0:
                    raise BudgetExceededError("unifier enumeration budget exhausted")
                folded = _apply_facts(closed_fold, union)
                theta1 = _match_exact(V, holes, folded)
                for t1 in theta1:
                    u = Unifier(
                        table=tuple(T),
                        theta1=t1,
                        theta2=closed_fold,
                        open_folds=tuple(sorted(copy_folds)),
                    )
                    if u not in seen:
                        seen.add(u)
                        out.append(u)
    out.sort(key=Unifier.sort_key)
    return out


def _match_exact(
    V: list[Fact], holes: list[Term], folded: frozenset[Fact]
) -> list[Map]:
    """Assignments of the pattern holes with image exactly the folded set."""
    targets = sorted_facts(folded)
    results: list[Map] = []

    def rec(i: int, binding: dict[Term, Term], hit: set[Fact]) -> None:
        if i == len(V):
            if hit == set(targets):
                results.append(_as_map({h: binding[h] for h in holes}))
            return
        a = V[i]
        for f in targets:
            if f.rel != a.rel or len(f.args) != len(a.args):
                continue
            b = dict(binding)
            ok = True
            for p, v in zip(a.args, f.args):
                if p.is_const():
                    if p != v:
                        ok = False
                        break
                elif p in b:
                    if b[p] != v:
                        ok = False
                        break
                else:
                    b[p] = v
            if ok:
                rec(i + 1, b, hit | {f})
        return

    if any(h not in {t for f in V for t in f.args} for h in holes):
        return []
    rec(0, {}, set())
    uniq = sorted(set(results))
    return uniq


def _compositions(
    base: Map, target: Map, values: list[Term]
) -> bool:
    """Is there a map f (identity on constants) with target = f ∘ base?"""
    need: dict[Term, Term] = {}
    keys = {k for k, _ in base} | {k for k, _ in target}
    for x in keys:
        bx = _apply(base, x)
        tx = _apply(target, x)
        if bx in need:
            if need[bx] != tx:
                return False
        else:
            if bx.is_const() and bx != tx:
                return False
            need[bx] = tx
    return True


def more_general(a: Unifier, b: Unifier, strict: bool = True) -> bool:
    """a is more general than b: folds of b factor through those of a."""
    if a.table != b.table or len(a.open_folds) != len(b.open_folds):
        return False
    values = sorted(dom(a.table), key=term_key)
    if not _compositions(a.theta2, b.theta2, values):
        return False
    for perm in permutations(range(len(a.open_folds))):
        if all(
            _compositions(a.open_folds[i], b.open_folds[j], values)
            for i, j in zip(range(len(a.open_folds)), perm)
        ):
            if not strict:
                return True
            if a.theta2 != b.theta2 or tuple(
                a.open_folds[i] for i in range(len(a.open_folds))
            ) != tuple(b.open_folds[j] for j in perm):
                return True
            # identical fold families factor through identity maps only
            return False
    return False


def equivalent(a: Unifier, b: Unifier) -> bool:
    return more_general(a, b, strict=False) and more_general(b, a, strict=False)


def mgu_set(
    pattern: Iterable[Fact],
    table: Iterable[Fact],
    max_copies: int | None = None,
    probes: int = DEFAULT_PROBES,
) -> list[Unifier]:
    """Most-general representatives over all subsets no larger than the pattern."""
    V = sorted_facts(pattern)
    T = sorted_facts(table)
    out: list[Unifier] = []
    for size in range(1, min(len(V), len(T)) + 1):
        for sub in combinations(T, size):
            all_u = enumerate_unifiers(V, sub, max_copies=max_copies, probes=probes)
            mgus = [
                u
                for u in all_u
                if all(
                    equivalent(w, u)
                    for w in all_u
                    if w is not u and more_general(w, u)
                )
            ]
            kept: list[Unifier] = []
            for u in sorted(mgus, key=Unifier.sort_key):
                if not any(equivalent(u, v) for v in kept):
                    kept.append(u)
            out.extend(kept)
    out.sort(key=Unifier.sort_key)
    return out
