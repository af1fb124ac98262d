"""Homomorphism search, valuations, Gaifman partitioning and table isomorphism."""

from __future__ import annotations

from typing import Iterable, Sequence

from .terms import (
    EngineError,
    Fact,
    Term,
    dom,
    fact_key,
    sorted_facts,
    term_key,
)

Binding = dict[Term, Term]


def match_args(
    pattern: Sequence[Term],
    target: Sequence[Term],
    binding: Binding,
    frozen: frozenset[Term],
) -> Binding | None:
    """Extend binding so the pattern argument list maps onto the target one.

    Constants and frozen terms must map to themselves; every other term
    is bound on first use and must stay consistent afterwards.
    """
    if len(pattern) != len(target):
        return None
    out = binding
    for p, t in zip(pattern, target):
        if p.is_const() or p in frozen:
            if p != t:
                return None
            continue
        bound = out.get(p)
        if bound is None:
            if out is binding:
                out = dict(binding)
            out[p] = t
        elif bound != t:
            return None
    return dict(out) if out is binding else out


def _search(
    atoms: list[Fact],
    candidates: list[list[Fact]],
    binding: Binding,
    frozen: frozenset[Term],
    out: list[Binding],
    limit: int | None,
) -> None:
    if not atoms:
        out.append(binding)
        return
    atom, rest = atoms[0], atoms[1:]
    for f in candidates[0]:
        if limit is not None and len(out) >= limit:
            return
        b = match_args(atom.args, f.args, binding, frozen)
        if b is not None:
            _search(rest, candidates[1:], b, frozen, out, limit)


def find_homomorphisms(
    pattern: Iterable[Fact],
    target: Iterable[Fact],
    frozen: Iterable[Term] = (),
    binding: Binding | None = None,
    limit: int | None = None,
) -> list[Binding]:
    """All maps h with h(pattern) contained in target.

    Constants and frozen terms are fixed points; pattern variables and
    nulls map to arbitrary target terms.  Result order is deterministic
    (lexicographic in the sorted assignment).
    """
    atoms = sorted(pattern, key=fact_key)
    by_rel: dict[str, list[Fact]] = {}
    for f in target:
        by_rel.setdefault(f.rel, []).append(f)
    candidates = []
    for a in atoms:
        c = by_rel.get(a.rel, [])
        if not c:
            return []
        candidates.append(c)
    out: list[Binding] = []
    _search(atoms, candidates, dict(binding or {}), frozenset(frozen), out, limit)
    if limit is not None:
        return out[:limit]
    uniq = {tuple(sorted(b.items(), key=lambda kv: term_key(kv[0]))): b for b in out}
    return [dict(items) for items in sorted(uniq)]


def exists_extension(
    pattern: Iterable[Fact],
    target: Iterable[Fact],
    binding: Binding,
    frozen: Iterable[Term] = (),
) -> bool:
    return bool(find_homomorphisms(pattern, target, frozen, binding, limit=1))


def apply_term(m: Binding, t: Term) -> Term:
    return m.get(t, t)


def apply_fact(m: Binding, f: Fact) -> Fact:
    return Fact(f.rel, tuple(m.get(a, a) for a in f.args))


def apply_map(m: Binding, facts: Iterable[Fact]) -> frozenset[Fact]:
    return frozenset(apply_fact(m, f) for f in facts)


def apply_valuation(table: Iterable[Fact], valuation: Binding) -> frozenset[Fact]:
    """Ground a table; every null must be mapped to a constant."""
    out = set()
    for f in table:
        args = []
        for a in f.args:
            if a.is_const():
                args.append(a)
            elif a.is_null():
                v = valuation.get(a)
                if v is None or not v.is_const():
                    raise EngineError(f"valuation does not ground {a.render()}")
                args.append(v)
            else:
                raise EngineError(f"cannot valuate variable {a.render()}")
        out.add(Fact(f.rel, tuple(args)))
    return frozenset(out)


def gaifman_partition(
    table: Iterable[Fact], frozen: Iterable[Term] = ()
) -> list[list[Fact]]:
    """Unique block partition of a table.

    Vertices are the non-constant, non-frozen terms; facts sharing a
    connected component group together and vertex-free facts become
    singleton blocks.  Blocks and their facts come out sorted.
    """
    frz = frozenset(frozen)
    facts = sorted_facts(table)

    def vertices(f: Fact) -> list[Term]:
        return [a for a in f.args if not a.is_const() and a not in frz]

    parent: dict[Term, Term] = {}

    def find(x: Term) -> Term:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: Term, b: Term) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for f in facts:
        vs = vertices(f)
        for v in vs:
            parent.setdefault(v, v)
        for v in vs[1:]:
            union(vs[0], v)

    blocks: dict[object, list[Fact]] = {}
    singletons: list[list[Fact]] = []
    for f in facts:
        vs = vertices(f)
        if not vs:
            singletons.append([f])
        else:
            blocks.setdefault(find(vs[0]), []).append(f)
    out = list(blocks.values()) + singletons
    out.sort(key=lambda block: fact_key(block[0]))
    return out


def _iso_match(
    a_facts: list[Fact], b_facts: set[Fact], m: Binding
) -> Binding | None:
    if not a_facts:
        return m
    f = a_facts[0]
    for g in sorted(b_facts, key=fact_key):
        if g.rel != f.rel or len(g.args) != len(f.args):
            continue
        m2 = dict(m)
        used = set(m2.values())
        ok = True
        for x, y in zip(f.args, g.args):
            if x.is_const():
                if x != y:
                    ok = False
                    break
            else:
                if x.kind != y.kind:
                    ok = False
                    break
                bound = m2.get(x)
                if bound is None:
                    if y in used:
                        ok = False
                        break
                    m2[x] = y
                    used.add(y)
                elif bound != y:
                    ok = False
                    break
        if ok:
            res = _iso_match(a_facts[1:], b_facts - {g}, m2)
            if res is not None:
                return res
    return None


def find_null_bijection(a: Iterable[Fact], b: Iterable[Fact]) -> Binding | None:
    """A kind-preserving null bijection mapping table a onto table b, if any."""
    fa, fb = set(a), set(b)
    if len(fa) != len(fb):
        return None
    na = sorted(term_key(t) for t in dom(fa) if not t.is_const())
    nb = sorted(term_key(t) for t in dom(fb) if not t.is_const())
    if [k for k, _ in na] != [k for k, _ in nb]:
        return None
    return _iso_match(sorted_facts(fa), fb, {})


def isomorphic(a: Iterable[Fact], b: Iterable[Fact]) -> bool:
    return find_null_bijection(a, b) is not None
