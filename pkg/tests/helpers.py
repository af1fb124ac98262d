"""Shared test fixtures: independent graph oracles and random generators.

Everything here is deliberately written from first principles (brute
force over assignments) so it stays independent of the engine code it
validates.
"""

from __future__ import annotations

import random
from itertools import combinations, product

from abdex import Fact, const, parse_facts, parse_mapping
from abdex.generators import COLORS, GraphInput
from abdex.mapping import Atom, MappingProgram, Tgd, make_program
from abdex.terms import var

# --- graph ground truth ------------------------------------------------------


def brute_colorable(g: GraphInput, k: int) -> bool:
    for combo in product(range(k), repeat=len(g.vertices)):
        coloring = dict(zip(g.vertices, combo))
        if all(coloring[a] != coloring[b] for a, b in g.edges):
            return True
    return not g.vertices


def brute_has_clique(g: GraphInput, k: int) -> bool:
    adj = {(a, b) for a, b in g.edges} | {(b, a) for a, b in g.edges}
    for combo in combinations(g.vertices, k):
        if all((a, b) in adj for a in combo for b in combo if a != b):
            return True
    return False


def check_instance_ground_truth(g: GraphInput) -> bool:
    """Independent verdict for the coloring solution-check instance.

    A candidate is accepted iff per-vertex color-set pairs (out-labels,
    in-labels) exist that are nonempty on non-isolated vertices, never
    share a color across a directed edge, and realize every ordered
    pair of distinct colors on some edge.
    """
    directed = g.directed_edges()
    non_isolated = {v for e in directed for v in e}
    isolated = [v for v in g.vertices if v not in non_isolated]
    out_opts: list[tuple[str, ...]] = []
    for size in range(1, len(COLORS) + 1):
        out_opts.extend(combinations(COLORS, size))
    verts = sorted(non_isolated)
    needed = {(a, b) for a in COLORS for b in COLORS if a != b}
    for combo in product(out_opts, repeat=len(verts)):
        P = dict(zip(verts, (set(c) for c in combo)))
        S = {}
        ok = True
        for y in verts:
            banned = set().union(*(P[x] for x, yy in directed if yy == y))
            s = set(COLORS) - banned
            if not s:
                ok = False
                break
            S[y] = s
        if not ok:
            continue
        covered = {
            (z, v) for x, y in directed for z in P[x] for v in S[y]
        }
        if needed <= covered:
            return True
    return False


def all_graphs_up_to(n: int) -> list[GraphInput]:
    """One representative per isomorphism class, up to n vertices."""
    from itertools import permutations

    out: list[GraphInput] = []
    seen: set[frozenset] = set()
    for size in range(0, n + 1):
        verts = [str(i + 1) for i in range(size)]
        pairs = list(combinations(verts, 2))
        for bits in range(1 << len(pairs)):
            edges = [pairs[i] for i in range(len(pairs)) if bits & (1 << i)]
            canon = None
            for perm in permutations(range(size)):
                m = {verts[i]: verts[perm[i]] for i in range(size)}
                key = frozenset(frozenset((m[a], m[b])) for a, b in edges)
                if canon is None or sorted(map(sorted, key)) < sorted(map(sorted, canon)):
                    canon = key
            sig = (size, canon if canon is not None else frozenset())
            if sig in seen:
                continue
            seen.add(sig)
            out.append(GraphInput(tuple(verts), tuple(edges)))
    return out


# --- random program / instance generators -------------------------------------


def random_tgd_program(rng: random.Random) -> MappingProgram:
    """Small random source-to-target tgd set (<=2 tgds, <=2 body, <=3 head)."""
    source_rels = [("R1", 2), ("R2", 1)]
    target_rels = [("T1", 2), ("T2", 1), ("T3", 2)]
    tgds = []
    for _ in range(rng.randint(1, 2)):
        vnames = ["x", "y", "u"]
        body = []
        for _ in range(rng.randint(1, 2)):
            rel, ar = rng.choice(source_rels)
            body.append(Atom(rel, None, tuple(var(rng.choice(vnames)) for _ in range(ar))))
        body_vars = sorted({t.value for a in body for t in a.args})
        evars = ["z", "w"]
        head = []
        for _ in range(rng.randint(1, 3)):
            rel, ar = rng.choice(target_rels)
            args = []
            for _ in range(ar):
                if rng.random() < 0.45:
                    args.append(var(rng.choice(evars)))
                else:
                    args.append(var(rng.choice(body_vars)))
            head.append(Atom(rel, None, tuple(args)))
        tgds.append(Tgd(tuple(body), tuple(head)))
    return make_program(tgds=tgds)


def random_instance(rng: random.Random, prog: MappingProgram, max_facts: int = 3):
    consts = ["a", "b", "c"]
    facts = set()
    rels = sorted(prog.source_schema.items())
    for _ in range(rng.randint(1, max_facts)):
        rel, ar = rng.choice(rels)
        facts.add(Fact(rel, tuple(const(rng.choice(consts)) for _ in range(ar))))
    return frozenset(facts)


def random_ucq(rng: random.Random, prog: MappingProgram, max_atoms: int = 2):
    """A random boolean or unary UCQ over the target schema."""
    from abdex.query import Disjunct, make_query

    rels = sorted(prog.target_schema.items())
    vnames = ["x", "y", "z", "w"]
    unary = rng.random() < 0.5
    hv = var("x")
    disjuncts = []
    for _ in range(rng.randint(1, 2)):
        atoms = []
        for _ in range(rng.randint(1, max_atoms)):
            rel, ar = rng.choice(rels)
            atoms.append(
                Atom(rel, None, tuple(var(rng.choice(vnames)) for _ in range(ar)))
            )
        if unary:
            first = atoms[0]
            atoms[0] = Atom(first.rel, None, (hv,) + first.args[1:])
        disjuncts.append(Disjunct(pos=tuple(atoms)))
    return make_query("q", (hv,) if unary else (), disjuncts=tuple(disjuncts))
