"""Hardness-instance generators from graph inputs.

Each generator emits a mapping file, a source instance and (depending
on the problem) a candidate solution or a query, together with a note
recording the parameters and any polynomial pre-check verdict.
Graph files are plain edge lists, one `v1 v2` pair per line; a line
with a single token declares an isolated vertex.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

from .terms import EngineError, Fact, Term, const

COLORS = ("r", "g", "b")


@dataclass(frozen=True)
class GraphInput:
    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    def __post_init__(self):
        for a, b in self.edges:
            if a == b:
                raise EngineError(f"self-loop on {a}")
            if a not in self.vertices or b not in self.vertices:
                raise EngineError(f"edge ({a}, {b}) uses an undeclared vertex")

    def directed_edges(self) -> list[tuple[str, str]]:
        out = set()
        for a, b in self.edges:
            out.add((a, b))
            out.add((b, a))
        return sorted(out)


def parse_graph(text: str) -> GraphInput:
    vertices: list[str] = []
    edges: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) == 1:
            v = parts[0]
            if v not in vertices:
                vertices.append(v)
        elif len(parts) == 2:
            a, b = parts
            for v in (a, b):
                if v not in vertices:
                    vertices.append(v)
            e = tuple(sorted((a, b)))
            if e not in edges:
                edges.append(e)
        else:
            raise EngineError(f"graph line {lineno}: expected one or two tokens")
    return GraphInput(tuple(vertices), tuple(edges))


def is_two_colorable(g: GraphInput) -> bool:
    color: dict[str, int] = {}
    adj: dict[str, list[str]] = {v: [] for v in g.vertices}
    for a, b in g.edges:
        adj[a].append(b)
        adj[b].append(a)
    for start in g.vertices:
        if start in color:
            continue
        color[start] = 0
        queue = [start]
        while queue:
            v = queue.pop()
            for w in adj[v]:
                if w not in color:
                    color[w] = 1 - color[v]
                    queue.append(w)
                elif color[w] == color[v]:
                    return False
    return True


@dataclass
class GeneratedCase:
    mapping: str
    facts: str
    candidate: str | None = None
    query: str | None = None
    note: str = ""
    manifest: dict = field(default_factory=dict)


def _facts_text(facts: list[Fact]) -> str:
    from .terms import sorted_facts

    return "".join(f"{f.render()}.\n" for f in sorted_facts(facts))


def _color_pairs() -> list[tuple[str, str]]:
    return sorted((a, b) for a, b in permutations(COLORS, 2))


def gen_threecol_existence(g: GraphInput) -> GeneratedCase:
    """Solution-existence instance: solvable iff the graph is 3-colorable.

    Graphs that are already 2-colorable are answered by the pre-check
    alone; the dependency set only captures 3-colorability for graphs
    that need all three colors.
    """
    mapping = (
        "abd: V(x) <-> B@1(x, v), C@1(x, v).\n"
        "abd: E0(x, y) <-> E@1(x, y).\n"
        "abd: D(z, v) <-> B@1(x, z), C@1(y, v), E@1(x, y).\n"
    )
    facts = [Fact("V", (const(v),)) for v in g.vertices]
    facts += [Fact("E0", (const(a), const(b))) for a, b in g.directed_edges()]
    facts += [Fact("D", (const(a), const(b))) for a, b in _color_pairs()]
    two = is_two_colorable(g)
    note = (
        "pre-check: 2-colorable, existence trivially true"
        if two
        else "pre-check: not 2-colorable, existence equals 3-colorability"
    )
    return GeneratedCase(
        mapping=mapping,
        facts=_facts_text(facts),
        note=note,
        manifest={
            "problem": "three-col-exist",
            "vertices": list(g.vertices),
            "edges": [list(e) for e in g.edges],
            "two_colorable": two,
        },
    )


def gen_threecol_check(g: GraphInput) -> GeneratedCase:
    """Solution-check instance: the candidate target encodes the coloring choice."""
    mapping = (
        "abd: D(z, v) <-> B@1(x, z), C@1(y, v), E@1(x, y).\n"
        "abd: V(x, v) <-> B@2(x, v).\n"
        "abd: V(x, v) <-> C@2(x, v).\n"
    )
    facts = [Fact("D", (const(a), const(b))) for a, b in _color_pairs()]
    facts += [
        Fact("V", (const(v), const(c))) for v in g.vertices for c in COLORS
    ]
    candidate = [
        Fact("B", (const(v), const(c))) for v in g.vertices for c in COLORS
    ]
    candidate += [
        Fact("C", (const(v), const(c))) for v in g.vertices for c in COLORS
    ]
    candidate += [Fact("E", (const(a), const(b))) for a, b in g.directed_edges()]
    return GeneratedCase(
        mapping=mapping,
        facts=_facts_text(facts),
        candidate=_facts_text(candidate),
        note="candidate accepted iff a labeled coloring covers every color pair",
        manifest={
            "problem": "three-col-check",
            "vertices": list(g.vertices),
            "edges": [list(e) for e in g.edges],
        },
    )


def gen_threecol_eval(g: GraphInput) -> GeneratedCase:
    """Query-evaluation instance: certain answer true iff not 3-colorable."""
    mapping = (
        "abd: V(x) <-> B@1(x, v), C@1(x, v).\n"
        "abd: M(v) <-> C@1(x, v).\n"
        "abd: E0(x, y) <-> E@1(x, y).\n"
    )
    facts = [Fact("V", (const(v),)) for v in g.vertices]
    facts += [Fact("M", (const(c),)) for c in COLORS]
    facts += [Fact("E0", (const(a), const(b))) for a, b in g.directed_edges()]
    query = "q() :- B(x, z), C(y, z), E(x, y).\n"
    return GeneratedCase(
        mapping=mapping,
        facts=_facts_text(facts),
        query=query,
        note="certain answer true iff the graph is not 3-colorable",
        manifest={
            "problem": "three-col-eval",
            "vertices": list(g.vertices),
            "edges": [list(e) for e in g.edges],
        },
    )


def gen_clique(g: GraphInput, k: int) -> GeneratedCase:
    """Clique instance: certain answer true iff the graph has no k-clique.

    The query reads both clique-slot assignments off the A relation;
    with the B column instead, the two endpoints of a slot pair decouple
    and one edge falsifies the query for every k.
    """
    if k < 2:
        raise EngineError("clique size must be at least 2")
    mapping = (
        "abd: E0(x, y) <-> E@1(x, y).\n"
        "abd: C0(x, y) <-> C@1(x, y), A@1(x, z), B@1(y, v).\n"
    )
    facts = [Fact("E0", (const(a), const(b))) for a, b in g.directed_edges()]
    slots = [f"k{i}" for i in range(1, k + 1)]
    facts += [
        Fact("C0", (const(a), const(b)))
        for a in slots
        for b in slots
        if a != b
    ]
    query = "q() :- C(x, y), A(x, z1), A(y, z2), not E(z1, z2).\n"
    return GeneratedCase(
        mapping=mapping,
        facts=_facts_text(facts),
        query=query,
        note=f"certain answer true iff no clique of size {k}",
        manifest={
            "problem": "clique",
            "k": k,
            "vertices": list(g.vertices),
            "edges": [list(e) for e in g.edges],
        },
    )
