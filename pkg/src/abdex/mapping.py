"""Dependency ASTs, annotation metrics, safety and the tgd-to-abd translation.

A program is either unidirectional (s-t tgds plus target egds) or
annotated (abds plus aegds), never mixed.  Annotation identity is the
pair (relation, integer): the same integer on different relations is a
different annotation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .homs import gaifman_partition
from .terms import EngineError, Fact, Term, term_key


@dataclass(frozen=True)
class Atom:
    rel: str
    annotation: int | None
    args: tuple[Term, ...]

    def fact(self) -> Fact:
        return Fact(self.rel, self.args)

    def diamond_fact(self) -> Fact:
        """Fact over the annotation-expanded schema (relation tagged with label)."""
        if self.annotation is None:
            return Fact(self.rel, self.args)
        return Fact(f"{self.rel}@{self.annotation}", self.args)

    def render(self) -> str:
        ann = f"@{self.annotation}" if self.annotation is not None else ""
        body = ", ".join(
            f'"{a.value}"' if a.is_const() else a.render() for a in self.args
        )
        return f"{self.rel}{ann}({body})"


def atom_vars(atoms: Iterable[Atom]) -> set[Term]:
    return {a for at in atoms for a in at.args if a.is_var()}


@dataclass(frozen=True)
class Abd:
    body: tuple[Atom, ...]
    head: tuple[Atom, ...]

    def __post_init__(self):
        if not self.body or not self.head:
            raise EngineError("abd needs a nonempty body and head")
        if any(a.annotation is None for a in self.head):
            raise EngineError("every abd head atom must carry an annotation")
        if any(a.annotation is not None for a in self.body):
            raise EngineError("abd body atoms must not carry annotations")

    @property
    def shared_vars(self) -> set[Term]:
        return atom_vars(self.body) & atom_vars(self.head)

    @property
    def body_only_vars(self) -> set[Term]:
        return atom_vars(self.body) - atom_vars(self.head)

    @property
    def head_only_vars(self) -> set[Term]:
        return atom_vars(self.head) - atom_vars(self.body)

    def render(self) -> str:
        b = ", ".join(a.render() for a in self.body)
        h = ", ".join(a.render() for a in self.head)
        return f"abd: {b} <-> {h}."


@dataclass(frozen=True)
class Aegd:
    body: tuple[Atom, ...]
    left: Term
    right: Term

    def __post_init__(self):
        if any(a.annotation is None for a in self.body):
            raise EngineError("every aegd body atom must carry an annotation")
        for side in (self.left, self.right):
            if side.is_var() and side not in atom_vars(self.body):
                raise EngineError(f"aegd conclusion variable {side.render()} not in body")

    def render(self) -> str:
        b = ", ".join(a.render() for a in self.body)
        return f"aegd: {b} -> {self.left.render()} = {self.right.render()}."


@dataclass(frozen=True)
class Tgd:
    body: tuple[Atom, ...]
    head: tuple[Atom, ...]

    @property
    def existential_vars(self) -> set[Term]:
        return atom_vars(self.head) - atom_vars(self.body)

    @property
    def frontier_vars(self) -> set[Term]:
        return atom_vars(self.body) & atom_vars(self.head)

    def is_full(self) -> bool:
        return not self.existential_vars

    def render(self) -> str:
        b = ", ".join(a.render() for a in self.body)
        h = ", ".join(a.render() for a in self.head)
        return f"tgd: {b} -> {h}."


@dataclass(frozen=True)
class Egd:
    body: tuple[Atom, ...]
    left: Term
    right: Term

    def render(self) -> str:
        b = ", ".join(a.render() for a in self.body)
        return f"egd: {b} -> {self.left.render()} = {self.right.render()}."


@dataclass
class MappingProgram:
    source_schema: dict[str, int] = field(default_factory=dict)
    target_schema: dict[str, int] = field(default_factory=dict)
    abds: list[Abd] = field(default_factory=list)
    aegds: list[Aegd] = field(default_factory=list)
    tgds: list[Tgd] = field(default_factory=list)
    egds: list[Egd] = field(default_factory=list)

    def is_annotated(self) -> bool:
        return bool(self.abds or self.aegds)

    def is_unidirectional(self) -> bool:
        return bool(self.tgds or self.egds)

    def render(self) -> str:
        parts = [d.render() for d in self.abds + self.aegds + self.tgds + self.egds]
        return "\n".join(parts) + ("\n" if parts else "")


def _note_schema(schema: dict[str, int], rel: str, arity: int) -> None:
    seen = schema.get(rel)
    if seen is None:
        schema[rel] = arity
    elif seen != arity:
        raise EngineError(f"relation {rel} used with arities {seen} and {arity}")


def make_program(
    abds: Sequence[Abd] = (),
    aegds: Sequence[Aegd] = (),
    tgds: Sequence[Tgd] = (),
    egds: Sequence[Egd] = (),
) -> MappingProgram:
    """Assemble and validate a program (schema inference, disjointness, no mixing)."""
    prog = MappingProgram(abds=list(abds), aegds=list(aegds), tgds=list(tgds), egds=list(egds))
    if prog.is_annotated() and prog.is_unidirectional():
        raise EngineError("a program is either annotated or unidirectional, never mixed")
    for d in prog.abds:
        for a in d.body:
            _note_schema(prog.source_schema, a.rel, len(a.args))
        for a in d.head:
            _note_schema(prog.target_schema, a.rel, len(a.args))
    for d in prog.tgds:
        for a in d.body:
            _note_schema(prog.source_schema, a.rel, len(a.args))
        for a in d.head:
            _note_schema(prog.target_schema, a.rel, len(a.args))
    for d in list(prog.aegds) + list(prog.egds):
        for a in d.body:
            _note_schema(prog.target_schema, a.rel, len(a.args))
    overlap = set(prog.source_schema) & set(prog.target_schema)
    if overlap:
        raise EngineError(
            f"relations used in both schemas: {', '.join(sorted(overlap))}"
        )
    return prog


# ---------------------------------------------------------------------------
# annotation metrics


def annotations_of(prog: MappingProgram, rel: str) -> set[int]:
    """Annotation labels used for rel across the abd heads."""
    return {
        a.annotation
        for d in prog.abds
        for a in d.head
        if a.rel == rel and a.annotation is not None
    }


def annotation_density(prog: MappingProgram) -> tuple[dict[str, int], int]:
    counts: dict[tuple[str, int], int] = {}
    for d in prog.abds:
        for a in d.head:
            key = (a.rel, a.annotation)
            counts[key] = counts.get(key, 0) + 1
    per_rel: dict[str, int] = {rel: 0 for rel in prog.target_schema}
    for (rel, _), n in counts.items():
        per_rel[rel] = max(per_rel.get(rel, 0), n)
    overall = max(per_rel.values(), default=0)
    return per_rel, overall


def annotation_cardinality(prog: MappingProgram) -> tuple[dict[str, int], int]:
    per_rel = {rel: len(annotations_of(prog, rel)) for rel in prog.target_schema}
    overall = max(per_rel.values(), default=0)
    return per_rel, overall


def affected_positions(prog: MappingProgram) -> set[tuple[str, int, int]]:
    """Annotated positions (rel, label, 1-based index) holding head-only variables."""
    out: set[tuple[str, int, int]] = set()
    for d in prog.abds:
        exist = d.head_only_vars
        for a in d.head:
            for i, t in enumerate(a.args, start=1):
                if t in exist:
                    out.add((a.rel, a.annotation, i))
    return out


@dataclass
class SafetyReport:
    safe: bool
    offending: list[tuple[Aegd, str]]


def check_safety(prog: MappingProgram) -> SafetyReport:
    """An aegd is safe when its repeated body variables avoid every affected position."""
    aff = affected_positions(prog)
    offending: list[tuple[Aegd, str]] = []
    for d in prog.aegds:
        positions: dict[Term, list[tuple[str, int, int]]] = {}
        for a in d.body:
            for i, t in enumerate(a.args, start=1):
                if t.is_var():
                    positions.setdefault(t, []).append((a.rel, a.annotation, i))
        for v, occ in positions.items():
            if len(occ) < 2:
                continue
            bad = [p for p in occ if p in aff]
            if bad:
                offending.append(
                    (d, f"variable {v.render()} repeats and occurs at affected {bad[0]}")
                )
                break
    return SafetyReport(safe=not offending, offending=offending)


def aegd_equates_affected_pair(prog: MappingProgram) -> bool:
    """Does some aegd equate two variables that both occur at affected positions?"""
    aff = affected_positions(prog)

    def at_affected(d: Aegd, v: Term) -> bool:
        for a in d.body:
            for i, t in enumerate(a.args, start=1):
                if t == v and (a.rel, a.annotation, i) in aff:
                    return True
        return False

    return any(
        at_affected(d, d.left) and at_affected(d, d.right) for d in prog.aegds
    )


def normalize_tgds(tgds: Sequence[Tgd]) -> list[Tgd]:
    """Drop repeated head atoms (non-redundancy normalization)."""
    out = []
    for t in tgds:
        seen: list[Atom] = []
        for a in t.head:
            if a not in seen:
                seen.append(a)
        out.append(Tgd(t.body, tuple(seen)))
    return out


def is_gav_reducible(tgds: Sequence[Tgd]) -> bool:
    """Each existential variable of each (normalized) tgd sits in exactly one head atom."""
    for t in normalize_tgds(tgds):
        for v in t.existential_vars:
            hits = sum(1 for a in t.head if v in a.args)
            if hits != 1:
                return False
    return True


# ---------------------------------------------------------------------------
# translation of tgds + safe egds into abds + aegds


def translate_tgds(prog: MappingProgram) -> MappingProgram:
    """Rewrite a unidirectional program as an annotated one of density 1.

    Each tgd head splits into its Gaifman blocks (frontier variables
    frozen, existentials as graph vertices); every block becomes one
    abd whose atoms get fresh per-relation annotation counters.  Each
    egd expands into one aegd per combination of annotations available
    for its body relations; egds over relations absent from all heads
    are dropped with a warning.
    """
    if prog.is_annotated():
        raise EngineError("translate_tgds expects a unidirectional program")
    counters: dict[str, int] = {}

    def fresh(rel: str) -> int:
        counters[rel] = counters.get(rel, 0) + 1
        return counters[rel]

    abds: list[Abd] = []
    for t in prog.tgds:
        head_facts = list(dict.fromkeys(a.fact() for a in t.head))
        blocks = gaifman_partition(head_facts, frozen=atom_vars(t.body))
        for block in blocks:
            head_atoms = tuple(
                Atom(f.rel, fresh(f.rel), f.args) for f in block
            )
            abds.append(Abd(body=t.body, head=head_atoms))

    aegds: list[Aegd] = []
    new_prog = make_program(abds=abds)
    for e in prog.egds:
        options = []
        missing = None
        for a in e.body:
            anns = sorted(annotations_of(new_prog, a.rel))
            if not anns:
                missing = a.rel
                break
            options.append(anns)
        if missing is not None:
            warnings.warn(
                f"egd over relation {missing} absent from every tgd head was dropped",
                stacklevel=2,
            )
            continue
        from itertools import product

        for combo in product(*options):
            body = tuple(
                Atom(a.rel, ann, a.args) for a, ann in zip(e.body, combo)
            )
            aegds.append(Aegd(body=body, left=e.left, right=e.right))

    out = make_program(abds=abds, aegds=aegds)
    report = check_safety(out)
    if not report.safe:
        d, why = report.offending[0]
        raise EngineError(f"unsafe egd after translation: {d.render()} ({why})")
    return out


# ---------------------------------------------------------------------------
# derived views


@dataclass
class Views:
    forward_tgds: list[Tgd]
    forward_egds: list[Egd]
    backward: list[Abd]  # same shape as the abds; read head -> body
    diamond_abds: list[Abd]  # heads renamed onto the annotation-expanded schema
    diamond_rename: dict[tuple[str, int], str]


def derive_views(prog: MappingProgram) -> Views:
    forward_tgds = [
        Tgd(d.body, tuple(Atom(a.rel, None, a.args) for a in d.head)) for d in prog.abds
    ]
    forward_egds = [
        Egd(tuple(Atom(a.rel, None, a.args) for a in d.body), d.left, d.right)
        for d in prog.aegds
    ]
    taken = set(prog.source_schema) | set(prog.target_schema)
    rename: dict[tuple[str, int], str] = {}
    for d in prog.abds:
        for a in d.head:
            key = (a.rel, a.annotation)
            if key not in rename:
                name = f"{a.rel}_{a.annotation}"
                while name in taken:
                    name += "_"
                taken.add(name)
                rename[key] = name
    diamond = [
        Abd(
            d.body,
            tuple(Atom(rename[(a.rel, a.annotation)], a.annotation, a.args) for a in d.head),
        )
        for d in prog.abds
    ]
    return Views(
        forward_tgds=forward_tgds,
        forward_egds=forward_egds,
        backward=list(prog.abds),
        diamond_abds=diamond,
        diamond_rename=rename,
    )
