"""Terms, facts and tables.

The value universe is split into four disjoint kinds: constants, open
nulls, closed nulls and variables.  Instances are ground fact sets,
naive tables may contain nulls, semi-naive tables distinguish the two
null kinds.  All of these are represented uniformly as ``frozenset``
of :class:`Fact`; helpers below classify and validate them.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple

CONST = "const"
ONULL = "onull"
CNULL = "cnull"
VAR = "var"

_KIND_ORDER = {CONST: 0, ONULL: 1, CNULL: 2, VAR: 3}


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(EngineError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        if line:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class ArityConflictError(EngineError):
    pass


class BudgetExceededError(EngineError):
    pass


class PreconditionError(EngineError):
    pass


class Term(NamedTuple):
    kind: str
    value: str | int

    def is_const(self) -> bool:
        return self.kind == CONST

    def is_null(self) -> bool:
        return self.kind in (ONULL, CNULL)

    def is_var(self) -> bool:
        return self.kind == VAR

    def render(self) -> str:
        if self.kind == CONST:
            return str(self.value)
        if self.kind == ONULL:
            return f"?o{self.value}"
        if self.kind == CNULL:
            return f"?c{self.value}"
        return str(self.value)


def const(symbol: str) -> Term:
    return Term(CONST, symbol)


def onull(ident: int) -> Term:
    return Term(ONULL, ident)


def cnull(ident: int) -> Term:
    return Term(CNULL, ident)


def var(name: str) -> Term:
    return Term(VAR, name)


_term_key_cache: dict = {}


def term_key(t: Term) -> tuple:
    k = _term_key_cache.get(t)
    if k is None:
        k = (_KIND_ORDER[t.kind], str(t.value) if t.kind in (CONST, VAR) else t.value)
        _term_key_cache[t] = k
    return k


class Fact(NamedTuple):
    rel: str
    args: tuple[Term, ...]

    def render(self) -> str:
        return f"{self.rel}({', '.join(a.render() for a in self.args)})"


def fact(rel: str, *args: Term) -> Fact:
    return Fact(rel, tuple(args))


_fact_key_cache: dict = {}


def fact_key(f: Fact) -> tuple:
    k = _fact_key_cache.get(f)
    if k is None:
        k = (f.rel, tuple(term_key(a) for a in f.args))
        _fact_key_cache[f] = k
    return k


def sorted_facts(facts: Iterable[Fact]) -> list[Fact]:
    return sorted(facts, key=fact_key)


def dom(facts: Iterable[Fact]) -> set[Term]:
    out: set[Term] = set()
    for f in facts:
        out.update(f.args)
    return out


def consts_of(facts: Iterable[Fact]) -> set[Term]:
    return {t for t in dom(facts) if t.is_const()}


def nulls_of(facts: Iterable[Fact]) -> set[Term]:
    return {t for t in dom(facts) if t.is_null()}


def vars_of(facts: Iterable[Fact]) -> set[Term]:
    return {t for t in dom(facts) if t.is_var()}


def is_ground(facts: Iterable[Fact]) -> bool:
    return all(a.is_const() for f in facts for a in f.args)


def schema_of(facts: Iterable[Fact]) -> dict[str, int]:
    """Relation-to-arity map; raises on inconsistent arities."""
    schema: dict[str, int] = {}
    for f in facts:
        seen = schema.get(f.rel)
        if seen is None:
            schema[f.rel] = len(f.args)
        elif seen != len(f.args):
            raise ArityConflictError(
                f"relation {f.rel} used with arities {seen} and {len(f.args)}"
            )
    return schema


def make_instance(facts: Iterable[Fact]) -> frozenset[Fact]:
    """Ground instance constructor: validates arity consistency and groundness."""
    fs = frozenset(facts)
    schema_of(fs)
    for f in fs:
        for a in f.args:
            if not a.is_const():
                raise EngineError(f"instance contains non-constant term in {f.render()}")
    return fs


def make_table(facts: Iterable[Fact]) -> frozenset[Fact]:
    """Semi-naive table constructor: constants and nulls only, arities consistent."""
    fs = frozenset(facts)
    schema_of(fs)
    for f in fs:
        for a in f.args:
            if a.is_var():
                raise EngineError(f"table contains a variable in {f.render()}")
    return fs


# A tuple labeling maps each fact of a table to a nonempty set of
# annotation integers (scoped per relation).
Labeling = dict[Fact, frozenset[int]]


def merge_labels(labels: Labeling, f: Fact, anns: Iterable[int]) -> None:
    prev = labels.get(f, frozenset())
    labels[f] = prev | frozenset(anns)


def render_labels(labels: Labeling) -> str:
    lines = []
    for f in sorted_facts(labels):
        anns = ",".join(str(a) for a in sorted(labels[f]))
        lines.append(f"{f.render()} -> {{{anns}}}")
    return "\n".join(lines) + ("\n" if lines else "")
