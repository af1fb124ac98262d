"""Parsers and serializers for the file formats the engine speaks.

Mapping files (one `.`-terminated statement per line, `%` comments):

    abd:  R(x, y) <-> T@1(x, z), T@2(x, y).
    aegd: T@1(x, y), V@1(x) -> x = y.
    tgd:  P(p, e) -> PT(p, t), TE(t, e), PR(p).
    egd:  Emp(x, n1), Emp(x, n2) -> n1 = n2.

In dependency and query files bare identifiers are variables and
double-quoted tokens are constants.  Facts files are the opposite:
every bare token is a constant, and nulls are written ?o1 / ?c1.
Condition files hold one clause per line, disequalities `|`-separated.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .conditions import GlobalCondition, make_clause
from .mapping import Abd, Aegd, Atom, Egd, MappingProgram, Tgd, make_program
from .query import Disjunct, MAtom, MBin, MCmp, MNot, Matrix, Query, make_query
from .terms import (
    Fact,
    Labeling,
    ParseError,
    Term,
    cnull,
    const,
    make_instance,
    make_table,
    onull,
    schema_of,
    var,
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<null>\?[oc][0-9]+)
  | (?P<string>"[^"]*")
  | (?P<arrow2><->)
  | (?P<implies>->)
  | (?P<neck>:-)
  | (?P<neq>!=)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<number>[0-9]+)
  | (?P<sym>[(),.@|;:={}&])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        raw = m.group()
        if kind not in ("ws", "comment"):
            k = raw if kind == "sym" else kind
            tokens.append(Token(k, raw, line, col))
        nl = raw.count("\n")
        if nl:
            line += nl
            col = len(raw) - raw.rfind("\n")
        else:
            col += len(raw)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, kind: str) -> Token:
        t = self.next()
        if t.kind != kind:
            raise ParseError(f"expected {kind!r}, found {t.text!r}", t.line, t.column)
        return t

    def error(self, msg: str) -> ParseError:
        t = self.peek()
        return ParseError(msg, t.line, t.column)

    # --- shared pieces -----------------------------------------------------

    def dep_term(self) -> Term:
        """Term in dependency/query position: bare ident = variable, quoted = constant."""
        t = self.next()
        if t.kind == "ident":
            return var(t.text)
        if t.kind == "string":
            return const(t.text[1:-1])
        if t.kind == "number":
            return const(t.text)
        raise ParseError(f"expected a term, found {t.text!r}", t.line, t.column)

    def atom(self, allow_annotation: bool) -> Atom:
        name = self.expect("ident").text
        ann = None
        if self.peek().kind == "@":
            if not allow_annotation:
                raise self.error("annotation not allowed here")
            self.next()
            ann = int(self.expect("number").text)
        self.expect("(")
        args = []
        if self.peek().kind != ")":
            args.append(self.dep_term())
            while self.peek().kind == ",":
                self.next()
                args.append(self.dep_term())
        self.expect(")")
        return Atom(name, ann, tuple(args))

    def atom_list(self, allow_annotation: bool, stop: set[str]) -> list[Atom]:
        atoms = [self.atom(allow_annotation)]
        while self.peek().kind == ",":
            self.next()
            atoms.append(self.atom(allow_annotation))
        if self.peek().kind not in stop:
            raise self.error(f"expected one of {sorted(stop)}")
        return atoms


# ---------------------------------------------------------------------------
# mapping files


def parse_mapping(text: str) -> MappingProgram:
    p = _Parser(text)
    abds: list[Abd] = []
    aegds: list[Aegd] = []
    tgds: list[Tgd] = []
    egds: list[Egd] = []
    while p.peek().kind != "eof":
        head_tok = p.expect("ident")
        kind = head_tok.text
        p.expect(":")
        if kind == "abd":
            body = p.atom_list(False, {"arrow2"})
            p.expect("arrow2")
            head = p.atom_list(True, {"."})
            p.expect(".")
            abds.append(Abd(tuple(body), tuple(head)))
        elif kind == "aegd":
            body = p.atom_list(True, {"implies"})
            p.expect("implies")
            left = p.dep_term()
            p.expect("=")
            right = p.dep_term()
            p.expect(".")
            aegds.append(Aegd(tuple(body), left, right))
        elif kind == "tgd":
            body = p.atom_list(False, {"implies"})
            p.expect("implies")
            head = p.atom_list(False, {"."})
            p.expect(".")
            tgds.append(Tgd(tuple(body), tuple(head)))
        elif kind == "egd":
            body = p.atom_list(False, {"implies"})
            p.expect("implies")
            left = p.dep_term()
            p.expect("=")
            right = p.dep_term()
            p.expect(".")
            egds.append(Egd(tuple(body), left, right))
        else:
            raise ParseError(
                f"unknown statement kind {kind!r}", head_tok.line, head_tok.column
            )
    return make_program(abds=abds, aegds=aegds, tgds=tgds, egds=egds)


def serialize_mapping(prog: MappingProgram) -> str:
    return prog.render()


# ---------------------------------------------------------------------------
# facts files


def _fact_term(p: _Parser) -> Term:
    t = p.next()
    if t.kind == "ident" or t.kind == "number":
        return const(t.text)
    if t.kind == "string":
        return const(t.text[1:-1])
    if t.kind == "null":
        ident = int(t.text[2:])
        return onull(ident) if t.text[1] == "o" else cnull(ident)
    raise ParseError(f"expected a constant or null, found {t.text!r}", t.line, t.column)


def _parse_fact(p: _Parser) -> Fact:
    name = p.expect("ident").text
    p.expect("(")
    args = []
    if p.peek().kind != ")":
        args.append(_fact_term(p))
        while p.peek().kind == ",":
            p.next()
            args.append(_fact_term(p))
    p.expect(")")
    return Fact(name, tuple(args))


def parse_facts(text: str, ground: bool = True) -> frozenset[Fact]:
    p = _Parser(text)
    facts = set()
    while p.peek().kind != "eof":
        facts.add(_parse_fact(p))
        p.expect(".")
    return make_instance(facts) if ground else make_table(facts)


def serialize_facts(facts) -> str:
    from .terms import sorted_facts

    return "".join(f"{f.render()}.\n" for f in sorted_facts(facts))


# ---------------------------------------------------------------------------
# global-condition files (one clause per line, literals `|`-separated)


def parse_condition(text: str) -> GlobalCondition:
    clauses = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        p = _Parser(line)
        literals = []
        while True:
            left = _fact_term(p)
            p.expect("neq")
            right = _fact_term(p)
            literals.append((left, right))
            if p.peek().kind == "|":
                p.next()
                continue
            break
        if p.peek().kind != "eof":
            raise ParseError("trailing input after clause", lineno, p.peek().column)
        clause = make_clause(literals)
        if not clause:
            raise ParseError("clause is a contradiction", lineno, 1)
        clauses.append(clause)
    return GlobalCondition(tuple(sorted(set(clauses))))


def serialize_condition(cond: GlobalCondition) -> str:
    return cond.render()


# ---------------------------------------------------------------------------
# labels files (`fact -> {1,3}` per line)


def parse_labels(text: str) -> Labeling:
    labels: Labeling = {}
    p = _Parser(text)
    while p.peek().kind != "eof":
        f = _parse_fact(p)
        p.expect("implies")
        p.expect("{")
        anns = {int(p.expect("number").text)}
        while p.peek().kind == ",":
            p.next()
            anns.add(int(p.expect("number").text))
        p.expect("}")
        labels[f] = frozenset(anns)
    return labels


def serialize_labels(labels: Labeling) -> str:
    from .terms import render_labels

    return render_labels(labels)


# ---------------------------------------------------------------------------
# query files


def _matrix_primary(p: _Parser) -> Matrix:
    tok = p.peek()
    if tok.kind == "(":
        p.next()
        m = _matrix_implies(p)
        p.expect(")")
        return m
    if tok.kind == "ident" and tok.text == "not":
        p.next()
        return MNot(_matrix_primary(p))
    if tok.kind == "ident" and p.tokens[p.i + 1].kind == "(":
        a = p.atom(False)
        return MAtom(a.rel, a.args)
    left = p.dep_term()
    op = p.next()
    if op.kind == "=":
        return MCmp("=", left, p.dep_term())
    if op.kind == "neq":
        return MCmp("!=", left, p.dep_term())
    raise ParseError(f"expected = or != , found {op.text!r}", op.line, op.column)


def _matrix_and(p: _Parser) -> Matrix:
    m = _matrix_primary(p)
    while p.peek().kind == "&":
        p.next()
        m = MBin("&", m, _matrix_primary(p))
    return m


def _matrix_or(p: _Parser) -> Matrix:
    m = _matrix_and(p)
    while p.peek().kind == "|":
        p.next()
        m = MBin("|", m, _matrix_and(p))
    return m


def _matrix_implies(p: _Parser) -> Matrix:
    m = _matrix_or(p)
    if p.peek().kind == "implies":
        p.next()
        return MBin("->", m, _matrix_implies(p))
    return m


def parse_query(text: str) -> Query:
    p = _Parser(text)
    name = p.expect("ident").text
    p.expect("(")
    head = []
    if p.peek().kind != ")":
        head.append(p.dep_term())
        while p.peek().kind == ",":
            p.next()
            head.append(p.dep_term())
    p.expect(")")
    p.expect("neck")

    if p.peek().kind == "ident" and p.peek().text == "forall":
        p.next()
        fvars = [p.dep_term()]
        while p.peek().kind == ",":
            p.next()
            fvars.append(p.dep_term())
        p.expect(":")
        matrix = _matrix_implies(p)
        p.expect(".")
        if p.peek().kind != "eof":
            raise p.error("trailing input after query")
        return make_query(name, tuple(head), matrix=matrix, forall_vars=tuple(fvars))

    disjuncts = []
    while True:
        pos: list[Atom] = []
        neg: list[Atom] = []
        diseqs: list[tuple[Term, Term]] = []
        while True:
            tok = p.peek()
            if tok.kind == "ident" and tok.text == "not":
                p.next()
                neg.append(p.atom(False))
            elif tok.kind == "ident" and p.tokens[p.i + 1].kind == "(":
                pos.append(p.atom(False))
            else:
                left = p.dep_term()
                p.expect("neq")
                right = p.dep_term()
                diseqs.append((left, right))
            if p.peek().kind == ",":
                p.next()
                continue
            break
        disjuncts.append(
            Disjunct(pos=tuple(pos), neg=tuple(neg), diseqs=tuple(diseqs))
        )
        if p.peek().kind == ";":
            p.next()
            continue
        p.expect(".")
        break
    if p.peek().kind != "eof":
        raise p.error("trailing input after query")
    return make_query(name, tuple(head), disjuncts=tuple(disjuncts))
