"""Query ASTs and certain-answer evaluation over universal representatives.

Four evaluator families: naive evaluation for unions of conjunctive
queries; a disequality-aware egd chase for queries with at most one
disequality per disjunct; a satisfiability-based search for universal
queries; and a block-wise procedure for single-positive-atom queries
with negation.  A dispatcher chases, classifies and routes, falling
back to the bounded-domain oracle for everything else.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

from .chase import annotated_chase
from .conditions import TRIVIAL, GlobalCondition, sat_check
from .homs import find_homomorphisms, gaifman_partition
from .mapping import (
    Atom,
    MappingProgram,
    aegd_equates_affected_pair,
    annotation_density,
    derive_views,
    is_gav_reducible,
)
from .terms import (
    BudgetExceededError,
    CNULL,
    CONST,
    EngineError,
    Fact,
    ONULL,
    PreconditionError,
    Term,
    VAR,
    const,
    dom,
    is_ground,
    sorted_facts,
    term_key,
    var,
)

# --- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class MAtom:
    rel: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class MCmp:
    op: str  # "=" or "!="
    left: Term
    right: Term


@dataclass(frozen=True)
class MNot:
    arg: "Matrix"


@dataclass(frozen=True)
class MBin:
    op: str  # "&", "|", "->"
    left: "Matrix"
    right: "Matrix"


Matrix = MAtom | MCmp | MNot | MBin


@dataclass(frozen=True)
class Disjunct:
    pos: tuple[Atom, ...] = ()
    neg: tuple[Atom, ...] = ()
    diseqs: tuple[tuple[Term, Term], ...] = ()

    def variables(self) -> set[Term]:
        out = {a for at in self.pos + self.neg for a in at.args if a.is_var()}
        out |= {t for d in self.diseqs for t in d if t.is_var()}
        return out


@dataclass(frozen=True)
class Query:
    name: str
    head: tuple[Term, ...]
    disjuncts: tuple[Disjunct, ...] | None = None
    matrix: Matrix | None = None
    forall_vars: tuple[Term, ...] = ()

    def is_universal(self) -> bool:
        return self.matrix is not None

    def is_boolean(self) -> bool:
        return not self.head


def _matrix_vars(m: Matrix) -> set[Term]:
    if isinstance(m, MAtom):
        return {a for a in m.args if a.is_var()}
    if isinstance(m, MCmp):
        return {t for t in (m.left, m.right) if t.is_var()}
    if isinstance(m, MNot):
        return _matrix_vars(m.arg)
    return _matrix_vars(m.left) | _matrix_vars(m.right)


def _matrix_consts(m: Matrix) -> set[Term]:
    if isinstance(m, MAtom):
        return {a for a in m.args if a.is_const()}
    if isinstance(m, MCmp):
        return {t for t in (m.left, m.right) if t.is_const()}
    if isinstance(m, MNot):
        return _matrix_consts(m.arg)
    return _matrix_consts(m.left) | _matrix_consts(m.right)


def query_consts(q: Query) -> set[Term]:
    out = {t for t in q.head if t.is_const()}
    if q.matrix is not None:
        out |= _matrix_consts(q.matrix)
    if q.disjuncts:
        for d in q.disjuncts:
            out |= {a for at in d.pos + d.neg for a in at.args if a.is_const()}
            out |= {t for ds in d.diseqs for t in ds if t.is_const()}
    return out


def make_query(
    name: str,
    head: tuple[Term, ...],
    disjuncts: tuple[Disjunct, ...] | None = None,
    matrix: Matrix | None = None,
    forall_vars: tuple[Term, ...] = (),
) -> Query:
    """Validate safety and fold constant-only disequalities."""
    if (disjuncts is None) == (matrix is None):
        raise EngineError("query must be either existential or universal")
    if matrix is not None:
        return Query(name, head, matrix=matrix, forall_vars=forall_vars)
    folded = []
    for d in disjuncts:
        if any(a.annotation is not None for a in d.pos + d.neg):
            raise EngineError("query atoms carry no annotations")
        diseqs = []
        dead = False
        for left, right in d.diseqs:
            if left.is_const() and right.is_const():
                if left == right:
                    dead = True  # unsatisfiable disjunct
                    break
                continue  # trivially true literal
            diseqs.append((left, right))
        if dead:
            continue
        nd = Disjunct(d.pos, d.neg, tuple(diseqs))
        pos_vars = {a for at in nd.pos for a in at.args if a.is_var()}
        for hv in head:
            if hv.is_var() and hv not in pos_vars:
                raise EngineError(
                    f"unsafe query: head variable {hv.render()} not in a positive atom"
                )
        folded.append(nd)
    return Query(name, head, disjuncts=tuple(folded))


# --- substitution helpers ----------------------------------------------------


def _subst_term(m: dict[Term, Term], t: Term) -> Term:
    return m.get(t, t)


def _subst_atom(m: dict[Term, Term], a: Atom) -> Atom:
    return Atom(a.rel, a.annotation, tuple(m.get(t, t) for t in a.args))


def substitute_disjunct(d: Disjunct, m: dict[Term, Term]) -> Disjunct | None:
    """Apply substitution and fold constant-constant disequalities; None when dead."""
    diseqs = []
    for left, right in d.diseqs:
        l, r = m.get(left, left), m.get(right, right)
        if l.is_const() and r.is_const():
            if l == r:
                return None
            continue
        diseqs.append((l, r))
    return Disjunct(
        tuple(_subst_atom(m, a) for a in d.pos),
        tuple(_subst_atom(m, a) for a in d.neg),
        tuple(diseqs),
    )


def head_substitution(q: Query, tvals: Sequence[Term]) -> dict[Term, Term] | None:
    """Head variables bound to the candidate tuple; None when incompatible."""
    if len(tvals) != len(q.head):
        raise EngineError("answer tuple arity mismatch")
    m: dict[Term, Term] = {}
    for hv, v in zip(q.head, tvals):
        if hv.is_var():
            if m.get(hv, v) != v:
                return None
            m[hv] = v
        elif hv != v:
            return None
    return m


# --- classification -----------------------------------------------------------

UCQ = "UCQ"
UCQ_NEQ1 = "UCQ_NEQ1"
UNIVERSAL = "UNIVERSAL"
CQNEG1 = "CQNEG1"
FULL_FO = "FULL_FO"
UNSUPPORTED = "UNSUPPORTED"


def classify(q: Query, prog: MappingProgram) -> tuple[str, str]:
    """Evaluator class for a query under a program, with a reason string.

    Precedence: a full forward view admits any query; then the
    existential classes in increasing generality; universal queries by
    mode; the negation class behind its gates.
    """
    views = derive_views(prog)
    if views.forward_tgds and all(t.is_full() for t in views.forward_tgds):
        return FULL_FO, "all forward dependencies are full"
    if q.is_universal():
        return UNIVERSAL, "universal mode"
    ds = q.disjuncts or ()
    if all(not d.neg for d in ds):
        if all(not d.diseqs for d in ds):
            return UCQ, "no negation, no disequalities"
        if all(len(d.diseqs) <= 1 for d in ds):
            return UCQ_NEQ1, "at most one disequality per disjunct"
        return UNSUPPORTED, "more than one disequality in a disjunct"
    if len(ds) == 1 and not ds[0].diseqs:
        d = ds[0]
        if len(d.pos) != 1:
            return UNSUPPORTED, "negation requires exactly one positive atom"
        pos_terms = {t for a in d.pos for t in a.args}
        neg_vars = {t for a in d.neg for t in a.args if t.is_var()}
        if not neg_vars <= pos_terms:
            return UNSUPPORTED, "negated atoms use variables outside the positive atom"
        _, ad = annotation_density(prog)
        if ad != 1:
            return UNSUPPORTED, "annotation density exceeds 1"
        if not is_gav_reducible(views.forward_tgds):
            return UNSUPPORTED, "forward view is not GAV-reducible"
        if aegd_equates_affected_pair(prog):
            return UNSUPPORTED, "an aegd equates two affected-position variables"
        return CQNEG1, "single positive atom with negation, gates satisfied"
    return UNSUPPORTED, "unrecognized query shape"


# --- naive evaluation ----------------------------------------------------------


def naive_eval(table: Iterable[Fact], q: Query) -> set[tuple[Term, ...]]:
    """Evaluate a pure union of conjunctive queries treating nulls as values.

    Only null-free answer tuples are kept.
    """
    if q.is_universal():
        raise EngineError("naive evaluation expects an existential query")
    T = frozenset(table)
    answers: set[tuple[Term, ...]] = set()
    for d in q.disjuncts:
        if d.neg or d.diseqs:
            raise EngineError("naive evaluation expects a pure positive query")
        pattern = [a.fact() for a in d.pos]
        for h in find_homomorphisms(pattern, T):
            t = tuple(h.get(v, v) for v in q.head)
            if all(x.is_const() for x in t):
                answers.add(t)
    return answers


# --- queries with one disequality per disjunct ----------------------------------


def eval_ucq_neq1(
    table: Iterable[Fact],
    condition: GlobalCondition,
    q: Query,
    tvals: Sequence[Term] = (),
) -> bool:
    """Certain membership of a tuple for a query with <=1 disequality per disjunct.

    The disequality-free part is naively evaluated first.  Each
    remaining disjunct becomes an equality rule; the table is chased
    with those rules while every merge is checked against the global
    condition, and a failing chase certifies the answer.
    """
    m = head_substitution(q, tvals)
    if m is None:
        return False
    pure: list[Disjunct] = []
    rules: list[tuple[tuple[Atom, ...], Term, Term]] = []
    for d in q.disjuncts:
        s = substitute_disjunct(d, m)
        if s is None:
            continue
        if s.neg:
            raise EngineError("disequality evaluation does not support negated atoms")
        if not s.diseqs:
            pure.append(s)
        elif len(s.diseqs) == 1:
            rules.append((s.pos, s.diseqs[0][0], s.diseqs[0][1]))
        else:
            raise EngineError("more than one disequality in a disjunct")

    T = frozenset(table)
    if pure:
        boolean = Query(q.name, (), disjuncts=tuple(pure))
        if naive_eval(T, boolean):
            return True

    facts = set(T)
    merges: list[tuple[Term, Term]] = []
    changed = True
    while changed:
        changed = False
        for body, left, right in rules:
            pattern = [a.fact() for a in body]
            for h in find_homomorphisms(pattern, facts):
                x = h.get(left, left)
                y = h.get(right, right)
                if x == y:
                    continue
                if x.is_const() and y.is_const():
                    return True
                merges.append((x, y))
                if not sat_check(merges, condition):
                    return True
                if y.is_const() or (y.is_null() and x.is_null() and term_key(y) < term_key(x)):
                    x, y = y, x
                facts = {
                    Fact(f.rel, tuple(x if a == y else a for a in f.args))
                    for f in facts
                }
                changed = True
                break
            if changed:
                break
    return False


# --- satisfiability search for one existential disjunct -------------------------

_EXISTS_PROBES = 2_000_000


def _sym(t: Term, copy: int | None = None):
    if t.kind == CONST:
        return ("c", t.value)
    if t.kind == CNULL:
        return ("n", t.value)
    if t.kind == ONULL:
        return ("o", t.value, copy)
    return ("v", t.value)


class _SymUF:
    def __init__(self) -> None:
        self.parent: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return True
        if ra[0] == "c" and rb[0] == "c":
            return False
        if rb[0] == "c":
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def _expand_condition(condition: GlobalCondition, n: int) -> list[list[tuple]] | None:
    """Condition clauses over copy-tagged symbols, in conjunctive normal form.

    Returns None when some clause is already contradictory for n copies.
    """
    cnf: list[list[tuple]] = []
    for clause in condition.clauses:
        conjunctions: list[list[tuple[tuple, tuple]]] = []
        always_true = False
        for x, y in clause:
            if x.kind == CONST and y.kind == CONST:
                if x != y:
                    always_true = True
                    break
                continue  # reflexive constant literal is false
            pairs: list[tuple[tuple, tuple]] = []
            bad = False
            if x.kind == ONULL and y.kind == ONULL:
                for i in range(1, n + 1):
                    for j in range(1, n + 1):
                        a, b = _sym(x, i), _sym(y, j)
                        if a == b:
                            bad = True
                            break
                        pairs.append((a, b))
                    if bad:
                        break
            elif x.kind == ONULL or y.kind == ONULL:
                o, other = (x, y) if x.kind == ONULL else (y, x)
                for i in range(1, n + 1):
                    pairs.append((_sym(o, i), _sym(other)))
            else:
                pairs.append((_sym(x), _sym(y)))
            if not bad:
                conjunctions.append(pairs)
        if always_true:
            continue
        if not conjunctions:
            return None
        for combo in product(*conjunctions):
            cnf.append(list(combo))
    return cnf


def exists_eval(
    table: Iterable[Fact],
    condition: GlobalCondition,
    disjunct: Disjunct,
    probes: int = _EXISTS_PROBES,
) -> bool:
    """Is the (fully head-substituted) disjunct satisfied by some represented instance?

    Searches matches of the positive atoms into copy-tagged table facts,
    binds remaining variables into the active domain, and checks the
    induced equalities against the negated atoms, the disequalities and
    the copy-expanded global condition.
    """
    T = sorted_facts(table)
    by_rel: dict[str, list[Fact]] = {}
    for f in T:
        by_rel.setdefault(f.rel, []).append(f)
    pos = list(disjunct.pos)
    for a in pos:
        if not any(len(f.args) == len(a.args) for f in by_rel.get(a.rel, [])):
            return False
    pos_vars = sorted({t for a in pos for t in a.args if t.is_var()}, key=term_key)
    all_vars = sorted(disjunct.variables(), key=term_key)
    free_vars = [v for v in all_vars if v not in pos_vars]
    terms = sorted(dom(T), key=term_key)
    if not T:
        return False

    budget = [probes]

    def check_leaf(choices: list[tuple[Fact, int]], frees: list[tuple[Term, int]], n: int) -> bool:
        uf = _SymUF()
        for a, (f, c) in zip(pos, choices):
            for p, v in zip(a.args, f.args):
                if not uf.union(_sym(p), _sym(v, c)):
                    return False
        for v, (t, c) in zip(free_vars, frees):
            if not uf.union(_sym(v), _sym(t, c)):
                return False
        clauses: list[list[tuple]] = []
        for l, r in disjunct.diseqs:
            clauses.append([(_sym(l), _sym(r))])
        for a in disjunct.neg:
            for f in by_rel.get(a.rel, []):
                if len(f.args) != len(a.args):
                    continue
                for c in range(1, n + 1):
                    lits = []
                    for p, v in zip(a.args, f.args):
                        sp, sv = _sym(p), _sym(v, c)
                        if sp != sv:
                            lits.append((sp, sv))
                    clauses.append(lits)
        expanded = _expand_condition(condition, n)
        if expanded is None:
            return False
        clauses.extend(expanded)
        for lits in clauses:
            if not any(uf.find(a) != uf.find(b) for a, b in lits):
                return False
        return True

    def rec_free(i: int, frees: list[tuple[Term, int]], used: int) -> bool:
        if i == len(free_vars):
            n = max(used, 1)
            return check_leaf(rec_free.choices, frees, n)
        for t in terms:
            for c in range(1, used + 2):
                budget[0] -= 1
                if budget[0] < 0:
                    raise BudgetExceededError("existential search budget exhausted")
                if rec_free(i + 1, frees + [(t, c)], max(used, c)):
                    return True
        return False

    def rec_pos(i: int, choices: list[tuple[Fact, int]], used: int) -> bool:
        if i == len(pos):
            rec_free.choices = choices
            return rec_free(0, [], used)
        a = pos[i]
        for f in by_rel.get(a.rel, []):
            if len(f.args) != len(a.args):
                continue
            for c in range(1, used + 2):
                budget[0] -= 1
                if budget[0] < 0:
                    raise BudgetExceededError("existential search budget exhausted")
                if rec_pos(i + 1, choices + [(f, c)], max(used, c)):
                    return True
        return False

    return rec_pos(0, [], 0)


# --- universal queries -----------------------------------------------------------

_DNF_CAP = 64


def _nnf(m: Matrix, neg: bool) -> Matrix:
    if isinstance(m, MAtom):
        return MNot(m) if neg else m
    if isinstance(m, MCmp):
        if not neg:
            return m
        return MCmp("!=" if m.op == "=" else "=", m.left, m.right)
    if isinstance(m, MNot):
        return _nnf(m.arg, not neg)
    if m.op == "->":
        return _nnf(MBin("|", MNot(m.left), m.right), neg)
    if m.op == "&":
        op = "|" if neg else "&"
    else:
        op = "&" if neg else "|"
    return MBin(op, _nnf(m.left, neg), _nnf(m.right, neg))


def _dnf(m: Matrix) -> list[list[Matrix]]:
    if isinstance(m, MBin) and m.op == "|":
        return _dnf(m.left) + _dnf(m.right)
    if isinstance(m, MBin) and m.op == "&":
        out = []
        for l in _dnf(m.left):
            for r in _dnf(m.right):
                out.append(l + r)
                if len(out) > _DNF_CAP:
                    raise BudgetExceededError(
                        f"universal-query rewrite exceeds {_DNF_CAP} disjuncts"
                    )
        return out
    return [[m]]


def _literals_to_disjunct(literals: list[Matrix]) -> Disjunct | None:
    """One DNF conjunction into a disjunct; equalities are rewritten away."""
    parent: dict[Term, Term] = {}

    def find(x: Term) -> Term:
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    pos: list[MAtom] = []
    neg: list[MAtom] = []
    diseqs: list[tuple[Term, Term]] = []
    for lit in literals:
        if isinstance(lit, MAtom):
            pos.append(lit)
        elif isinstance(lit, MNot) and isinstance(lit.arg, MAtom):
            neg.append(lit.arg)
        elif isinstance(lit, MCmp) and lit.op == "!=":
            diseqs.append((lit.left, lit.right))
        elif isinstance(lit, MCmp) and lit.op == "=":
            ra, rb = find(lit.left), find(lit.right)
            if ra == rb:
                continue
            if ra.is_const() and rb.is_const():
                return None
            if rb.is_const():
                ra, rb = rb, ra
            parent[rb] = ra
        else:
            raise EngineError("matrix literal is not atomic")

    def res(t: Term) -> Term:
        return find(t)

    out_diseqs = []
    for l, r in diseqs:
        a, b = res(l), res(r)
        if a == b:
            return None
        if a.is_const() and b.is_const():
            continue
        out_diseqs.append((a, b))
    return Disjunct(
        tuple(Atom(a.rel, None, tuple(res(t) for t in a.args)) for a in pos),
        tuple(Atom(a.rel, None, tuple(res(t) for t in a.args)) for a in neg),
        tuple(out_diseqs),
    )


def negated_disjuncts(q: Query, m: dict[Term, Term]) -> list[Disjunct]:
    """DNF of the negated, head-substituted matrix."""
    matrix = _nnf(q.matrix, neg=True)
    out = []
    for literals in _dnf(matrix):
        d = _literals_to_disjunct(literals)
        if d is None:
            continue
        s = substitute_disjunct(d, m)
        if s is not None:
            out.append(s)
    return out


def eval_universal(
    table: Iterable[Fact],
    condition: GlobalCondition,
    q: Query,
    tvals: Sequence[Term] = (),
) -> bool:
    """Certain answer of a universal query: no represented instance
    satisfies any disjunct of the negated matrix."""
    if not q.is_universal():
        raise EngineError("expected a universal-mode query")
    m = head_substitution(q, tvals)
    if m is None:
        return False
    for d in negated_disjuncts(q, m):
        if exists_eval(table, condition, d):
            return False
    return True


# --- single positive atom with negation -------------------------------------------


def _fact_realizable(g: Fact, table: Iterable[Fact]) -> bool:
    """Can one table fact be valuated onto this ground fact?"""
    for s in table:
        if s.rel != g.rel or len(s.args) != len(g.args):
            continue
        m: dict[Term, Term] = {}
        ok = True
        for a, b in zip(s.args, g.args):
            if a.is_const():
                if a != b:
                    ok = False
                    break
            elif m.get(a, b) != b:
                ok = False
                break
            else:
                m[a] = b
        if ok:
            return True
    return False


def _pattern_realizable(pattern: list[Fact], table: Iterable[Fact]) -> bool:
    """Can some represented instance contain an image of the pattern?

    Pattern nulls are revaluation holes shared across its facts.
    """
    rename: dict[Term, Term] = {}
    atoms = []
    for f in pattern:
        args = []
        for a in f.args:
            if a.is_null():
                rename.setdefault(a, var(f"_u{len(rename)}"))
                args.append(rename[a])
            else:
                args.append(a)
        atoms.append(Atom(f.rel, None, tuple(args)))
    return exists_eval(table, TRIVIAL, Disjunct(pos=tuple(atoms)))


def eval_cq_neg1(
    table: Iterable[Fact],
    condition: GlobalCondition,
    q: Query,
    tvals: Sequence[Term] = (),
) -> bool:
    """Certain answer for a one-positive-atom query with negated atoms.

    Requires the representative to carry no global condition and no
    closed nulls (guaranteed by the classification gates).
    """
    if not condition.is_trivial():
        raise PreconditionError("representative carries a nontrivial condition")
    T = frozenset(table)
    if any(t.kind == CNULL for t in dom(T)):
        raise PreconditionError("representative contains closed nulls")
    if q.is_universal() or len(q.disjuncts) != 1 or len(q.disjuncts[0].pos) != 1:
        raise PreconditionError("query is not a single-positive-atom disjunct")
    m = head_substitution(q, tvals)
    if m is None:
        return False
    d = substitute_disjunct(q.disjuncts[0], m)
    if d is None or d.diseqs:
        raise PreconditionError("disequalities are not part of this query class")
    patom = d.pos[0]

    matches: list[tuple[Fact, dict[Term, Term]]] = []
    for h in find_homomorphisms([patom.fact()], T):
        f = Fact(patom.rel, tuple(h.get(t, t) for t in patom.args))
        matches.append((f, h))
    ground = [(f, h) for f, h in matches if is_ground([f])]
    open_part = [(f, h) for f, h in matches if not is_ground([f])]

    blocks = gaifman_partition([f for f, _ in open_part])
    bindings_by_fact: dict[Fact, list[dict[Term, Term]]] = {}
    for f, h in open_part:
        bindings_by_fact.setdefault(f, []).append(h)
    for block in blocks:
        combos = product(*[bindings_by_fact[f] for f in block])
        block_certain = True
        for hs in combos:
            blocked = False
            for natom in d.neg:
                pattern = [
                    Fact(natom.rel, tuple(h.get(t, t) for t in natom.args))
                    for h in hs
                ]
                if _pattern_realizable(pattern, T):
                    blocked = True
                    break
            if blocked:
                block_certain = False
                break
        if block_certain:
            return True

    for f, h in ground:
        if all(
            not _fact_realizable(
                Fact(natom.rel, tuple(h.get(t, t) for t in natom.args)), T
            )
            for natom in d.neg
        ):
            return True
    return False


# --- direct evaluation on ground instances -----------------------------------------


def _matrix_eval(m: Matrix, J: frozenset[Fact], env: dict[Term, Term]) -> bool:
    if isinstance(m, MAtom):
        return Fact(m.rel, tuple(env.get(a, a) for a in m.args)) in J
    if isinstance(m, MCmp):
        l, r = env.get(m.left, m.left), env.get(m.right, m.right)
        return (l == r) if m.op == "=" else (l != r)
    if isinstance(m, MNot):
        return not _matrix_eval(m.arg, J, env)
    if m.op == "&":
        return _matrix_eval(m.left, J, env) and _matrix_eval(m.right, J, env)
    if m.op == "|":
        return _matrix_eval(m.left, J, env) or _matrix_eval(m.right, J, env)
    return (not _matrix_eval(m.left, J, env)) or _matrix_eval(m.right, J, env)


def ground_eval_boolean(q: Query, instance: Iterable[Fact], tvals: Sequence[Term] = ()) -> bool:
    """Active-domain evaluation of a query over one ground instance."""
    J = frozenset(instance)
    adom = sorted(dom(J) | query_consts(q) | set(tvals), key=term_key)
    m = head_substitution(q, tvals)
    if m is None:
        return False
    if q.is_universal():
        fvars = [v for v in q.forall_vars if v.is_var()]
        for combo in product(adom, repeat=len(fvars)):
            env = dict(m)
            env.update(zip(fvars, combo))
            if not _matrix_eval(q.matrix, J, env):
                return False
        return True
    for d in q.disjuncts:
        s = substitute_disjunct(d, m)
        if s is None:
            continue
        pattern = [a.fact() for a in s.pos]
        for h in find_homomorphisms(pattern, J):
            rest = sorted(
                {v for v in s.variables() if v not in h}, key=term_key
            )
            for combo in product(adom, repeat=len(rest)):
                env = dict(h)
                env.update(zip(rest, combo))
                if any(
                    Fact(a.rel, tuple(env.get(t, t) for t in a.args)) in J
                    for a in s.neg
                ):
                    continue
                if all(env.get(l, l) != env.get(r, r) for l, r in s.diseqs):
                    return True
    return False


def ground_answers(q: Query, instance: Iterable[Fact]) -> set[tuple[Term, ...]]:
    J = frozenset(instance)
    adom = sorted(
        {t for t in dom(J) if t.is_const()} | query_consts(q), key=term_key
    )
    out = set()
    for combo in product(adom, repeat=len(q.head)):
        if ground_eval_boolean(q, J, combo):
            out.add(tuple(combo))
    return out


def eval_fo_full(table: Iterable[Fact], q: Query, tvals: Sequence[Term] | None = None):
    """Direct evaluation on a ground chased table (full-dependency programs)."""
    T = frozenset(table)
    if not is_ground(T):
        raise PreconditionError("table is not ground; direct evaluation is unsound")
    if tvals is None:
        return ground_answers(q, T)
    return ground_eval_boolean(q, T, tvals)


# --- dispatcher ---------------------------------------------------------------------


@dataclass
class CertainResult:
    kind: str  # "boolean" | "answers" | "no_solutions"
    boolean: bool | None = None
    answers: set[tuple[Term, ...]] | None = None
    disclaimer: str | None = None
    query_class: str | None = None

    def render(self) -> str:
        if self.kind == "no_solutions":
            return "no-solutions"
        if self.kind == "boolean":
            return "true" if self.boolean else "false"
        rows = sorted(self.answers, key=lambda t: tuple(term_key(x) for x in t))
        return "\n".join("(" + ", ".join(x.render() for x in t) + ")" for t in rows)


def _candidate_tuples(q: Query, table, instance) -> list[tuple[Term, ...]]:
    consts = (
        {t for t in dom(frozenset(table)) if t.is_const()}
        | {t for t in dom(frozenset(instance)) if t.is_const()}
        | query_consts(q)
    )
    adom = sorted(consts, key=term_key)
    return [tuple(c) for c in product(adom, repeat=len(q.head))]


def certain_answers(
    instance: Iterable[Fact],
    prog: MappingProgram,
    q: Query,
    budget=None,
    allow_oracle_fallback: bool = True,
) -> CertainResult:
    """Chase, classify and evaluate certain answers for an annotated program."""
    I = frozenset(instance)
    outcome = annotated_chase(I, prog)
    if not outcome.ok:
        return CertainResult(kind="no_solutions")
    tag, reason = classify(q, prog)
    _, ad = annotation_density(prog)

    def fallback(why: str) -> CertainResult:
        if not allow_oracle_fallback:
            raise EngineError(f"no exact evaluator applies: {why}")
        from . import oracle

        b = budget if budget is not None else oracle.DomainBudget()
        res = oracle.certain_oracle("abd", I, prog, q, b)
        res.disclaimer = f"bounded-domain oracle ({why}; extra={b.extra_constants})"
        return res

    if tag != FULL_FO and (ad != 1 or outcome.heuristic):
        return fallback("annotation density exceeds 1")

    T, cond = outcome.table, outcome.condition
    if tag == FULL_FO:
        value = eval_fo_full(T, q, None if q.head else ())
        if q.is_boolean():
            return CertainResult(kind="boolean", boolean=bool(value), query_class=tag)
        return CertainResult(kind="answers", answers=value, query_class=tag)
    if tag == UCQ:
        answers = naive_eval(T, q)
        if q.is_boolean():
            return CertainResult(kind="boolean", boolean=bool(answers), query_class=tag)
        return CertainResult(kind="answers", answers=answers, query_class=tag)
    if tag in (UCQ_NEQ1, UNIVERSAL, CQNEG1):
        evaluator = {
            UCQ_NEQ1: eval_ucq_neq1,
            UNIVERSAL: eval_universal,
            CQNEG1: eval_cq_neg1,
        }[tag]
        if q.is_boolean():
            return CertainResult(
                kind="boolean", boolean=evaluator(T, cond, q, ()), query_class=tag
            )
        answers = {
            t for t in _candidate_tuples(q, T, I) if evaluator(T, cond, q, t)
        }
        return CertainResult(kind="answers", answers=answers, query_class=tag)
    return fallback(reason)
