"""Bounded-domain brute-force implementations of the semantics definitions.

These are the ground truth the fast algorithms are validated against.
Candidate instances are built over the source domain plus a budgeted
number of fresh constants, restricted to the pool of facts derivable
from some dependency firing, and size-capped.  Verdicts are exact for
that bounded space; callers tag results with the budget used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Callable, Iterable, Sequence

from .chase import annotated_chase
from .homs import exists_extension, find_homomorphisms, match_args
from .mapping import (
    Abd,
    Aegd,
    Atom,
    Egd,
    MappingProgram,
    Tgd,
    annotation_density,
    annotations_of,
    translate_tgds,
)
from .query import CertainResult, Query, ground_answers, ground_eval_boolean
from .terms import (
    BudgetExceededError,
    EngineError,
    Fact,
    Labeling,
    Term,
    const,
    dom,
    fact_key,
    merge_labels,
    sorted_facts,
    term_key,
)


@dataclass
class DomainBudget:
    extra_constants: int = 2
    max_instance_size: int = 4
    enumeration_probes: int = 2_000_000
    search_nodes: int = 500_000
    guided_threshold: int = 5_000  # candidate count above which certain
    # answers for boolean queries switch to the guided search


def domain_terms(instance: Iterable[Fact], budget: DomainBudget) -> list[Term]:
    base = sorted({t for t in dom(frozenset(instance)) if t.is_const()}, key=term_key)
    taken = {t.value for t in base}
    fresh = []
    i = 0
    while len(fresh) < budget.extra_constants:
        i += 1
        name = f"_n{i}"
        if name not in taken:
            fresh.append(const(name))
    return base + fresh


# ---------------------------------------------------------------------------
# diamond view of an annotated program (annotation-expanded relations)


def _dfact(rel: str, ann: int, args: tuple[Term, ...]) -> Fact:
    return Fact(f"{rel}@{ann}", args)


def label_fact(f: Fact, ann: int) -> Fact:
    return _dfact(f.rel, ann, f.args)


def diamond_instance(labels: Labeling) -> frozenset[Fact]:
    return frozenset(
        label_fact(f, ann) for f, anns in labels.items() for ann in anns
    )


def _abd_head_d(abd: Abd) -> list[Fact]:
    return [a.diamond_fact() for a in abd.head]


def _aegd_body_d(aegd: Aegd) -> list[Fact]:
    return [a.diamond_fact() for a in aegd.body]


def models_diamond(
    prog: MappingProgram, source: frozenset[Fact], labeled: frozenset[Fact]
) -> bool:
    """Model-theoretic satisfaction of the annotation-expanded program."""
    for abd in prog.abds:
        body = [a.fact() for a in abd.body]
        head_d = _abd_head_d(abd)
        shared = abd.shared_vars
        for h in find_homomorphisms(body, source):
            bind = {v: h[v] for v in shared}
            if not exists_extension(head_d, labeled, bind):
                return False
        for h in find_homomorphisms(head_d, labeled):
            bind = {v: h[v] for v in shared}
            if not exists_extension(body, source, bind):
                return False
    for aegd in prog.aegds:
        for h in find_homomorphisms(_aegd_body_d(aegd), labeled):
            if h.get(aegd.left, aegd.left) != h.get(aegd.right, aegd.right):
                return False
    return True


# ---------------------------------------------------------------------------
# witness search: minimal sub-models justifying one labeled fact


def _minimal_models_containing(
    prog: MappingProgram,
    source_part: frozenset[Fact],
    labeled_pool: frozenset[Fact],
    target: Fact,
) -> bool:
    """Does a minimal model of the diamond program over source_part,
    drawn from the labeled pool, contain the target fact?"""
    pool = sorted_facts(labeled_pool)
    found: list[set[Fact]] = []
    for size in range(0, len(pool) + 1):
        for combo in combinations(pool, size):
            s = set(combo)
            if any(m < s for m in found):
                continue  # a smaller model inside: not minimal
            if models_diamond(prog, source_part, frozenset(s)):
                found.append(s)
                if target in s:
                    return True
    return False


def _close_witness(
    prog: MappingProgram,
    instance: frozenset[Fact],
    labeled: frozenset[Fact],
    seed_source: frozenset[Fact],
    seed_facts: frozenset[Fact],
    target: Fact,
    nodes: list[int],
) -> bool:
    """Grow a candidate witness to closure, branching over repairs."""
    seen: set[tuple[frozenset[Fact], frozenset[Fact]]] = set()
    stack = [(seed_source, seed_facts)]
    while stack:
        nodes[0] -= 1
        if nodes[0] < 0:
            raise BudgetExceededError("witness search budget exhausted")
        src, tgt = stack.pop()
        key = (src, tgt)
        if key in seen:
            continue
        seen.add(key)

        violation = None
        for aegd in prog.aegds:
            for h in find_homomorphisms(_aegd_body_d(aegd), tgt):
                if h.get(aegd.left, aegd.left) != h.get(aegd.right, aegd.right):
                    violation = ("dead", None)
                    break
            if violation:
                break
        if violation:
            continue

        fixes = None
        for abd in prog.abds:
            head_d = _abd_head_d(abd)
            body = [a.fact() for a in abd.body]
            shared = abd.shared_vars
            for h in find_homomorphisms(head_d, tgt):
                bind = {v: h[v] for v in shared}
                if exists_extension(body, src, bind):
                    continue
                opts = find_homomorphisms(body, instance, binding=bind)
                fixes = [
                    (src | frozenset(Fact(a.rel, tuple(g.get(t, t) for t in a.args))
                                     for a in abd.body), tgt)
                    for g in opts
                ]
                break
            if fixes is not None:
                break
            for h in find_homomorphisms(body, src):
                bind = {v: h[v] for v in shared}
                if exists_extension(head_d, tgt, bind):
                    continue
                exts = find_homomorphisms(head_d, labeled, binding=bind)
                fixes = [
                    (src, tgt | frozenset(Fact(f.rel, tuple(g.get(t, t) for t in f.args))
                                          for f in head_d))
                    for g in exts
                ]
                break
            if fixes is not None:
                break

        if fixes is None:
            # closed: a model; look for a minimal sub-model holding the target
            if target in tgt and _minimal_models_containing(prog, src, tgt, target):
                return True
            continue
        stack.extend(fixes)
    return False


def witness_exists(
    prog: MappingProgram,
    instance: frozenset[Fact],
    labeled: frozenset[Fact],
    target: Fact,
    budget: DomainBudget,
) -> bool:
    """Is there (I', J') with the target fact inside a minimal model?"""
    nodes = [budget.search_nodes]
    jdom = sorted(dom(labeled), key=term_key)
    for abd in prog.abds:
        head_d = _abd_head_d(abd)
        for atom, datom in zip(abd.head, head_d):
            if datom.rel != target.rel:
                continue
            bind = match_args(datom.args, target.args, {}, frozenset())
            if bind is None:
                continue
            shared_bind = {v: t for v, t in bind.items() if v in abd.shared_vars}
            for h in find_homomorphisms(
                [a.fact() for a in abd.body], instance, binding=shared_bind
            ):
                base = dict(bind)
                base.update({v: h[v] for v in abd.shared_vars if v in h})
                rest = sorted(
                    {t for f in head_d for t in f.args if t.is_var() and t not in base},
                    key=term_key,
                )
                for combo in product(jdom, repeat=len(rest)):
                    g = dict(base)
                    g.update(zip(rest, combo))
                    image = frozenset(
                        Fact(f.rel, tuple(g.get(t, t) for t in f.args)) for f in head_d
                    )
                    if not image <= labeled:
                        continue
                    src = frozenset(
                        Fact(a.rel, tuple(h.get(t, t) for t in a.args)) for a in abd.body
                    )
                    if _close_witness(
                        prog, instance, labeled, src, image, target, nodes
                    ):
                        return True
    return False


# ---------------------------------------------------------------------------
# solution checking under the annotated semantics


def _label_options(prog: MappingProgram, rel: str) -> list[frozenset[int]]:
    anns = sorted(annotations_of(prog, rel))
    opts = []
    for size in range(1, len(anns) + 1):
        for combo in combinations(anns, size):
            opts.append(frozenset(combo))
    return opts


def _head_matches(
    prog: MappingProgram, instance: frozenset[Fact], J: frozenset[Fact]
) -> list[tuple[frozenset[tuple[Fact, int]], bool]]:
    """Label-agnostic reverse matches: (labeled-fact set, body-satisfiable)."""
    out = []
    for abd in prog.abds:
        atoms = list(abd.head)
        cands = []
        for a in atoms:
            cands.append([f for f in sorted_facts(J) if f.rel == a.rel and len(f.args) == len(a.args)])
        if any(not c for c in cands):
            continue
        body = [a.fact() for a in abd.body]
        shared = abd.shared_vars

        def rec(i: int, binding: dict, picked: list[Fact]):
            if i == len(atoms):
                need = frozenset(
                    (f, atoms[j].annotation) for j, f in enumerate(picked)
                )
                bind = {v: binding[v] for v in shared if v in binding}
                ok = exists_extension(body, instance, bind)
                out.append((need, ok))
                return
            for f in cands[i]:
                b = match_args(atoms[i].args, f.args, binding, frozenset())
                if b is not None:
                    rec(i + 1, b, picked + [f])

        rec(0, {}, [])
    return out


def _aegd_nogoods(
    prog: MappingProgram, J: frozenset[Fact]
) -> list[frozenset[tuple[Fact, int]]]:
    out = []
    for aegd in prog.aegds:
        atoms = list(aegd.body)
        cands = [
            [f for f in sorted_facts(J) if f.rel == a.rel and len(f.args) == len(a.args)]
            for a in atoms
        ]
        if any(not c for c in cands):
            continue

        def rec(i: int, binding: dict, picked: list[Fact]):
            if i == len(atoms):
                if binding.get(aegd.left, aegd.left) != binding.get(aegd.right, aegd.right):
                    out.append(
                        frozenset((f, atoms[j].annotation) for j, f in enumerate(picked))
                    )
                return
            for f in cands[i]:
                b = match_args(atoms[i].args, f.args, binding, frozenset())
                if b is not None:
                    rec(i + 1, b, picked + [f])

        rec(0, {}, [])
    return out


def _forward_requirements(
    prog: MappingProgram, instance: frozenset[Fact], J: frozenset[Fact]
) -> list[list[frozenset[tuple[Fact, int]]]] | None:
    """Per body match, the labeled images inside J; None when one has none."""
    jdom = sorted(dom(J), key=term_key)
    reqs = []
    for abd in prog.abds:
        body = [a.fact() for a in abd.body]
        for h in find_homomorphisms(body, instance):
            bind = {v: h[v] for v in abd.shared_vars}
            images = []
            rest = sorted(abd.head_only_vars, key=term_key)
            for combo in product(jdom, repeat=len(rest)):
                g = dict(bind)
                g.update(zip(rest, combo))
                img = [
                    (Fact(a.rel, tuple(g.get(t, t) for t in a.args)), a.annotation)
                    for a in abd.head
                ]
                if all(f in J for f, _ in img):
                    images.append(frozenset(img))
            if not images:
                return None
            images = sorted(set(images), key=lambda s: sorted((fact_key(f), a) for f, a in s))
            reqs.append(images)
    return reqs


def find_abd_labeling(
    instance: Iterable[Fact],
    prog: MappingProgram,
    J: Iterable[Fact],
    budget: DomainBudget | None = None,
) -> Labeling | None:
    """A labeling certifying J as a solution, or None.

    Searches labelings satisfying the annotation-expanded program
    globally, then insists every labeled fact sits inside some minimal
    justifying sub-model.  Facts with fewer label options are decided
    first; reverse-match nogoods and forward-coverage requirements are
    propagated incrementally.
    """
    budget = budget or DomainBudget()
    I = frozenset(instance)
    Jf = frozenset(J)
    base = sorted_facts(Jf)
    options_by_fact = {}
    for f in base:
        opts = _label_options(prog, f.rel)
        if not opts:
            return None
        options_by_fact[f] = opts
    # forced-label facts first, then co-located facts adjacent
    facts = sorted(
        base,
        key=lambda f: (
            len(options_by_fact[f]) > 1,
            tuple(term_key(a) for a in f.args),
            f.rel,
        ),
    )
    options = [options_by_fact[f] for f in facts]
    idx = {f: i for i, f in enumerate(facts)}

    reqs = _forward_requirements(prog, I, Jf)
    if reqs is None:
        return None
    matches = _head_matches(prog, I, Jf)
    nogoods = [need for need, ok in matches if not ok] + _aegd_nogoods(prog, Jf)

    # a labeled fact must sit inside some fully-labeled, source-justified
    # reverse match of an atom carrying that label (else no minimal model
    # can ever contain it)
    participation: dict[tuple[Fact, int], list[frozenset]] = {}
    for need, ok in matches:
        if not ok:
            continue
        for pair in need:
            participation.setdefault(pair, []).append(need)

    ngs_by_fact: list[list[frozenset]] = [[] for _ in facts]
    for ng in nogoods:
        last = max(idx[f] for f, _ in ng)
        ngs_by_fact[last].append(ng)
    reqs_by_fact: list[list[list[frozenset]]] = [[] for _ in facts]
    for images in reqs:
        touched = {idx[f] for img in images for f, _ in img}
        for i in touched:
            reqs_by_fact[i].append(images)
    part_by_fact: list[list[tuple[int, int, list[frozenset]]]] = [[] for _ in facts]
    for (f, a), images in participation.items():
        touched = {idx[g] for img in images for g, _ in img} | {idx[f]}
        for i in touched:
            part_by_fact[i].append((idx[f], a, images))

    nodes = [budget.search_nodes]

    def holds(need: frozenset, labels: list) -> bool:
        return all(labels[idx[f]] is not None and a in labels[idx[f]] for f, a in need)

    def could_hold(need: frozenset, labels: list) -> bool:
        for f, a in need:
            got = labels[idx[f]]
            if got is not None and a not in got:
                return False
        return True

    def dfs(i: int, labels: list) -> Labeling | None:
        nodes[0] -= 1
        if nodes[0] < 0:
            raise BudgetExceededError("labeling search budget exhausted")
        if i == len(facts):
            cand = {f: labels[idx[f]] for f in facts}
            labeled = diamond_instance(cand)
            if not models_diamond(prog, I, labeled):
                return None
            for f, anns in sorted(cand.items(), key=lambda kv: fact_key(kv[0])):
                for a in sorted(anns):
                    if not witness_exists(prog, I, labeled, label_fact(f, a), budget):
                        return None
            return cand
        for opt in options[i]:
            labels[i] = opt
            ok = all(not holds(ng, labels) for ng in ngs_by_fact[i])
            if ok:
                for images in reqs_by_fact[i]:
                    if not any(could_hold(img, labels) for img in images):
                        ok = False
                        break
            if ok:
                for fidx, a, images in part_by_fact[i]:
                    got = labels[fidx]
                    if got is None or a not in got:
                        continue
                    if not any(could_hold(img, labels) for img in images):
                        ok = False
                        break
            if ok:
                res = dfs(i + 1, labels)
                if res is not None:
                    return res
        labels[i] = None
        return None

    # labels whose every participation image is already dead can be
    # stripped from the option lists up front
    for i, f in enumerate(facts):
        trimmed = []
        for opt in options[i]:
            if all((f, a) in participation for a in opt):
                trimmed.append(opt)
        if not trimmed:
            return None
        options[i] = trimmed

    return dfs(0, [None] * len(facts))


def check_labeling(
    instance: Iterable[Fact],
    prog: MappingProgram,
    J: Iterable[Fact],
    labels: Labeling,
    budget: DomainBudget | None = None,
) -> bool:
    """Does this specific labeling certify J as a solution?"""
    budget = budget or DomainBudget()
    I = frozenset(instance)
    Jf = frozenset(J)
    if set(labels) != set(Jf) or any(not anns for anns in labels.values()):
        return False
    for f, anns in labels.items():
        if not anns <= frozenset(annotations_of(prog, f.rel)):
            return False
    labeled = diamond_instance(labels)
    if not models_diamond(prog, I, labeled):
        return False
    return all(
        witness_exists(prog, I, labeled, label_fact(f, a), budget)
        for f, anns in labels.items()
        for a in anns
    )


def check_abd_solution(
    instance: Iterable[Fact],
    prog: MappingProgram,
    J: Iterable[Fact],
    budget: DomainBudget | None = None,
) -> bool:
    return find_abd_labeling(instance, prog, J, budget) is not None


# ---------------------------------------------------------------------------
# candidate pools and enumeration


def abd_fact_pool(
    instance: Iterable[Fact], prog: MappingProgram, domain: Sequence[Term]
) -> list[Fact]:
    I = frozenset(instance)
    pool: set[Fact] = set()
    for abd in prog.abds:
        body = [a.fact() for a in abd.body]
        for h in find_homomorphisms(body, I):
            rest = sorted(abd.head_only_vars, key=term_key)
            for combo in product(domain, repeat=len(rest)):
                g = dict(h)
                g.update(zip(rest, combo))
                for a in abd.head:
                    pool.add(Fact(a.rel, tuple(g.get(t, t) for t in a.args)))
    return sorted_facts(pool)


def tgd_fact_pool(
    instance: Iterable[Fact], tgds: Sequence[Tgd], domain: Sequence[Term]
) -> list[Fact]:
    I = frozenset(instance)
    pool: set[Fact] = set()
    for tgd in tgds:
        body = [a.fact() for a in tgd.body]
        for h in find_homomorphisms(body, I):
            rest = sorted(tgd.existential_vars, key=term_key)
            for combo in product(domain, repeat=len(rest)):
                g = dict(h)
                g.update(zip(rest, combo))
                for a in tgd.head:
                    pool.add(Fact(a.rel, tuple(g.get(t, t) for t in a.args)))
    return sorted_facts(pool)


def _subsets(pool: list[Fact], budget: DomainBudget):
    probes = budget.enumeration_probes
    count = 0
    for size in range(0, budget.max_instance_size + 1):
        for combo in combinations(pool, size):
            count += 1
            if count > probes:
                raise BudgetExceededError(
                    f"candidate enumeration exceeded {probes} probes"
                )
            yield frozenset(combo)


def _image_masks(
    body: list[Fact],
    head: list[Fact],
    shared: set[Term],
    exist: list[Term],
    instance: frozenset[Fact],
    domain: Sequence[Term],
    index: dict[Fact, int],
) -> list[list[int]] | None:
    """Per body match, bitmasks of full head images inside the pool."""
    out = []
    for h in find_homomorphisms(body, instance):
        bind = {v: h[v] for v in shared if v in h}
        masks = []
        for combo in product(domain, repeat=len(exist)):
            g = dict(bind)
            g.update(zip(exist, combo))
            mask = 0
            ok = True
            for f in head:
                ff = Fact(f.rel, tuple(g.get(t, t) for t in f.args))
                bit = index.get(ff)
                if bit is None:
                    ok = False
                    break
                mask |= 1 << bit
            if ok:
                masks.append(mask)
        if not masks:
            return None
        out.append(sorted(set(masks)))
    return out


def _masked_candidates(
    pool: list[Fact], requirements: list[list[int]], budget: DomainBudget
):
    """Size-capped pool subsets whose mask covers one image per requirement."""
    index_bits = list(range(len(pool)))
    probes = budget.enumeration_probes
    count = 0
    for size in range(0, budget.max_instance_size + 1):
        for combo in combinations(index_bits, size):
            count += 1
            if count > probes:
                raise BudgetExceededError(
                    f"candidate enumeration exceeded {probes} probes"
                )
            mask = 0
            for i in combo:
                mask |= 1 << i
            if all(any(img & ~mask == 0 for img in images) for images in requirements):
                yield frozenset(pool[i] for i in combo)


def enumerate_abd_solutions(
    instance: Iterable[Fact], prog: MappingProgram, budget: DomainBudget | None = None
) -> list[frozenset[Fact]]:
    budget = budget or DomainBudget()
    I = frozenset(instance)
    domain = domain_terms(I, budget)
    pool = abd_fact_pool(I, prog, domain)
    index = {f: i for i, f in enumerate(pool)}
    requirements: list[list[int]] = []
    for abd in prog.abds:
        reqs = _image_masks(
            [a.fact() for a in abd.body],
            [a.fact() for a in abd.head],
            abd.shared_vars,
            sorted(abd.head_only_vars, key=term_key),
            I,
            domain,
            index,
        )
        if reqs is None:
            return []
        requirements.extend(reqs)
    out = []
    for J in _masked_candidates(pool, requirements, budget):
        if check_abd_solution(I, prog, J, budget):
            out.append(J)
    return sorted(out, key=lambda s: (len(s), [fact_key(f) for f in sorted_facts(s)]))


# ---------------------------------------------------------------------------
# inference-based semantics


def _satisfies_unidirectional(
    I: frozenset[Fact], J: frozenset[Fact], tgds: Sequence[Tgd], egds: Sequence[Egd]
) -> bool:
    for tgd in tgds:
        body = [a.fact() for a in tgd.body]
        head = [a.fact() for a in tgd.head]
        shared = tgd.frontier_vars
        for h in find_homomorphisms(body, I):
            bind = {v: h[v] for v in shared}
            if not exists_extension(head, J, bind):
                return False
    for egd in egds:
        body = [a.fact() for a in egd.body]
        for h in find_homomorphisms(body, J):
            if h.get(egd.left, egd.left) != h.get(egd.right, egd.right):
                return False
    return True


def check_inference_solution(
    instance: Iterable[Fact],
    prog: MappingProgram,
    J: Iterable[Fact],
    budget: DomainBudget | None = None,
) -> bool:
    """Inference-strategy search, decomposed per dependency.

    A strategy picks, for every body match of every tgd, at least one
    full head instantiation inside J (plus optional extra firings);
    every fact of J must come from some firing.  The invented-value
    guard is scoped per null-connected head block: a joint match of a
    block's atoms onto tuples a strategy actually produced *at those
    atoms*, touching at least one weakly inferred tuple, must have a
    source match for its frontier binding.  Cross-block and cross-role
    coincidences carry no null constraint and are not violations.
    """
    budget = budget or DomainBudget()
    I = frozenset(instance)
    Jf = frozenset(J)
    if prog.is_annotated():
        raise EngineError("inference semantics applies to unidirectional programs")
    if not _satisfies_unidirectional(I, Jf, prog.tgds, prog.egds):
        return False
    jfacts = sorted_facts(Jf)
    jdom = sorted(dom(Jf) | {t for t in dom(I) if t.is_const()}, key=term_key)
    idx = {f: 1 << i for i, f in enumerate(jfacts)}
    full = (1 << len(jfacts)) - 1
    nodes = [budget.search_nodes]

    per_tgd_options: list[list[int]] = []
    for tgd in prog.tgds:
        options = _tgd_strategy_unions(tgd, I, Jf, jfacts, idx, jdom, nodes)
        if options is None:
            return False
        per_tgd_options.append(sorted(options))

    def cover(i: int, acc: int) -> bool:
        if i == len(per_tgd_options):
            return acc == full
        for w in per_tgd_options[i]:
            if cover(i + 1, acc | w):
                return True
        return False

    if not prog.tgds:
        return not Jf
    return cover(0, 0)


def _tgd_strategy_unions(
    tgd: Tgd,
    I: frozenset[Fact],
    Jf: frozenset[Fact],
    jfacts: list[Fact],
    idx: dict[Fact, int],
    jdom: list[Term],
    nodes: list[int],
) -> set[int] | None:
    """Achievable inferred-set masks for one tgd, or None when a body
    match has no image at all inside J."""
    body = [a.fact() for a in tgd.body]
    head = [a.fact() for a in tgd.head]
    atoms = list(range(len(head)))
    exist = sorted(tgd.existential_vars, key=term_key)
    blocks = gaifman_partition_indices(head, tgd.frontier_vars)

    matches = find_homomorphisms(body, I)
    candidates: list[tuple[int, tuple[Fact, ...]]] = []  # (mask, per-atom facts)
    match_options: list[list[int]] = []
    strong = 0
    for h in matches:
        bind = {v: h[v] for v in tgd.frontier_vars}
        opts = []
        for combo in product(jdom, repeat=len(exist)):
            g = dict(bind)
            g.update(zip(exist, combo))
            per_atom = []
            mask = 0
            ok = True
            for f in head:
                ff = Fact(f.rel, tuple(g.get(t, t) for t in f.args))
                if ff not in idx:
                    ok = False
                    break
                per_atom.append(ff)
                mask |= idx[ff]
            if ok:
                cand = (mask, tuple(per_atom))
                if cand not in candidates:
                    candidates.append(cand)
                opts.append(candidates.index(cand))
        if not opts:
            return None
        match_options.append(sorted(set(opts)))
        for f in head:
            if all(not t.is_var() or t in bind for t in f.args):
                ff = Fact(f.rel, tuple(bind.get(t, t) for t in f.args))
                if ff in idx:
                    strong |= idx[ff]

    out: set[int] = set()
    seen_states: set[tuple] = set()
    phantom_cache: dict[tuple, bool] = {}

    def provenance_key(chosen: frozenset[int]) -> tuple:
        return tuple(sorted(chosen))

    def record(chosen: frozenset[int]) -> bool:
        union = 0
        for c in chosen:
            union |= candidates[c][0]
        key = provenance_key(chosen)
        if key in phantom_cache:
            ok = phantom_cache[key]
        else:
            ok = not _block_phantom(
                tgd, I, head, blocks, [candidates[c][1] for c in chosen], union, strong, jfacts
            )
            phantom_cache[key] = ok
        if ok:
            out.add(union)
        return ok

    def extend_with_extras(chosen: frozenset[int]) -> None:
        stack = [chosen]
        while stack:
            nodes[0] -= 1
            if nodes[0] < 0:
                raise BudgetExceededError("inference strategy search budget exhausted")
            cur = stack.pop()
            key = provenance_key(cur)
            if key in seen_states:
                continue
            seen_states.add(key)
            if not record(cur):
                continue  # extra firings only add phantoms, never remove them
            for c in range(len(candidates)):
                if c not in cur:
                    stack.append(cur | {c})

    def choose(i: int, chosen: frozenset[int]) -> None:
        if i == len(match_options):
            extend_with_extras(chosen)
            return
        for c in match_options[i]:
            choose(i + 1, chosen | {c})

    if not matches:
        return {0}
    choose(0, frozenset())
    return out


def gaifman_partition_indices(
    head: list[Fact], frontier: set[Term]
) -> list[list[int]]:
    """Indices of the head atoms grouped into null-connected blocks."""
    from .homs import gaifman_partition

    blocks = gaifman_partition(head, frozen=frontier)
    out = []
    used: set[int] = set()
    for block in blocks:
        ids = []
        for f in block:
            for i, g in enumerate(head):
                if g == f and i not in used:
                    used.add(i)
                    ids.append(i)
                    break
        out.append(sorted(ids))
    return out


def _block_phantom(
    tgd: Tgd,
    I: frozenset[Fact],
    head: list[Fact],
    blocks: list[list[int]],
    images: list[tuple[Fact, ...]],
    union: int,
    strong: int,
    jfacts: list[Fact],
) -> bool:
    """A block joint match over atom-wise produced tuples, touching a
    weakly inferred tuple, whose frontier binding has no source match."""
    weak_facts = {
        f for i, f in enumerate(jfacts) if (union & (1 << i)) and not (strong & (1 << i))
    }
    per_atom: list[set[Fact]] = [set() for _ in head]
    for image in images:
        for i, f in enumerate(image):
            per_atom[i].add(f)
    body = [a.fact() for a in tgd.body]

    for block in blocks:
        matches: list[dict[Term, Term]] = [{}]
        touched: list[set[Fact]] = [set()]
        for i in block:
            nxt_m, nxt_t = [], []
            for m, t in zip(matches, touched):
                for f in sorted(per_atom[i], key=lambda x: str(x)):
                    b = match_args(head[i].args, f.args, m, frozenset())
                    if b is not None:
                        nxt_m.append(b)
                        nxt_t.append(t | {f})
            matches, touched = nxt_m, nxt_t
        for m, t in zip(matches, touched):
            if not (t & weak_facts):
                continue
            bind = {v: m[v] for v in tgd.frontier_vars if v in m}
            if not exists_extension(body, I, bind):
                return True
    return False


def enumerate_inference_solutions(
    instance: Iterable[Fact], prog: MappingProgram, budget: DomainBudget | None = None
) -> list[frozenset[Fact]]:
    budget = budget or DomainBudget()
    I = frozenset(instance)
    domain = domain_terms(I, budget)
    pool = tgd_fact_pool(I, prog.tgds, domain)
    index = {f: i for i, f in enumerate(pool)}
    requirements: list[list[int]] = []
    for tgd in prog.tgds:
        reqs = _image_masks(
            [a.fact() for a in tgd.body],
            [a.fact() for a in tgd.head],
            tgd.frontier_vars,
            sorted(tgd.existential_vars, key=term_key),
            I,
            domain,
            index,
        )
        if reqs is None:
            return []
        requirements.extend(reqs)
    out = []
    for J in _masked_candidates(pool, requirements, budget):
        if not _satisfies_unidirectional(I, J, prog.tgds, prog.egds):
            continue
        if check_inference_solution(I, prog, J, budget):
            out.append(J)
    return sorted(out, key=lambda s: (len(s), [fact_key(f) for f in sorted_facts(s)]))


# ---------------------------------------------------------------------------
# OWA and GCWA* semantics


def _match_unions(
    instance: frozenset[Fact], tgds: Sequence[Tgd], domain: Sequence[Term], budget: DomainBudget
) -> list[frozenset[Fact]]:
    """Unions of one head image per body match: the minimal-model candidates."""
    per_match: list[list[frozenset[Fact]]] = []
    for tgd in tgds:
        body = [a.fact() for a in tgd.body]
        for h in find_homomorphisms(body, instance):
            bind = {v: h[v] for v in tgd.frontier_vars}
            images = []
            rest = sorted(tgd.existential_vars, key=term_key)
            for combo in product(domain, repeat=len(rest)):
                g = dict(bind)
                g.update(zip(rest, combo))
                images.append(
                    frozenset(
                        Fact(a.rel, tuple(g.get(t, t) for t in a.args)) for a in tgd.head
                    )
                )
            per_match.append(sorted(set(images), key=lambda s: sorted(map(fact_key, s))))
    total = 1
    for images in per_match:
        total *= len(images)
        if total > budget.enumeration_probes:
            raise BudgetExceededError("match-union enumeration exceeds budget")
    out = set()
    for combo in product(*per_match):
        out.add(frozenset().union(*combo) if combo else frozenset())
    return sorted(out, key=lambda s: (len(s), sorted(map(fact_key, s))))


def enumerate_owa_solutions(
    instance: Iterable[Fact],
    prog: MappingProgram,
    budget: DomainBudget | None = None,
    minimal_only: bool = True,
) -> list[frozenset[Fact]]:
    """Bounded open-world solutions.

    With minimal_only the per-match image unions are returned; those
    suffice as certain-answer representatives for monotone queries.
    Otherwise all pool subsets within the size cap are filtered.
    """
    budget = budget or DomainBudget()
    I = frozenset(instance)
    domain = domain_terms(I, budget)
    if minimal_only:
        unions = _match_unions(I, prog.tgds, domain, budget)
        return [
            J for J in unions if _satisfies_unidirectional(I, J, prog.tgds, prog.egds)
        ]
    pool = tgd_fact_pool(I, prog.tgds, domain)
    return [
        J
        for J in _subsets(pool, budget)
        if _satisfies_unidirectional(I, J, prog.tgds, prog.egds)
    ]


def gcwa_star_solutions(
    instance: Iterable[Fact], prog: MappingProgram, budget: DomainBudget | None = None
) -> list[frozenset[Fact]]:
    """Unions of subset-minimal solutions that still satisfy the program."""
    budget = budget or DomainBudget()
    I = frozenset(instance)
    domain = domain_terms(I, budget)
    unions = _match_unions(I, prog.tgds, domain, budget)
    models = [
        J for J in unions if _satisfies_unidirectional(I, J, prog.tgds, prog.egds)
    ]
    minimal = [J for J in models if not any(K < J for K in models)]
    if len(minimal) > 20:
        raise BudgetExceededError("too many minimal solutions for union enumeration")
    out = set()
    for size in range(1, len(minimal) + 1):
        for combo in combinations(minimal, size):
            u = frozenset().union(*combo)
            if _satisfies_unidirectional(I, u, prog.tgds, prog.egds):
                out.add(u)
    return sorted(out, key=lambda s: (len(s), sorted(map(fact_key, s))))


# ---------------------------------------------------------------------------
# guided construction of annotated solutions (large reduction instances)


def _inert_head_vars(prog: MappingProgram, excluded_rels: frozenset[str]) -> dict[int, set[Term]]:
    """Existential head variables whose value can never matter.

    A variable is inert when it occurs at exactly one head position,
    the (relation, annotation) pair of that atom appears in no other
    abd head and no aegd, and the relation is outside the excluded set
    (the query's relations).  Solutions are closed under rewriting such
    positions to any fixed value, so one branch value suffices.
    """
    atom_owner: dict[tuple[str, int], int] = {}
    multi: set[tuple[str, int]] = set()
    for i, abd in enumerate(prog.abds):
        for a in abd.head:
            key = (a.rel, a.annotation)
            if key in atom_owner and atom_owner[key] != i:
                multi.add(key)
            atom_owner.setdefault(key, i)
    aegd_keys = {(a.rel, a.annotation) for d in prog.aegds for a in d.body}
    out: dict[int, set[Term]] = {}
    for i, abd in enumerate(prog.abds):
        inert: set[Term] = set()
        for z in abd.head_only_vars:
            occ = [
                (a.rel, a.annotation)
                for a in abd.head
                for t in a.args
                if t == z
            ]
            if len(occ) != 1:
                continue
            key = occ[0]
            if key in multi or key in aegd_keys or key[0] in excluded_rels:
                continue
            inert.add(z)
        out[i] = inert
    return out


def guided_abd_solution(
    instance: Iterable[Fact],
    prog: MappingProgram,
    budget: DomainBudget | None = None,
    reject: Callable[[frozenset[Fact]], bool] | None = None,
    reject_unsafe_rels: frozenset[str] | None = frozenset(),
    reject_rels: frozenset[str] = frozenset(),
) -> frozenset[Fact] | None:
    """Depth-first search over one head image per forward trigger.

    Complete for solutions that are unions of single firings per
    trigger; callers needing full generality must use enumeration.
    ``reject`` filters candidates; subtrees are pruned once a partial
    candidate is rejected and none of ``reject_unsafe_rels`` (the
    relations whose later growth could flip the verdict) can still
    grow.  ``None`` disables subtree pruning entirely.  ``reject_rels``
    must name every relation the predicate inspects.
    """
    budget = budget or DomainBudget()
    I = frozenset(instance)
    domain = domain_terms(I, budget)
    inert = _inert_head_vars(prog, reject_rels)
    abd_index = {id(abd): i for i, abd in enumerate(prog.abds)}
    triggers: list[tuple[Abd, dict[Term, Term], list[Term]]] = []
    for abd in prog.abds:
        body = [a.fact() for a in abd.body]
        for h in find_homomorphisms(body, I):
            free = sorted(abd.head_only_vars, key=term_key)
            triggers.append((abd, h, free))
    triggers.sort(key=lambda t: (len(t[2]), t[0].render(), sorted(t[1].items(), key=lambda kv: term_key(kv[0]))))

    remaining_heads = [{a.rel for a in abd.head} for abd, _, _ in triggers]
    nodes = [budget.search_nodes]
    failed: set[tuple[int, frozenset]] = set()  # choice vectors reconverge often

    def seeded_matches(pattern: list[Fact], labeled: frozenset[Fact], news: set[Fact]):
        """Joint matches of the pattern using at least one new fact."""
        seen = set()
        for pos in range(len(pattern)):
            for seed in news:
                bind = match_args(pattern[pos].args, seed.args, {}, frozenset())
                if bind is None or pattern[pos].rel != seed.rel:
                    continue
                for h in find_homomorphisms(pattern, labeled, binding=bind):
                    key = tuple(sorted(h.items(), key=lambda kv: term_key(kv[0])))
                    if key not in seen:
                        seen.add(key)
                        yield h

    def bad_partial(facts: dict[Fact, frozenset[int]], new: list[tuple[Fact, int]]) -> bool:
        labeled = diamond_instance(facts)
        news = {label_fact(f, a) for f, a in new}
        for aegd in prog.aegds:
            for h in seeded_matches(_aegd_body_d(aegd), labeled, news):
                if h.get(aegd.left, aegd.left) != h.get(aegd.right, aegd.right):
                    return True
        for abd in prog.abds:
            head_d = _abd_head_d(abd)
            body = [a.fact() for a in abd.body]
            shared = abd.shared_vars
            for h in seeded_matches(head_d, labeled, news):
                bind = {v: h[v] for v in shared}
                if not exists_extension(body, I, bind):
                    return True
        return False

    def dfs(i: int, facts: dict[Fact, frozenset[int]]) -> frozenset[Fact] | None:
        nodes[0] -= 1
        if nodes[0] < 0:
            raise BudgetExceededError("guided solution search budget exhausted")
        state = (i, frozenset(facts.items()))
        if state in failed:
            return None
        if i == len(triggers):
            J = frozenset(facts)
            if reject is not None and reject(J):
                return None
            if check_labeling(I, prog, J, dict(facts), budget):
                return J
            if check_abd_solution(I, prog, J, budget):
                return J
            return None
        abd, h, rest = triggers[i]
        later_rels = set().union(*remaining_heads[i + 1 :]) if i + 1 < len(triggers) else set()
        can_prune = (
            reject is not None
            and reject_unsafe_rels is not None
            and not (reject_unsafe_rels & later_rels)
        )
        inert_here = inert.get(abd_index[id(abd)], set())
        domains = [
            domain[:1] if z in inert_here else domain for z in rest
        ]
        for combo in product(*domains):
            g = dict(h)
            g.update(zip(rest, combo))
            new = []
            nf = dict(facts)
            for a in abd.head:
                f = Fact(a.rel, tuple(g.get(t, t) for t in a.args))
                new.append((f, a.annotation))
                nf[f] = nf.get(f, frozenset()) | {a.annotation}
            if bad_partial(nf, new):
                continue
            if can_prune and reject(frozenset(nf)):
                continue
            res = dfs(i + 1, nf)
            if res is not None:
                return res
        failed.add(state)
        return None

    if not triggers:
        return frozenset() if check_abd_solution(I, prog, frozenset(), budget) else None
    return dfs(0, {})


def exists_solution_general(
    instance: Iterable[Fact], prog: MappingProgram, budget: DomainBudget | None = None
) -> tuple[bool, bool]:
    """(verdict, authoritative).

    Density-1 programs are decided exactly by the chase; denser ones
    get a bounded search whose positive verdicts are sound and whose
    negative verdicts carry a bounded-domain caveat.
    """
    budget = budget or DomainBudget()
    I = frozenset(instance)
    _, ad = annotation_density(prog)
    if ad <= 1:
        return annotated_chase(I, prog).ok, True
    found = guided_abd_solution(I, prog, budget)
    return (found is not None), found is not None


# ---------------------------------------------------------------------------
# certain answers by enumeration


def _solutions_for(
    semantics: str,
    instance: frozenset[Fact],
    prog: MappingProgram,
    budget: DomainBudget,
) -> list[frozenset[Fact]]:
    if semantics == "abd":
        p = prog if prog.is_annotated() else translate_tgds(prog)
        return enumerate_abd_solutions(instance, p, budget)
    if prog.is_annotated():
        raise EngineError(f"{semantics} semantics needs a unidirectional program")
    if semantics == "inf":
        return enumerate_inference_solutions(instance, prog, budget)
    if semantics == "owa":
        return enumerate_owa_solutions(instance, prog, budget)
    if semantics == "gcwa":
        return gcwa_star_solutions(instance, prog, budget)
    raise EngineError(f"unknown semantics tag {semantics!r}")


def certain_oracle(
    semantics: str,
    instance: Iterable[Fact],
    prog: MappingProgram,
    q: Query,
    budget: DomainBudget | None = None,
) -> CertainResult:
    """Certain answers by intersecting the query over enumerated solutions.

    Boolean queries against annotated programs whose candidate space
    exceeds the enumeration budget fall back to a guided search for a
    falsifying solution.
    """
    budget = budget or DomainBudget()
    I = frozenset(instance)
    if semantics == "owa" and (q.is_universal() or any(d.neg for d in q.disjuncts or ())):
        solutions = enumerate_owa_solutions(I, prog, budget, minimal_only=False)
        return _intersect(q, solutions)
    if semantics == "abd" and q.is_boolean():
        p = prog if prog.is_annotated() else translate_tgds(prog)
        pool = abd_fact_pool(I, p, domain_terms(I, budget))
        total = sum(
            _comb(len(pool), s) for s in range(0, budget.max_instance_size + 1)
        )
        if total > budget.guided_threshold:
            return _guided_certain_abd(I, p, q, budget)
    try:
        solutions = _solutions_for(semantics, I, prog, budget)
    except BudgetExceededError:
        if semantics != "abd" or not q.is_boolean():
            raise
        return _guided_certain_abd(I, prog, q, budget)
    return _intersect(q, solutions)


def _comb(n: int, k: int) -> int:
    from math import comb

    return comb(n, k) if k <= n else 0


def _matrix_rels(m) -> set[str]:
    from .query import MAtom, MBin, MNot

    if isinstance(m, MAtom):
        return {m.rel}
    if isinstance(m, MNot):
        return _matrix_rels(m.arg)
    if isinstance(m, MBin):
        return _matrix_rels(m.left) | _matrix_rels(m.right)
    return set()


def _intersect(q: Query, solutions: list[frozenset[Fact]]) -> CertainResult:
    if not solutions:
        return CertainResult(kind="no_solutions")
    if q.is_boolean():
        return CertainResult(
            kind="boolean",
            boolean=all(ground_eval_boolean(q, J, ()) for J in solutions),
        )
    answers = None
    for J in solutions:
        a = ground_answers(q, J)
        answers = a if answers is None else (answers & a)
        if not answers:
            break
    return CertainResult(kind="answers", answers=answers or set())


def _guided_certain_abd(
    I: frozenset[Fact], prog: MappingProgram, q: Query, budget: DomainBudget
) -> CertainResult:
    p = prog if prog.is_annotated() else translate_tgds(prog)
    any_solution = guided_abd_solution(I, p, budget)
    if any_solution is None:
        return CertainResult(kind="no_solutions")
    if q.is_universal():
        unsafe = None  # matrix may mention anything; never prune subtrees
        qrels = frozenset(_matrix_rels(q.matrix))
    else:
        unsafe = frozenset(a.rel for d in q.disjuncts for a in d.neg)
        qrels = frozenset(a.rel for d in q.disjuncts for a in d.pos + d.neg)
    counterexample = guided_abd_solution(
        I,
        p,
        budget,
        reject=lambda J: ground_eval_boolean(q, J, ()),
        reject_unsafe_rels=unsafe,
        reject_rels=qrels,
    )
    return CertainResult(
        kind="boolean",
        boolean=counterexample is None,
        disclaimer="guided bounded search",
    )
