"""Membership of a ground instance in the interpretation of (T, condition).

A ground J belongs to the interpretation iff there is one valuation of
the closed nulls and a nonempty family of valuations of the open nulls
whose combined images union to exactly J while the pair satisfies the
global condition.  The search enumerates closed valuations into dom(J),
collects the open-copy images contained in J, and probes copy subsets.
"""

from __future__ import annotations

from itertools import combinations, product
from typing import Iterable

from .conditions import GlobalCondition, family_satisfies
from .terms import BudgetExceededError, Fact, Term, consts_of, dom, term_key

DEFAULT_SUBSET_PROBES = 1 << 16


def check_rep_membership(
    table: Iterable[Fact],
    condition: GlobalCondition,
    instance: Iterable[Fact],
    subset_probes: int = DEFAULT_SUBSET_PROBES,
) -> bool:
    T = frozenset(table)
    J = frozenset(instance)
    if not T:
        return not J and family_satisfies({}, [{}], condition)

    closed = sorted({t for t in dom(T) if t.kind == "cnull"}, key=term_key)
    opens = sorted({t for t in dom(T) if t.kind == "onull"}, key=term_key)
    values = sorted(consts_of(J), key=term_key)
    if (closed or opens) and not values:
        return False

    probes = 0
    for closed_choice in product(values, repeat=len(closed)):
        v = dict(zip(closed, closed_choice))
        # copy images: one candidate per open-null assignment, kept when inside J
        copies: list[tuple[dict[Term, Term], frozenset[Fact]]] = []
        for open_choice in product(values, repeat=len(opens)):
            u = dict(zip(opens, open_choice))
            image = set()
            ok = True
            for f in T:
                args = []
                for a in f.args:
                    if a.is_const():
                        args.append(a)
                    elif a.kind == "cnull":
                        args.append(v[a])
                    else:
                        args.append(u[a])
                g = Fact(f.rel, tuple(args))
                if g not in J:
                    ok = False
                    break
                image.add(g)
            if ok:
                copies.append((u, frozenset(image)))
        if not copies:
            continue
        if frozenset().union(*(img for _, img in copies)) != J:
            continue  # even all valid copies together cannot cover J
        for size in range(1, len(copies) + 1):
            for combo in combinations(copies, size):
                probes += 1
                if probes > subset_probes:
                    raise BudgetExceededError(
                        f"rep-membership subset search exceeded {subset_probes} probes"
                    )
                covered = frozenset().union(*(img for _, img in combo))
                if covered != J:
                    continue
                if family_satisfies(v, [u for u, _ in combo], condition):
                    return True
    return False
