"""Data exchange with annotated bidirectional dependencies.

Materializes universal representatives via the three-step annotated
chase and answers certain-answer queries against them, with bounded
brute-force implementations of the competing semantics for validation.
"""

from .chase import ChaseFailure, ChaseOutcome, annotated_chase, owa_chase
from .conditions import GlobalCondition, TRIVIAL, family_satisfies, sat_check
from .dsl import (
    parse_condition,
    parse_facts,
    parse_labels,
    parse_mapping,
    parse_query,
    serialize_condition,
    serialize_facts,
    serialize_labels,
    serialize_mapping,
)
from .homs import (
    apply_valuation,
    find_homomorphisms,
    gaifman_partition,
    isomorphic,
)
from .mapping import (
    Abd,
    Aegd,
    Atom,
    Egd,
    MappingProgram,
    Tgd,
    affected_positions,
    annotation_cardinality,
    annotation_density,
    check_safety,
    derive_views,
    is_gav_reducible,
    make_program,
    translate_tgds,
)
from .oracle import (
    DomainBudget,
    certain_oracle,
    check_abd_solution,
    check_inference_solution,
    enumerate_abd_solutions,
    enumerate_inference_solutions,
    exists_solution_general,
    gcwa_star_solutions,
)
from .query import (
    CertainResult,
    Disjunct,
    Query,
    certain_answers,
    classify,
    eval_cq_neg1,
    eval_fo_full,
    eval_ucq_neq1,
    eval_universal,
    exists_eval,
    naive_eval,
)
from .repmember import check_rep_membership
from .terms import (
    BudgetExceededError,
    EngineError,
    Fact,
    ParseError,
    Term,
    cnull,
    const,
    fact,
    onull,
    var,
)
from .unification import Unifier, enumerate_unifiers, mgu_set

__all__ = [name for name in dir() if not name.startswith("_")]
