"""File-driven command line front end.

Exit codes: 0 success / certain true; 1 false or no solution; 2 usage
or parse error; 3 chase failure; 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .chase import annotated_chase, owa_chase, ChaseFailure
from .conditions import GlobalCondition
from .dsl import (
    parse_condition,
    parse_facts,
    parse_labels,
    parse_mapping,
    parse_query,
    serialize_condition,
    serialize_facts,
    serialize_labels,
)
from .generators import (
    GeneratedCase,
    gen_clique,
    gen_threecol_check,
    gen_threecol_eval,
    gen_threecol_existence,
    parse_graph,
)
from .mapping import (
    annotation_cardinality,
    annotation_density,
    affected_positions,
    check_safety,
    derive_views,
    is_gav_reducible,
    translate_tgds,
)
from .oracle import (
    DomainBudget,
    certain_oracle,
    check_abd_solution,
    check_inference_solution,
    enumerate_abd_solutions,
    enumerate_inference_solutions,
    enumerate_owa_solutions,
    exists_solution_general,
    find_abd_labeling,
    gcwa_star_solutions,
)
from .query import certain_answers
from .terms import BudgetExceededError, EngineError, ParseError, sorted_facts

EXIT_TRUE = 0
EXIT_FALSE = 1
EXIT_USAGE = 2
EXIT_CHASE_FAILED = 3
EXIT_BUDGET = 4


def _read(path: str) -> str:
    return Path(path).read_text()


def _budget(args) -> DomainBudget:
    return DomainBudget(
        extra_constants=args.budget_extra_constants,
        max_instance_size=args.budget_size,
    )


def _load_program(args):
    prog = parse_mapping(_read(args.mapping))
    return prog


def cmd_translate(args) -> int:
    prog = _load_program(args)
    out = translate_tgds(prog)
    text = out.render()
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_TRUE


def cmd_metrics(args) -> int:
    prog = _load_program(args)
    if not prog.is_annotated():
        views_gav = is_gav_reducible(prog.tgds)
        print(f"program: unidirectional ({len(prog.tgds)} tgds, {len(prog.egds)} egds)")
        print(f"gav-reducible: {str(views_gav).lower()}")
        return EXIT_TRUE
    dens, dmax = annotation_density(prog)
    card, cmax = annotation_cardinality(prog)
    aff = affected_positions(prog)
    report = check_safety(prog)
    views = derive_views(prog)
    gav = is_gav_reducible(views.forward_tgds)
    for rel in sorted(prog.target_schema):
        print(f"density {rel}: {dens.get(rel, 0)}")
    print(f"density overall: {dmax}")
    for rel in sorted(prog.target_schema):
        print(f"cardinality {rel}: {card.get(rel, 0)}")
    print(f"cardinality overall: {cmax}")
    rendered = ", ".join(f"({r}@{a},{i})" for r, a, i in sorted(aff))
    print(f"affected: {{{rendered}}}")
    print(f"safe: {str(report.safe).lower()}")
    for d, why in report.offending:
        print(f"unsafe: {d.render()} ({why})", file=sys.stderr)
    print(f"gav-reducible: {str(gav).lower()}")
    return EXIT_TRUE


def cmd_chase(args) -> int:
    prog = _load_program(args)
    instance = parse_facts(_read(args.instance))
    if prog.is_annotated():
        outcome = annotated_chase(instance, prog)
        if not outcome.ok:
            print(f"chase failed in {outcome.phase} phase: {outcome.witness}", file=sys.stderr)
            return EXIT_CHASE_FAILED
        if outcome.heuristic:
            print("warning: annotation density exceeds 1; representative is heuristic", file=sys.stderr)
        outdir = Path(args.output or ".")
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "table.facts").write_text(serialize_facts(outcome.table))
        (outdir / "table.labels").write_text(serialize_labels(outcome.labels))
        (outdir / "table.cond").write_text(serialize_condition(outcome.condition))
        print(f"wrote table.facts, table.labels, table.cond to {outdir}")
        return EXIT_TRUE
    try:
        result = owa_chase(instance, prog.tgds, prog.egds)
    except ChaseFailure as e:
        print(f"chase failed: {e}", file=sys.stderr)
        return EXIT_CHASE_FAILED
    outdir = Path(args.output or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "table.facts").write_text(serialize_facts(result))
    print(f"wrote table.facts to {outdir}")
    return EXIT_TRUE


def cmd_check_solution(args) -> int:
    prog = _load_program(args)
    instance = parse_facts(_read(args.instance))
    candidate = parse_facts(_read(args.candidate))
    budget = _budget(args)
    if args.semantics == "abd":
        p = prog if prog.is_annotated() else translate_tgds(prog)
        labeling = find_abd_labeling(instance, p, candidate, budget)
        if labeling is not None:
            print("true")
            if args.verbose:
                sys.stdout.write(serialize_labels(labeling))
            return EXIT_TRUE
        print("false")
        return EXIT_FALSE
    if args.semantics == "inf":
        ok = check_inference_solution(instance, prog, candidate, budget)
        print("true" if ok else "false")
        return EXIT_TRUE if ok else EXIT_FALSE
    raise EngineError(f"check-solution does not support --semantics {args.semantics}")


def cmd_exists_solution(args) -> int:
    prog = _load_program(args)
    if not prog.is_annotated():
        prog = translate_tgds(prog)
    instance = parse_facts(_read(args.instance))
    verdict, authoritative = exists_solution_general(instance, prog, _budget(args))
    suffix = "" if authoritative else " (bounded-domain verdict)"
    print(("true" if verdict else "false") + suffix)
    return EXIT_TRUE if verdict else EXIT_FALSE


def cmd_eval(args) -> int:
    prog = _load_program(args)
    if not prog.is_annotated():
        prog = translate_tgds(prog)
    instance = parse_facts(_read(args.instance))
    q = parse_query(_read(args.query))
    result = certain_answers(instance, prog, q, budget=_budget(args))
    if result.disclaimer:
        print(f"note: {result.disclaimer}", file=sys.stderr)
    if result.kind == "no_solutions":
        print("no-solutions", file=sys.stderr)
        return EXIT_CHASE_FAILED
    print(result.render())
    if result.kind == "boolean":
        return EXIT_TRUE if result.boolean else EXIT_FALSE
    return EXIT_TRUE


def cmd_oracle(args) -> int:
    prog = _load_program(args)
    instance = parse_facts(_read(args.instance))
    budget = _budget(args)
    if args.oracle_command == "enumerate":
        if args.semantics == "abd":
            p = prog if prog.is_annotated() else translate_tgds(prog)
            sols = enumerate_abd_solutions(instance, p, budget)
            witness = (
                (lambda J: serialize_labels(find_abd_labeling(instance, p, J, budget)))
                if args.verbose
                else None
            )
        elif args.semantics == "inf":
            sols = enumerate_inference_solutions(instance, prog, budget)
            witness = None
        elif args.semantics == "owa":
            sols = enumerate_owa_solutions(instance, prog, budget)
            witness = None
        else:
            sols = gcwa_star_solutions(instance, prog, budget)
            witness = None
        for J in sols:
            record = {
                "solution": [f.render() for f in sorted_facts(J)],
                "semantics": args.semantics,
            }
            if witness is not None:
                record["labeling"] = witness(J).splitlines()
            print(json.dumps(record, sort_keys=True))
        return EXIT_TRUE
    if args.oracle_command == "certain":
        q = parse_query(_read(args.query))
        result = certain_oracle(args.semantics, instance, prog, q, budget)
        print(
            json.dumps(
                {
                    "semantics": args.semantics,
                    "kind": result.kind,
                    "result": result.render(),
                },
                sort_keys=True,
            )
        )
        if result.kind == "no_solutions":
            return EXIT_CHASE_FAILED
        if result.kind == "boolean":
            return EXIT_TRUE if result.boolean else EXIT_FALSE
        return EXIT_TRUE
    # compare: run two semantics side by side
    q = parse_query(_read(args.query))
    left = certain_oracle(args.semantics, instance, prog, q, budget)
    right = certain_oracle(args.compare_with, instance, prog, q, budget)
    agree = left.render() == right.render()
    print(
        json.dumps(
            {
                args.semantics: left.render(),
                args.compare_with: right.render(),
                "agree": agree,
            },
            sort_keys=True,
        )
    )
    return EXIT_TRUE if agree else EXIT_FALSE


def cmd_gen(args) -> int:
    graph = parse_graph(_read(args.graph))
    if args.gen_command == "three-col-exist":
        case = gen_threecol_existence(graph)
    elif args.gen_command == "three-col-check":
        case = gen_threecol_check(graph)
    elif args.gen_command == "three-col-eval":
        case = gen_threecol_eval(graph)
    else:
        case = gen_clique(graph, args.k)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    artifacts = {"mapping": "case.map", "facts": "case.facts"}
    (outdir / "case.map").write_text(case.mapping)
    (outdir / "case.facts").write_text(case.facts)
    if case.candidate is not None:
        (outdir / "case.candidate").write_text(case.candidate)
        artifacts["candidate"] = "case.candidate"
    if case.query is not None:
        (outdir / "case.query").write_text(case.query)
        artifacts["query"] = "case.query"
    manifest = dict(case.manifest)
    manifest["note"] = case.note
    manifest["artifacts"] = artifacts
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    print(f"wrote {', '.join(sorted(artifacts.values()))} and manifest.json to {outdir}")
    print(f"note: {case.note}")
    return EXIT_TRUE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abdex")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, mapping=True, instance=True):
        if mapping:
            p.add_argument("-m", "--mapping", required=True)
        if instance:
            p.add_argument("-i", "--instance", required=True)
        p.add_argument("--budget-extra-constants", type=int, default=2)
        p.add_argument("--budget-size", type=int, default=4)
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("translate", help="rewrite tgds+egds as annotated dependencies")
    p.add_argument("-m", "--mapping", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("metrics", help="density, cardinality, safety and GAV report")
    p.add_argument("-m", "--mapping", required=True)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("chase", help="materialize the universal representative")
    common(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_chase)

    p = sub.add_parser("check-solution", help="is the candidate a solution?")
    common(p)
    p.add_argument("-j", "--candidate", required=True)
    p.add_argument("--semantics", choices=["abd", "inf"], default="abd")
    p.set_defaults(func=cmd_check_solution)

    p = sub.add_parser("exists-solution", help="does any solution exist?")
    common(p)
    p.set_defaults(func=cmd_exists_solution)

    p = sub.add_parser("eval", help="certain answers for a query")
    common(p)
    p.add_argument("-q", "--query", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("oracle", help="bounded-domain reference semantics")
    osub = p.add_subparsers(dest="oracle_command", required=True)
    for name in ("enumerate", "certain", "compare"):
        op = osub.add_parser(name)
        common(op)
        op.add_argument("--semantics", choices=["abd", "inf", "owa", "gcwa"], default="abd")
        if name in ("certain", "compare"):
            op.add_argument("-q", "--query", required=True)
        if name == "compare":
            op.add_argument("--compare-with", choices=["abd", "inf", "owa", "gcwa"], required=True)
        op.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen", help="hardness-instance generators")
    gsub = p.add_subparsers(dest="gen_command", required=True)
    for name in ("three-col-exist", "three-col-check", "three-col-eval", "clique"):
        gp = gsub.add_parser(name)
        gp.add_argument("-g", "--graph", required=True)
        gp.add_argument("-o", "--output", required=True)
        if name == "clique":
            gp.add_argument("-k", type=int, required=True)
        gp.set_defaults(func=cmd_gen)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceededError as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except ChaseFailure as e:
        print(f"chase failed: {e}", file=sys.stderr)
        return EXIT_CHASE_FAILED
    except EngineError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
