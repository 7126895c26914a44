"""Batch front end: load a scenario, run one construction or reduction,
emit a line-delimited trace, and re-verify every recorded obligation.

Exit codes: 0 ok, 1 obligation or determinism failure, 2 validation failure,
3 search exhaustion, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .core import (
    BudgetError,
    CantorError,
    Dyadic,
    ScenarioError,
    SearchExhaustedError,
)
from .constructions import (
    ConstructionTrace,
    build_lemma31,
    build_lemma63,
    build_thm33,
    build_thm41,
    build_thm410,
    jline,
)
from .deficiency import rd_at_stage
from .enumeration import (
    Budgets,
    MLTest,
    Scenario,
    descending_chain,
    even_shift,
    index_shift,
    load_scenario,
    replace_component,
    shift_union,
    stratify,
    universal_sum,
    validate_scenario,
)
from .realizers import (
    InnerReduction,
    cn_times_mlr_psi,
    cn_times_mlr_to_lay,
    compose_star,
    compose_star_psi,
    delta02_to_lay_phi,
    delta02_to_lay_psi,
    identity_reduction,
    lay_to_cn,
    lay_to_cn_psi,
    lay_to_lay,
    lay_to_lay_contract,
    parallel_merge,
    product_merge,
    rd_from_lay_phi,
    rd_from_lay_psi,
    rd_from_lay_run,
    semidecidable_to_rd_star,
    verify_pads,
)

EXIT_OK = 0
EXIT_OBLIGATION = 1
EXIT_VALIDATION = 2
EXIT_SEARCH = 3
EXIT_IO = 4

TRACE_FORMAT = 1


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    anchor: str
    kind: str
    description: str


CATALOG: tuple[CatalogEntry, ...] = (
    CatalogEntry("lemma31", "3.1", "construction",
                 "marker family no single open cover contains"),
    CatalogEntry("thm32", "3.2", "construction",
                 "component surgery: swap the carved cover into index 0"),
    CatalogEntry("thm33", "3.3", "construction",
                 "divergence witnesses against partial-function tables"),
    CatalogEntry("thm41", "4.1", "construction",
                 "diagonal in/out set defeating every advice table"),
    CatalogEntry("thm410", "4.10", "construction",
                 "halting-sensitive rebuild over the unary-prefixed test"),
    CatalogEntry("lemma63", "6.3", "construction",
                 "right-shift cone enumeration along a shrinking tree"),
    CatalogEntry("combinators", "1.1/5.2", "construction",
                 "derived tests (sum, chain, shifts, stratification) with budget sweep"),
    CatalogEntry("lay_to_lay", "5.2", "reduction",
                 "deficiency-bound transfer between tests"),
    CatalogEntry("rd_from_lay", "5.4", "reduction",
                 "exact deficiency recovery from any upper bound"),
    CatalogEntry("product_merge", "5.6", "reduction",
                 "pairwise merge dominating both deficiencies"),
    CatalogEntry("parallel_merge", "5.7", "reduction",
                 "dovetailed merge of a uniformly bounded family"),
    CatalogEntry("compose_star", "5.8", "reduction",
                 "two-call composition through a pair of exact bounds"),
    CatalogEntry("lay_to_cn", "5.9", "reduction",
                 "prime-power number-choice encoding of the deficiency"),
    CatalogEntry("cn_times_mlr", "5.10", "reduction",
                 "tagged number choice decoded through a deficiency bound"),
    CatalogEntry("delta02_to_lay", "5.11", "reduction",
                 "two-sided tree membership decided from a bound"),
    CatalogEntry("semidecidable_star", "6.1", "reduction",
                 "layerwise semi-decidable membership via two exact bounds"),
)

SELECTORS = {c.name for c in CATALOG}


# ---------------------------------------------------------------------------
# selector execution
# ---------------------------------------------------------------------------

def _budget_sweep(trace: ConstructionTrace, tests: dict[str, MLTest],
                  budgets: Budgets, stride: int) -> int:
    """Exact measure-budget check at every (index, stage) on the stride grid."""
    checks = 0
    for name, t in sorted(tests.items()):
        ok = True
        for i in range(t.max_index + 1):
            comp = t.component(i)
            bound = Dyadic.exp2(-i)
            for s in range(0, budgets.max_stage + 1, stride):
                checks += 1
                if comp.measure_at(s) > bound:
                    ok = False
        trace.witness(f"budget.{name}", ok, components=t.max_index + 1)
    trace.add(-1, "budget_sweep", checks=checks, stride=stride)
    return checks


def _derived_tests(sc: Scenario) -> dict[str, MLTest]:
    u = universal_sum(sc)
    chain = descending_chain(u)
    derived = {
        "universal": u,
        "chain": chain,
        "even_shift": even_shift(chain),
        "shift_union": shift_union(u),
        "stratify": stratify(u, sc.budgets),
    }
    return derived


def execute(sc: Scenario, selector: str, *, grace: int | None = None,
            sigma_stages: int | None = None, stride: int = 1) -> ConstructionTrace:
    """Run one selector over a validated scenario, returning its full trace."""
    budgets = sc.budgets
    big_s = budgets.max_stage
    u = universal_sum(sc)

    if selector == "lemma31":
        return build_lemma31(u, budgets, sigma_stages).trace

    if selector == "thm32":
        res = build_lemma31(u, budgets, sigma_stages)
        trace = res.trace
        trace.name = "thm32"
        surgery = replace_component(u, 0, res.w0)
        trace.outputs["surgered"] = surgery
        final = max(big_s, surgery.final_stage())
        comp0 = surgery.stage_view(0, final)
        for i in range(res.v.max_index + 1):
            trace.witness(f"thm32.non_containment.{i}",
                          not res.v.stage_view(i, final).is_subset_of(comp0))
        return trace

    if selector == "thm33":
        return build_thm33(u, sc.partial_functions, budgets).trace

    if selector == "thm41":
        nested = descending_chain(u)
        return build_thm41(nested, sc.functionals, budgets, sc.inert_functionals).trace

    if selector == "thm410":
        v = index_shift(u, 2)
        streams = [sc.stream(n) for n in sc.random_streams]
        return build_thm410(v, sc.halting, budgets, streams).trace

    if selector == "lemma63":
        tree = sc.tree("positive")
        return build_lemma63(tree, budgets).trace

    if selector == "combinators":
        trace = ConstructionTrace(name="combinators")
        tests = _derived_tests(sc)
        res31 = build_lemma31(u, budgets, sigma_stages)
        tests["surgered"] = replace_component(u, 0, res31.w0)
        res33 = build_thm33(u, sc.partial_functions, budgets)
        tests["thm33_w"], tests["thm33_v"] = res33.w, res33.v
        res41 = build_thm41(tests["chain"], sc.functionals, budgets,
                            sc.inert_functionals)
        tests["thm41_w"] = res41.w
        res410 = build_thm410(index_shift(u, 2), sc.halting, budgets)
        tests["thm410_u"] = res410.u
        tests["lemma31_v"] = res31.v
        _budget_sweep(trace, tests, budgets, stride)
        trace.witness("combinators.chain_nested",
                      tests["chain"].check_nested_stagewise())
        trace.outputs = {name: t for name, t in sorted(tests.items())}
        return trace

    # reductions run over every declared random stream
    trace = ConstructionTrace(name=selector)
    runs: dict[str, dict] = {}
    trace.outputs["runs"] = runs

    def fold(run_trace: ConstructionTrace, tag: str,
             record: dict | None = None) -> None:
        trace.add(-1, "run_stream", stream=tag)
        trace.events.extend(run_trace.events)
        for w in run_trace.witnesses:
            trace.witnesses.append({"claim": f"{w['claim']}.{tag}",
                                    "status": w["status"], "data": w["data"]})
        if record is not None:
            runs[tag] = record

    def record_of(pre_output, oracle_answer, post_output, verdict) -> dict:
        return {"pre_output": pre_output, "oracle_answer": oracle_answer,
                "post_output": post_output,
                "verdict": "pass" if verdict else "fail"}

    if selector == "lay_to_lay":
        chain = descending_chain(u)
        for name in sc.random_streams:
            x = sc.stream(name)
            run = lay_to_lay(chain, u, x, budgets, grace)
            sound = lay_to_lay_contract(run, chain, u, x, budgets)
            run.trace.witness("lay_to_lay.sound", sound)
            run.trace.witness("lay_to_lay.pads_valid", verify_pads(run, u, big_s))
            bound = rd_at_stage(run.output, u, big_s).value
            fold(run.trace, name,
                 record_of(run.committed, bound, bound, sound))
        return trace

    if selector == "rd_from_lay":
        for name in sc.random_streams:
            x = sc.stream(name)
            run = rd_from_lay_run(u, u, x, budgets, grace)
            fold(run.trace, name,
                 record_of(run.committed, run.data["advice"],
                           run.data["decoded"],
                           run.data["decoded"] == run.data["expected"]))
        return trace

    if selector == "product_merge":
        chain = descending_chain(u)
        names = list(sc.random_streams)
        pairs = [(names[i], names[(i + 1) % len(names)]) for i in range(len(names))]
        for nx, ny in pairs:
            x, y = sc.stream(nx), sc.stream(ny)
            run = product_merge(chain, x, y, budgets, grace)
            got = rd_at_stage(run.output, chain, big_s).value
            want = max(rd_at_stage(x, chain, big_s).value,
                       rd_at_stage(y, chain, big_s).value)
            run.trace.witness("product_merge.dominates", got >= want,
                              got=got, want=want)
            run.trace.witness("product_merge.pads_valid",
                              verify_pads(run, chain, big_s))
            fold(run.trace, f"{nx}+{ny}",
                 record_of(run.committed, got, [got, got], got >= want))
        return trace

    if selector == "parallel_merge":
        family = sc.parallel_family or sc.random_streams[:3]
        xs = [sc.stream(n) for n in family]
        run = parallel_merge(u, xs, budgets, grace)
        got = rd_at_stage(run.output, u, big_s).value
        want = max(rd_at_stage(x, u, big_s).value for x in xs)
        run.trace.witness("parallel_merge.dominates", got >= want,
                          got=got, want=want)
        run.trace.witness("parallel_merge.pads_valid", verify_pads(run, u, big_s))
        fold(run.trace, "+".join(family),
             record_of(run.committed, got, got, got >= want))
        return trace

    if selector == "compose_star":
        chain = descending_chain(u)
        inner_f = InnerReduction(
            phi=lambda s: rd_from_lay_phi(u, u, s, budgets, grace).output,
            psi=lambda s, m: rd_from_lay_psi(u, s, m, budgets))
        inner_g = identity_reduction()
        for name in sc.random_streams:
            x = sc.stream(name)
            run = compose_star(chain, inner_f, inner_g, x, budgets, grace)
            n = rd_at_stage(run.data["y"], chain, big_s).value
            m = rd_at_stage(run.output, chain, big_s).value
            decoded = compose_star_psi(inner_f, inner_g, x, n, m)
            expected = rd_at_stage(x, u, big_s).value
            run.trace.witness("compose_star.end_to_end", decoded == expected,
                              decoded=decoded, expected=expected)
            run.trace.witness(
                "compose_star.dominates",
                m >= rd_at_stage(run.data["z"], chain, big_s).value)
            fold(run.trace, name,
                 record_of(run.committed, [n, m], decoded, decoded == expected))
        return trace

    if selector == "lay_to_cn":
        for name in sc.random_streams:
            x = sc.stream(name)
            run = lay_to_cn(u, x, budgets)
            expected = rd_at_stage(x, u, big_s).value
            decoded = (lay_to_cn_psi(run.survivor, u)
                       if run.survivor is not None and run.survivor >= 2 else None)
            run.trace.witness("lay_to_cn.round_trip", decoded == expected,
                              survivor=run.survivor, decoded=decoded,
                              expected=expected)
            fold(run.trace, name,
                 record_of(run.instance_values()[:40], run.survivor, decoded,
                           decoded == expected))
        return trace

    if selector == "cn_times_mlr":
        instances = [("omega", []), ("skip5", [1, 3, 2, 5, 4])]
        for name in sc.random_streams[:2]:
            x = sc.stream(name)
            for tag, values in instances:
                run = cn_times_mlr_to_lay(u, values, x, budgets, grace)
                report = rd_at_stage(run.output, u, big_s)
                advice = max(report.value, 0)
                decoded, _ = cn_times_mlr_psi(values, x, max(advice, big_s))
                want, _ = cn_times_mlr_psi(values, x, big_s)
                run.trace.witness("cn_times_mlr.decodes", decoded == want,
                                  decoded=decoded, want=want)
                fold(run.trace, f"{name}.{tag}",
                     record_of(run.committed, advice, decoded, decoded == want))
        return trace

    if selector == "delta02_to_lay":
        chain = descending_chain(u)
        t_trees = [sc.tree(n) for n in sorted(sc.trees) if n.startswith("inA")]
        s_trees = [sc.tree(n) for n in sorted(sc.trees) if n.startswith("outA")]
        if not t_trees or len(t_trees) != len(s_trees):
            raise ScenarioError("delta02 needs matching inA*/outA* tree families")
        for name in sc.random_streams:
            x = sc.stream(name)
            run = delta02_to_lay_phi(chain, t_trees, s_trees, x, budgets, grace)
            advice = rd_at_stage(run.output, chain, big_s).value
            got = delta02_to_lay_psi(t_trees, s_trees, x, advice,
                                     budgets.max_depth, big_s)
            want = 1 if any(
                tr.carries(x, big_s) for tr in t_trees) else 0
            run.trace.witness("delta02.membership", got == want,
                              advice=advice, got=got, want=want)
            fold(run.trace, name,
                 record_of(run.committed, advice, got, got == want))
        return trace

    if selector == "semidecidable_star":
        if "layerA" not in sc.opens:
            raise ScenarioError("semidecidable needs the 'layerA' open family")
        for name in sc.random_streams:
            x = sc.stream(name)
            run = semidecidable_to_rd_star(u, sc.opens["layerA"], u, x,
                                           budgets, grace)
            fold(run.trace, name,
                 record_of(run.f_run.committed, [run.g_advice, run.f_advice],
                           run.verdict, run.verdict == run.expected))
        return trace

    raise ScenarioError(f"unknown selector {selector!r}")


# ---------------------------------------------------------------------------
# trace files
# ---------------------------------------------------------------------------

def trace_lines(sc: Scenario, selector: str, trace: ConstructionTrace, *,
                grace: int | None, sigma_stages: int | None,
                stride: int) -> list[str]:
    header = {"stage": -1, "action": "header", "payload": {
        "format": TRACE_FORMAT,
        "selector": selector,
        "budgets": sc.budgets.to_json(),
        "grace": grace,
        "sigma_stages": sigma_stages,
        "stride": stride,
        "scenario": sc.raw,
    }}
    return [jline(header)] + trace.lines()


def write_trace(path: str | Path, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_header(path: str | Path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
    rec = json.loads(first)
    if rec.get("action") != "header" or "payload" not in rec:
        raise ScenarioError("trace file has no header record")
    return rec["payload"]


def regenerate(header: dict) -> tuple[Scenario, ConstructionTrace, list[str]]:
    sc = load_scenario(header["scenario"])
    sc = _apply_budget_overrides(sc, header["budgets"])
    validate_scenario(sc)
    trace = execute(sc, header["selector"], grace=header.get("grace"),
                    sigma_stages=header.get("sigma_stages"),
                    stride=header.get("stride", 1))
    lines = trace_lines(sc, header["selector"], trace,
                        grace=header.get("grace"),
                        sigma_stages=header.get("sigma_stages"),
                        stride=header.get("stride", 1))
    return sc, trace, lines


def _apply_budget_overrides(sc: Scenario, budgets_json: dict) -> Scenario:
    new = Budgets.from_json(budgets_json)
    if new == sc.budgets:
        return sc
    raw = dict(sc.raw)
    raw["budgets"] = budgets_json
    return load_scenario(raw)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_run(args: argparse.Namespace) -> int:
    try:
        sc = load_scenario(args.scenario)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        overrides = sc.budgets.to_json()
        if args.stages is not None:
            overrides["S"] = args.stages
        if args.depth is not None:
            overrides["K"] = args.depth
        if args.max_index is not None:
            overrides["I"] = args.max_index
        sc = _apply_budget_overrides(sc, overrides)
        validate_scenario(sc)
        if args.select not in SELECTORS:
            raise ScenarioError(f"unknown selector {args.select!r}; "
                                "see list-constructions")
        trace = execute(sc, args.select, grace=args.grace,
                        sigma_stages=args.sigma_stages, stride=args.stride)
        lines = trace_lines(sc, args.select, trace, grace=args.grace,
                            sigma_stages=args.sigma_stages, stride=args.stride)
    except SearchExhaustedError as exc:
        print(f"error: search exhausted: {exc}", file=sys.stderr)
        return EXIT_SEARCH
    except (ScenarioError, BudgetError, ValueError) as exc:
        print(f"error: validation: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        if args.trace:
            write_trace(args.trace, lines)
        else:
            print("\n".join(lines))
    except OSError as exc:
        print(f"error: cannot write trace: {exc}", file=sys.stderr)
        return EXIT_IO

    failed = trace.failed_claims()
    for claim in failed:
        print(f"FAIL {claim}", file=sys.stderr)
    if failed:
        return EXIT_OBLIGATION

    if args.verify and args.trace:
        code = _verify_file(args.trace, quiet=False)
        if code != EXIT_OK:
            return code
    print(f"ok: {args.select}: {len(trace.events)} events, "
          f"{len(trace.witnesses)} obligations passed", file=sys.stderr)
    return EXIT_OK


def _verify_file(path: str | Path, *, quiet: bool) -> int:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            original = fh.read()
        header = read_header(path)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read trace: {exc}", file=sys.stderr)
        return EXIT_IO
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        sc, trace, lines = regenerate(header)
    except SearchExhaustedError as exc:
        print(f"error: search exhausted during replay: {exc}", file=sys.stderr)
        return EXIT_SEARCH
    except (ScenarioError, BudgetError, ValueError) as exc:
        print(f"error: replay validation: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    regenerated = "\n".join(lines) + "\n"
    deterministic = regenerated == original
    failed = trace.failed_claims()

    stride = header.get("stride", 1)
    budget_trace = ConstructionTrace(name="verify.budgets")
    checks = _budget_sweep(budget_trace, _derived_tests(sc), sc.budgets, stride)
    budget_failed = budget_trace.failed_claims()

    report = {
        "selector": header["selector"],
        "deterministic": deterministic,
        "obligations": len(trace.witnesses),
        "failed": failed,
        "budget_checks": checks,
        "budget_failed": budget_failed,
        "stride": stride,
    }
    print(jline(report))
    if not quiet:
        for w in trace.witnesses:
            print(f"{w['status'].upper():4} {w['claim']}")
    if not deterministic:
        print("FAIL determinism: regenerated trace differs", file=sys.stderr)
        return EXIT_OBLIGATION
    if failed or budget_failed:
        return EXIT_OBLIGATION
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    return _verify_file(args.trace, quiet=args.quiet)


def cmd_list(_args: argparse.Namespace) -> int:
    width = max(len(c.name) for c in CATALOG)
    for c in CATALOG:
        print(f"{c.name:<{width}}  [{c.anchor}]  ({c.kind}) {c.description}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cantorlab",
        description="stage-scheduled tests, deficiency, and reduction runs "
                    "over finite scenarios")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one construction or reduction")
    run.add_argument("--scenario", required=True, help="scenario JSON path")
    run.add_argument("--select", required=True, help="selector name")
    run.add_argument("--stages", type=int, help="override stage budget S")
    run.add_argument("--depth", type=int, help="override depth budget K")
    run.add_argument("--max-index", type=int, help="override index budget I")
    run.add_argument("--trace", help="trace output path (default: stdout)")
    run.add_argument("--verify", action="store_true",
                     help="re-run and byte-compare the written trace")
    run.add_argument("--stride", type=int, default=1,
                     help="stage stride for budget sweeps")
    run.add_argument("--grace", type=int, default=None,
                     help="emission grace period (default: 3S/4)")
    run.add_argument("--sigma-stages", type=int, default=None,
                     help="marker emission budget for lemma31/thm32")
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="replay a trace and check obligations")
    ver.add_argument("--trace", required=True, help="trace file to verify")
    ver.add_argument("--quiet", action="store_true", help="report line only")
    ver.set_defaults(func=cmd_verify)

    lst = sub.add_parser("list-constructions",
                         help="print the selector catalog")
    lst.set_defaults(func=cmd_list)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CantorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
