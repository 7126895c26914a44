"""Stage-by-stage set constructions with full traces and witness obligations.

Each builder replays one staged construction deterministically, records every
decision as an event, and afterwards evaluates its finite-stage obligations
(the claims a verifier re-checks).  Rebuilding from the same inputs must
reproduce the trace byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .core import (
    BudgetError,
    Clopen,
    Dyadic,
    ScenarioError,
    SearchExhaustedError,
    first_free_string,
    leftmost_uncovered,
    sigma_plus,
    str_order_key,
    unpair,
)
from .deficiency import CoTree, Stream, prepend, rd_at_stage
from .enumeration import Budgets, Enumeration, MLTest, stratify


def to_jsonable(obj):
    """Deterministic JSON projection for trace payloads."""
    if isinstance(obj, Clopen):
        return obj.to_list()
    if isinstance(obj, Dyadic):
        return str(obj)
    if isinstance(obj, Enumeration):
        return obj.to_json()
    if isinstance(obj, MLTest):
        return obj.to_json()
    if isinstance(obj, Stream):
        return {"name": obj.name, "pad": obj.pad, "period": obj.period}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, frozenset):
        return sorted(to_jsonable(v) for v in obj)
    return obj


def jline(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"))


@dataclass
class ConstructionTrace:
    """Ordered events, named outputs, and pass/fail witness obligations."""

    name: str
    events: list[dict] = field(default_factory=list)
    outputs: dict[str, object] = field(default_factory=dict)
    witnesses: list[dict] = field(default_factory=list)

    def add(self, stage: int, action: str, **payload) -> None:
        self.events.append({"stage": stage, "action": action,
                            "payload": to_jsonable(payload)})

    def sort_events(self) -> None:
        """Stable stage order; same-stage events keep their emission order."""
        self.events.sort(key=lambda e: e["stage"])

    def witness(self, claim: str, ok: bool, **data) -> None:
        self.witnesses.append({"claim": claim, "status": "pass" if ok else "fail",
                               "data": to_jsonable(data)})

    def failed_claims(self) -> list[str]:
        return [w["claim"] for w in self.witnesses if w["status"] != "pass"]

    def all_passed(self) -> bool:
        return not self.failed_claims()

    def lines(self) -> list[str]:
        out = [jline(e) for e in self.events]
        out.append(jline({"stage": -1, "action": "outputs",
                          "payload": {k: to_jsonable(v) for k, v in sorted(self.outputs.items())}}))
        out.extend(jline(w) for w in self.witnesses)
        return out


# ---------------------------------------------------------------------------
# non-containment cover: a single open set no small component fits inside
# ---------------------------------------------------------------------------

@dataclass
class Lemma31Result:
    w0: Enumeration
    v: MLTest
    sigmas: tuple[str, ...]
    trace: ConstructionTrace


def build_lemma31(u: MLTest, budgets: Budgets, sigma_stages: int | None = None) -> Lemma31Result:
    """Carve marker cylinders out of component 2 and re-admit only their
    intersection with a much smaller component.

    Stage s picks the first free string of length >= s+2 disjoint from the
    current component-2 view and all previous markers; the produced open set
    contains everything component 2 covers outside the markers, plus each
    marker's trace inside the component indexed by its own length + 1.  Each
    marker becomes one component of the emitted counterexample family.
    """
    if u.max_index < 2:
        raise BudgetError("construction needs component 2")
    big_s, depth = budgets.max_stage, budgets.max_depth
    n_sigma = min(sigma_stages if sigma_stages is not None else 16, big_s, depth - 2)
    trace = ConstructionTrace(name="lemma31")

    sigmas: list[str] = []
    for s in range(n_sigma):
        covered = u.stage_view(2, s).union(Clopen(sigmas))
        try:
            sigma = first_free_string(s + 2, depth, covered)
        except SearchExhaustedError:
            trace.add(s, "sigma_search_exhausted")
            break
        if len(sigma) + 1 > u.max_index:
            trace.add(s, "sigma_emission_stopped",
                      reason="marker length outgrew the index budget",
                      length=len(sigma))
            break
        sigmas.append(sigma)
        trace.add(s, "sigma", value=sigma, length=len(sigma))

    relevant: set[int] = {0}
    relevant.update(range(len(sigmas)))
    relevant.update(u.component(2).change_stages())
    for sig in sigmas:
        relevant.update(u.component(len(sig) + 1).change_stages())
    relevant = {s for s in relevant if s <= big_s}

    marker_cones = [Clopen([sig]) for sig in sigmas]
    w_sched: list[tuple[int, str]] = []
    prev: Clopen | None = None
    for s in sorted(relevant):
        emitted = [sig for t, sig in enumerate(sigmas) if t <= s]
        outside = u.stage_view(2, s).difference(Clopen(emitted), depth)
        view = outside
        for t, sig in enumerate(sigmas):
            if t <= s:
                view = view.union(marker_cones[t].intersect(
                    u.stage_view(len(sig) + 1, s)))
        if view != prev:
            w_sched.extend((s, c) for c in view.cylinders)
            trace.add(s, "w0_view", cylinders=view, measure=view.measure())
            prev = view
    w0 = Enumeration(w_sched)

    v = MLTest([Enumeration([(i, sig)]) for i, sig in enumerate(sigmas)])
    trace.outputs = {"w0": w0, "v": v, "sigmas": list(sigmas)}

    final = max(big_s, w0.last_stage())
    w_final = w0.stage_view(final)
    trace.witness("lemma31.sigma_length",
                  all(len(sig) >= s + 2 for s, sig in enumerate(sigmas)),
                  lengths=[len(s) for s in sigmas])
    trace.witness("lemma31.v_budget",
                  all(Dyadic.exp2(-len(sig)) <= Dyadic.exp2(-(i + 2))
                      for i, sig in enumerate(sigmas)))
    for i, sig in enumerate(sigmas):
        inside = marker_cones[i].intersect(w_final)
        bound = u.stage_view(len(sig) + 1, final).measure()
        ok = (inside.measure() <= bound and bound < Dyadic.exp2(-len(sig)))
        trace.witness(f"lemma31.meet_bound.{i}", ok,
                      inside=inside.measure(), bound=bound, marker=sig)
        # Containment into a growing set is monotone, so the final stage
        # certifies every earlier one.
        trace.witness(f"lemma31.non_containment.{i}",
                      not Clopen([sig]).is_subset_of(w_final), marker=sig)
    trace.sort_events()
    return Lemma31Result(w0=w0, v=v, sigmas=tuple(sigmas), trace=trace)


# ---------------------------------------------------------------------------
# divergence-witness test pair
# ---------------------------------------------------------------------------

@dataclass
class Thm33Result:
    w: MLTest
    v: MLTest
    trace: ConstructionTrace
    least_divergence: dict[int, int]


def least_divergence_point(table: Mapping[int, tuple[int, int]]) -> int:
    n = 0
    while n in table:
        n += 1
    return n


def build_thm33(u: MLTest, tables: Mapping[int, Mapping[int, tuple[int, int]]],
                budgets: Budgets) -> Thm33Result:
    """Track each table's convergence front; on every convergence, plant a
    fresh witness cylinder into the small components and jump the watched
    component index above the witness length.

    Runs stage-major over all tracked indices; enumerations land one stage
    after the action that produced them.
    """
    big_s, depth = budgets.max_stage, budgets.max_depth
    indices = sorted(tables.keys())
    if not indices:
        raise ScenarioError("no partial-function tables registered")
    top = max(indices)
    trace = ConstructionTrace(name="thm33")

    n_state = {e: 0 for e in indices}
    e_state = {e: e + 1 for e in indices}
    w_sched: dict[int, list[tuple[int, str]]] = {e: [] for e in indices}
    w_current: dict[int, Clopen] = {e: Clopen() for e in indices}
    w_prev_view: dict[int, Clopen] = {e: Clopen() for e in indices}
    v_sched: list[tuple[int, int, str]] = []
    v_current: dict[int, Clopen] = {}
    conv_stages: dict[int, list[int]] = {e: [] for e in indices}
    decisive: dict[int, str] = {}

    def w_add(e: int, stage: int, view: Clopen) -> None:
        if view != w_prev_view[e]:
            w_sched[e].extend((stage, c) for c in view.cylinders)
            w_current[e] = w_current[e].union(view)
            w_prev_view[e] = view

    for s in range(big_s):
        for e in indices:
            entry = tables[e].get(n_state[e])
            converged = entry is not None and entry[0] <= s
            if not converged:
                if e_state[e] <= u.max_index:
                    w_add(e, s + 1, u.stage_view(e_state[e], s))
                continue
            w_add(e, s + 1, u.stage_view(e + 1, s))
            n = n_state[e]

            def fits(sig: str, n=n) -> bool:
                cost = Dyadic.exp2(-len(sig))
                for j in range(n + 1):
                    vj = v_current.get(j, Clopen())
                    if not (vj.union(Clopen([sig])).measure() < Dyadic.exp2(-j)):
                        return False
                return True

            sigma = first_free_string(0, depth, w_current[e], pred=fits)
            for j in range(n + 1):
                v_sched.append((s + 1, j, sigma))
                v_current[j] = v_current.get(j, Clopen()).union(Clopen([sigma]))
            decisive[e] = sigma
            n_state[e] = n + 1
            new_e = max(e_state[e], len(sigma)) + 1
            if new_e > u.max_index:
                raise BudgetError(
                    f"watched component index {new_e} for table {e} exceeds "
                    f"budget I={u.max_index}")
            trace.add(s, "converge", e=e, arg=n, sigma=sigma,
                      e_index=new_e, v_targets=list(range(n + 1)))
            conv_stages[e].append(s)
            e_state[e] = new_e

    w = MLTest([Enumeration(w_sched.get(e, [])) for e in range(top + 1)])
    v_comps = [Enumeration([(s, c) for s, j, c in v_sched if j == i])
               for i in range(u.max_index + 1)]
    v = MLTest(v_comps)
    least_div = {e: least_divergence_point(tables[e]) for e in indices}
    trace.outputs = {"w": w, "v": v, "n_final": dict(sorted(n_state.items())),
                     "e_final": dict(sorted(e_state.items())),
                     "least_divergence": dict(sorted(least_div.items()))}

    final = big_s
    for e in indices:
        trace.witness(f"thm33.w_budget.{e}",
                      w.component(e).final_measure() <= Dyadic.exp2(-e))
        for s in conv_stages[e]:
            ok = u.stage_view(e + 1, s).is_subset_of(w.stage_view(e, s + 1))
            trace.witness(f"thm33.conv_lag.{e}.{s}", ok)
        n = least_div[e]
        if n_state[e] == n and n > 0:
            sig = decisive[e]
            w_final = w.stage_view(e, final)
            inside = Clopen([sig]).intersect(w_final)
            trace.witness(f"thm33.decisive_escape.{e}",
                          inside.measure() < Dyadic.exp2(-len(sig)),
                          sigma=sig, inside=inside.measure())
            for j in range(n):
                # Monotone target: the final stage certifies all stages.
                trace.witness(
                    f"thm33.witness_bound.{e}.{j}",
                    not v.stage_view(j, final).is_subset_of(w_final))
    trace.sort_events()
    return Thm33Result(w=w, v=v, trace=trace, least_divergence=least_div)


# ---------------------------------------------------------------------------
# diagonal set against advice tables
# ---------------------------------------------------------------------------

@dataclass
class Thm41Result:
    w: MLTest
    in_set: Clopen
    out_set: Clopen
    a_enum: Enumeration
    trace: ConstructionTrace
    triggers: dict[int, dict]


def _half_coverage_stage(table: Mapping[tuple[str, int], int], advice: int) -> int | None:
    """Least depth t whose exactly-length-t table strings of vote < 2 cover
    at least half the space, or None."""
    lengths = sorted({len(p) for (p, a) in table if a == advice})
    for t in lengths:
        level = [p for (p, a), v in table.items()
                 if a == advice and len(p) == t and v < 2]
        if Clopen(level).measure() >= Dyadic(1, 1):
            return t
    return None


def build_thm41(y: MLTest, functionals: Mapping[int, Mapping[tuple[str, int], int]],
                budgets: Budgets, inert: frozenset[int] = frozenset()) -> Thm41Result:
    """Diagonalize against every advice table: once a table votes on half the
    space at some depth, pick a small undecided cylinder and sort it into the
    set opposite to its vote, bumping the watched component above its length.

    ``y`` must be stagewise nested.  Tables that never reach half coverage
    must be declared inert.
    """
    if not y.nested:
        raise ScenarioError("diagonal construction needs a nested test")
    big_s, depth = budgets.max_stage, budgets.max_depth
    max_i = y.max_index - 4
    if max_i < 0:
        raise BudgetError("test too short: need component 4")
    for e in functionals:
        if e > max_i:
            raise ScenarioError(f"advice table {e} beyond component budget {max_i}")
    trace = ConstructionTrace(name="thm41")

    t_half = {e: _half_coverage_stage(tbl, e) for e, tbl in sorted(functionals.items())}
    for e, t in sorted(t_half.items()):
        if t is None and e not in inert:
            raise ScenarioError(
                f"advice table {e} never reaches half coverage and is not declared inert")
        if t is not None and e in inert:
            raise ScenarioError(f"advice table {e} declared inert but reaches half coverage")
        trace.add(-1, "half_coverage", e=e, t=t)

    e_state = {i: i + 4 for i in range(max_i + 1)}
    in_list: list[tuple[int, str]] = []
    out_list: list[tuple[int, str]] = []
    w_sched: dict[int, list[tuple[int, str]]] = {i: [] for i in range(max_i + 1)}
    w_current: dict[int, Clopen] = {i: Clopen() for i in range(max_i + 1)}
    triggered: dict[int, dict] = {}

    def y_view(e: int, t: int) -> Clopen:
        return y.stage_view(e, t) if e <= y.max_index else Clopen()

    for s in range(big_s + 1):
        i, t = unpair(s)
        if i > max_i:
            continue
        tbl = functionals.get(i)
        if tbl is not None and t_half.get(i) == t and i not in triggered:
            blocked = w_current[i].union(Clopen([c for _, c in in_list]))
            blocked = blocked.union(Clopen([c for _, c in out_list]))
            candidates = sorted((p for (p, a), v in tbl.items()
                                 if a == i and v < 2 and len(p) >= s + 5),
                                key=str_order_key)
            sigma = None
            for cand in candidates:
                if not blocked.meets(cand):
                    sigma = cand
                    break
            if sigma is None:
                raise SearchExhaustedError(
                    f"no undecided cylinder of measure <= 2^-{s + 5} for table {i} "
                    f"at stage {s} (budget misconfiguration)")
            vote = tbl[(sigma, i)]
            if vote == 0:
                in_list.append((s, sigma))
            else:
                out_list.append((s, sigma))
            e_state[i] = max(e_state[i], len(sigma)) + 1
            triggered[i] = {"stage": s, "t": t, "sigma": sigma, "vote": vote,
                            "e_index": e_state[i]}
            trace.add(s, "trigger", e=i, t=t, sigma=sigma, vote=vote,
                      e_index=e_state[i])
            trace.witness(f"thm41.sigma_measure.{i}",
                          Dyadic.exp2(-len(sigma)) <= Dyadic.exp2(-(s + 5)),
                          sigma=sigma, stage=s)
            in_c, out_c = Clopen([c for _, c in in_list]), Clopen([c for _, c in out_list])
            trace.witness(f"thm41.in_out_stage.{s}",
                          in_c.intersect(out_c) == Clopen()
                          and in_c.measure() <= Dyadic(1, 4)
                          and out_c.measure() <= Dyadic(1, 4))
        view = y_view(e_state[i], t)
        if view and not view.is_subset_of(w_current[i]):
            w_sched[i].extend((s, c) for c in view.cylinders)
            w_current[i] = w_current[i].union(view)

    w = MLTest([Enumeration(w_sched[i]) for i in range(max_i + 1)], check=False)
    for i in range(max_i + 1):
        if w.component(i).final_measure() > Dyadic.exp2(-(i + 4)):
            raise BudgetError(f"component {i} exceeded its 2^-{i + 4} bound")
    in_set = Clopen([c for _, c in in_list])
    out_set = Clopen([c for _, c in out_list])
    a_enum = Enumeration(in_list)
    trace.outputs = {"w": w, "in": in_set, "out": out_set,
                     "triggers": {str(k): v for k, v in sorted(triggered.items())}}

    final = big_s
    stages = sorted({s for s, _ in in_list + out_list})
    for s in stages:
        in_c = Clopen([c for st, c in in_list if st <= s])
        out_c = Clopen([c for st, c in out_list if st <= s])
        trace.witness(f"thm41.in_out_cumulative.{s}",
                      in_c.intersect(out_c) == Clopen()
                      and in_c.measure() <= Dyadic(1, 4)
                      and out_c.measure() <= Dyadic(1, 4))
    for i in range(max_i + 1):
        y_ref = y.stage_view(i + 4, final)
        trace.witness(f"thm41.w_inside_reference.{i}",
                      w.stage_view(i, final).is_subset_of(y_ref))
    for i, info in sorted(triggered.items()):
        sig = Clopen([info["sigma"]])
        w_final = w.stage_view(i, final)
        placed_in = sig.is_subset_of(in_set)
        disjoint_in = sig.intersect(in_set) == Clopen()
        contradicts = (info["vote"] == 0 and placed_in) or \
                      (info["vote"] == 1 and disjoint_in)
        trace.witness(f"thm41.vote_contradiction.{i}", contradicts, **info)
        trace.witness(f"thm41.witness_escape.{i}",
                      not sig.is_subset_of(w_final)
                      and sig.intersect(w_final).measure() < sig.measure())
    trace.sort_events()
    return Thm41Result(w=w, in_set=in_set, out_set=out_set, a_enum=a_enum,
                       trace=trace, triggers=triggered)


# ---------------------------------------------------------------------------
# halting-sensitive rebuild over the unary-prefixed test
# ---------------------------------------------------------------------------

@dataclass
class Thm410Result:
    u: MLTest
    vstr: MLTest
    trace: ConstructionTrace


def build_thm410(v: MLTest, halting: Mapping[int, int], budgets: Budgets,
                 streams: Sequence[Stream] = ()) -> Thm410Result:
    """Rebuild the unary-prefixed test so that, after a declared halt of
    index e, each component additionally enumerates the [1^e 0] part of the
    previous component from the halt stage on."""
    for i in range(v.max_index + 1):
        if v.component(i).final_measure() > Dyadic.exp2(-(i + 2)):
            raise BudgetError(
                f"input component {i} must stay within 2^-{i + 2}")
    depth = budgets.max_depth
    trace = ConstructionTrace(name="thm410")
    vstr = stratify(v, budgets)

    comps: list[Enumeration] = [vstr.component(0)]
    skipped = 0
    for i in range(vstr.max_index):
        sched = list(vstr.component(i + 1).schedule)
        for e, h in sorted(halting.items()):
            cone = "1" * e + "0"
            if len(cone) > depth:
                skipped += 1
                continue
            for st, c in vstr.component(i).schedule:
                if c.startswith(cone) or cone.startswith(c):
                    kept = c if len(c) >= len(cone) else cone
                    sched.append((max(h, st), kept))
        comps.append(Enumeration(sched))
    u = MLTest(comps)
    for e, h in sorted(halting.items()):
        trace.add(h, "halt", e=e)
    trace.outputs = {"u": u, "vstr_skipped": skipped,
                     "halting": {str(e): h for e, h in sorted(halting.items())}}

    final = budgets.max_stage
    for i in range(vstr.max_index):
        lhs = u.component(i + 1).final_measure()
        rhs = vstr.component(i + 1).final_measure() + vstr.component(i).final_measure()
        trace.witness(f"thm410.budget_sum.{i + 1}",
                      lhs <= rhs and lhs <= Dyadic.exp2(-(i + 1)),
                      measure=lhs, bound=rhs)

    probe = [e for e in range(min(6, budgets.max_layers + 1)) if e not in halting]
    stages = sorted(set(u.change_stages()) | set(vstr.change_stages()) | {0, final})
    for e in probe[:3]:
        cone = Clopen(["1" * e + "0"])
        ok = all(
            u.stage_view(i, s).intersect(cone) == vstr.stage_view(i, s).intersect(cone)
            for i in range(vstr.max_index + 1)
            for s in stages)
        trace.witness(f"thm410.nonhalting_unchanged.{e}", ok)

    for e in sorted(halting):
        if e > budgets.max_layers:
            continue
        for x in streams:
            d = rd_at_stage(x, v, final)
            if not d.determined or d.value < 2:
                continue
            shifted = prepend("1" * e + "0", x)
            got = rd_at_stage(shifted, u, final)
            trace.witness(f"thm410.halting_shift.{e}.{x.name}",
                          got.value > d.value - 1,
                          rd_input=d.value, rd_output=got.value)
    trace.sort_events()
    return Thm410Result(u=u, vstr=vstr, trace=trace)


# ---------------------------------------------------------------------------
# right-shift cone enumeration along a shrinking tree
# ---------------------------------------------------------------------------

@dataclass
class Lemma63Result:
    a_enum: Enumeration
    cones: tuple[tuple[int, str], ...]
    n0: int
    trace: ConstructionTrace


def build_lemma63(tree: CoTree, budgets: Budgets, n0: int | None = None) -> Lemma63Result:
    """Enumerate, per length, one tracked cylinder meeting the tree, shifting
    it one step right whenever it dies in the tree or is swallowed by a
    shorter enumerated cone."""
    big_s, depth = budgets.max_stage, budgets.max_depth
    final_measure = tree.path_measure(big_s)
    quarter = final_measure.half().half()
    if n0 is None:
        n0 = 0
        while n0 < depth and not (Dyadic.exp2(-n0) <= quarter):
            n0 += 1
    if n0 >= depth or not (Dyadic.exp2(-n0) <= quarter):
        raise BudgetError(
            f"tree too thin: need 4 * 2^-n0 <= {final_measure} with n0 < K")
    trace = ConstructionTrace(name="lemma63")
    trace.add(-1, "n0", value=n0, tree_measure=final_measure)

    cones: list[tuple[int, str]] = []
    rightmost: dict[int, str] = {}

    def current_clopen() -> Clopen:
        return Clopen([c for _, c in cones])

    for s in range(big_s + 1):
        i, _t = unpair(s)
        n = n0 + i
        if n > depth:
            continue
        if n not in rightmost:
            sigma = leftmost_uncovered(n, current_clopen())
            if sigma is None:
                raise SearchExhaustedError(f"no uncovered string of length {n}")
            cones.append((s, sigma))
            rightmost[n] = sigma
            trace.add(s, "init", length=n, sigma=sigma)
            continue
        sigma = rightmost[n]
        covered = any(len(c) < len(sigma) and sigma.startswith(c)
                      for _, c in cones)
        alive = tree.alive(sigma, min(s, big_s))
        if covered or not alive:
            nxt = sigma_plus(sigma)
            if nxt is None:
                raise SearchExhaustedError(
                    f"right neighbour exhausted at length {n} "
                    "(tree measure precondition violated)")
            cones.append((s, nxt))
            rightmost[n] = nxt
            trace.add(s, "replace", length=n, old=sigma, new=nxt,
                      reason="covered" if covered else "dead")

    a_enum = Enumeration(cones)
    trace.outputs = {"a": a_enum, "cones": [[s, c] for s, c in cones], "n0": n0}
    return _finish_lemma63(tree, budgets, trace, a_enum, cones, n0)


def _finish_lemma63(tree: CoTree, budgets: Budgets, trace: ConstructionTrace,
                    a_enum: Enumeration, cones: list[tuple[int, str]], n0: int) -> Lemma63Result:
    big_s = budgets.max_stage
    dead_changes = tuple(getattr(tree.dead, "change_stages", tuple)())
    stages = sorted({s for s, _ in cones} | set(dead_changes) | {0, big_s})
    for s in stages:
        live = tree.live_clopen(min(s, big_s))
        inter = a_enum.stage_view(s).intersect(live)
        ok = inter.measure() <= tree.path_measure(min(s, big_s)).half()
        trace.witness(f"lemma63.half_measure.{s}", ok,
                      intersection=inter.measure(),
                      tree=tree.path_measure(min(s, big_s)))

    live_final = tree.live_clopen(big_s)
    ordered = [c for _, c in cones]
    for m in range(min(21, len(ordered))):
        first = Clopen(ordered[:m])
        found = False
        for later in ordered[m:]:
            part = Clopen([later]).intersect(live_final)
            if part and not part.is_subset_of(first):
                found = True
                break
        trace.witness(f"lemma63.noncover.{m}", found)
    trace.witness("lemma63.n0_bound",
                  Dyadic.exp2(-n0) <= tree.path_measure(big_s).half().half())
    trace.sort_events()
    return Lemma63Result(a_enum=a_enum, cones=tuple(cones), n0=n0, trace=trace)
