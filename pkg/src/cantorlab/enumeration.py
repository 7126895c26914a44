"""Stage-scheduled enumerations, measure-budgeted test families, combinators,
and the scenario world they are instantiated over.

An enumeration is a finite schedule of (stage, cylinder) pairs; its view at a
stage is the canonical union of everything scheduled so far, so views only
grow.  A test is an indexed family of enumerations where component ``i`` must
stay within measure ``2**-i`` at every stage, checked exactly.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .core import (
    BudgetError,
    Clopen,
    DepthExceededError,
    Dyadic,
    ScenarioError,
    SearchExhaustedError,
    check_bits,
    intersect_all,
    str_order_key,
)
from .deficiency import CoTree, Stream, rd_at_stage


class Enumeration:
    """A monotone stage-scheduled clopen: cylinders tagged with entry stages."""

    __slots__ = ("schedule", "_stages", "_views", "_measures")

    def __init__(self, schedule: Iterable[tuple[int, str]] = ()) -> None:
        items = {(int(st), check_bits(c)) for st, c in schedule}
        for st, _ in items:
            if st < 0:
                raise ValueError("schedule stages must be non-negative")
        self.schedule: tuple[tuple[int, str], ...] = tuple(
            sorted(items, key=lambda p: (p[0],) + str_order_key(p[1])))
        self._stages: list[int] | None = None
        self._views: list[Clopen] | None = None
        self._measures: list[Dyadic] | None = None

    def _ensure(self) -> None:
        if self._stages is not None:
            return
        stages: list[int] = []
        views: list[Clopen] = []
        measures: list[Dyadic] = []
        acc: list[str] = []
        i = 0
        sched = self.schedule
        while i < len(sched):
            s = sched[i][0]
            while i < len(sched) and sched[i][0] == s:
                acc.append(sched[i][1])
                i += 1
            view = Clopen(acc)
            acc = list(view.cylinders)
            stages.append(s)
            views.append(view)
            measures.append(view.measure())
        self._stages, self._views, self._measures = stages, views, measures

    def stage_view(self, s: int) -> Clopen:
        """Canonical union of all cylinders scheduled at stages <= ``s``."""
        if s < 0:
            raise ValueError("stage must be non-negative")
        self._ensure()
        k = bisect_right(self._stages, s)
        return self._views[k - 1] if k else Clopen()

    def measure_at(self, s: int) -> Dyadic:
        self._ensure()
        k = bisect_right(self._stages, s)
        return self._measures[k - 1] if k else Dyadic.zero()

    def change_stages(self) -> tuple[int, ...]:
        self._ensure()
        return tuple(self._stages)

    def final_view(self) -> Clopen:
        self._ensure()
        return self._views[-1] if self._views else Clopen()

    def final_measure(self) -> Dyadic:
        self._ensure()
        return self._measures[-1] if self._measures else Dyadic.zero()

    def last_stage(self) -> int:
        return self.schedule[-1][0] if self.schedule else 0

    def max_length(self) -> int:
        return max((len(c) for _, c in self.schedule), default=0)

    def to_json(self) -> list[list]:
        return [[s, c] for s, c in self.schedule]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Enumeration):
            return NotImplemented
        return self.schedule == other.schedule

    def __hash__(self) -> int:
        return hash(self.schedule)

    def __repr__(self) -> str:
        return f"Enumeration({list(self.schedule)!r})"


class MLTest:
    """An indexed family of enumerations with exact per-index measure budgets.

    Component ``i`` must satisfy measure <= 2**-i at every stage; since views
    only grow it suffices to check the final view, which the constructor does
    unless ``check=False``.
    """

    def __init__(
        self,
        components: Sequence[Enumeration],
        *,
        nested: bool = False,
        notes: Mapping[str, object] | None = None,
        check: bool = True,
    ) -> None:
        self.components: tuple[Enumeration, ...] = tuple(components)
        if not self.components:
            raise ValueError("a test needs at least one component")
        self.nested = nested
        self.notes: dict[str, object] = dict(notes or {})
        if check:
            self.ensure_budget()

    @property
    def max_index(self) -> int:
        return len(self.components) - 1

    def component(self, i: int) -> Enumeration:
        if not 0 <= i <= self.max_index:
            raise BudgetError(f"component index {i} out of range 0..{self.max_index}")
        return self.components[i]

    def stage_view(self, i: int, s: int) -> Clopen:
        return self.component(i).stage_view(s)

    def final_stage(self) -> int:
        return max(c.last_stage() for c in self.components)

    def change_stages(self) -> tuple[int, ...]:
        out: set[int] = set()
        for c in self.components:
            out.update(c.change_stages())
        return tuple(sorted(out))

    def ensure_budget(self) -> None:
        for i, comp in enumerate(self.components):
            m = comp.final_measure()
            if m > Dyadic.exp2(-i):
                raise BudgetError(
                    f"component {i} has measure {m} exceeding 2^-{i}")

    def check_nested_stagewise(self) -> bool:
        stages = self.change_stages() or (0,)
        for i in range(self.max_index):
            for s in stages:
                if not self.stage_view(i + 1, s).is_subset_of(self.stage_view(i, s)):
                    return False
        return True

    def to_json(self) -> dict:
        return {
            "components": [c.to_json() for c in self.components],
            "nested": self.nested,
            "notes": self.notes,
        }


def effective_top(t: MLTest) -> int:
    """Largest component index with any scheduled content.

    Components above it are structurally empty (their defining indices fall
    outside the index budget), so intersections and pad targets stop here.
    """
    for i in range(t.max_index, -1, -1):
        if t.component(i).schedule:
            return i
    return 0


def stage_view(t: MLTest, i: int, s: int, budgets: "Budgets | None" = None) -> Clopen:
    """Component view with explicit budget enforcement when budgets are given."""
    if budgets is not None:
        if i > budgets.max_index:
            raise BudgetError(f"index {i} exceeds budget I={budgets.max_index}")
        if s > budgets.max_stage:
            raise BudgetError(f"stage {s} exceeds budget S={budgets.max_stage}")
    return t.stage_view(i, s)


# ---------------------------------------------------------------------------
# budgets and scenarios
# ---------------------------------------------------------------------------

HARD_MAX_INDEX = 64
HARD_MAX_STAGE = 10**6
HARD_MAX_DEPTH = 64


@dataclass(frozen=True)
class Budgets:
    """World bounds: max component index, max stage, max depth, unary-pad cap."""

    max_index: int
    max_stage: int
    max_depth: int
    max_layers: int

    def validate(self) -> None:
        if not 0 <= self.max_index <= HARD_MAX_INDEX:
            raise ScenarioError(f"budget I={self.max_index} outside 0..{HARD_MAX_INDEX}")
        if not 0 <= self.max_stage <= HARD_MAX_STAGE:
            raise ScenarioError(f"budget S={self.max_stage} outside 0..{HARD_MAX_STAGE}")
        if not 1 <= self.max_depth <= HARD_MAX_DEPTH:
            raise ScenarioError(f"budget K={self.max_depth} outside 1..{HARD_MAX_DEPTH}")
        if not 0 <= self.max_layers <= self.max_depth:
            raise ScenarioError(f"budget L={self.max_layers} outside 0..K")

    @classmethod
    def from_json(cls, obj: Mapping) -> "Budgets":
        try:
            depth = int(obj["K"])
            return cls(
                max_index=int(obj["I"]),
                max_stage=int(obj["S"]),
                max_depth=depth,
                max_layers=int(obj.get("L", depth // 2)),
            )
        except KeyError as exc:
            raise ScenarioError(f"budgets missing field {exc}") from exc

    def to_json(self) -> dict:
        return {"I": self.max_index, "S": self.max_stage,
                "K": self.max_depth, "L": self.max_layers}


@dataclass
class Scenario:
    """The finite world a run quantifies over: tests, tables, streams, trees."""

    budgets: Budgets
    tests: tuple[MLTest, ...]
    partial_functions: dict[int, dict[int, tuple[int, int]]]
    functionals: dict[int, dict[tuple[str, int], int]]
    halting: dict[int, int]
    streams: dict[str, Stream]
    random_streams: tuple[str, ...]
    inert_functionals: frozenset[int]
    opens: dict[str, tuple[Enumeration, ...]]
    trees: dict[str, Enumeration]
    parallel_family: tuple[str, ...] = ()
    parallel_bound: int = 0
    raw: dict = field(repr=False, default_factory=dict)

    def stream(self, name: str) -> Stream:
        try:
            return self.streams[name]
        except KeyError:
            raise ScenarioError(f"unknown stream {name!r}") from None

    def declared_random(self) -> list[Stream]:
        return [self.streams[n] for n in self.random_streams]

    def tree(self, name: str) -> CoTree:
        try:
            return CoTree(self.trees[name], self.budgets.max_depth)
        except KeyError:
            raise ScenarioError(f"unknown tree {name!r}") from None


def _parse_schedule(entries: Iterable[Mapping], *, with_component: bool) -> list[tuple[int, int, str]]:
    out = []
    for e in entries:
        comp = int(e["component"]) if with_component else 0
        out.append((comp, int(e["stage"]), check_bits(e["cylinder"])))
    return out


def load_scenario(source: str | Path | Mapping) -> Scenario:
    """Parse a scenario from a JSON file path or an already-loaded mapping."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    else:
        raw = dict(source)

    budgets = Budgets.from_json(raw.get("budgets", {}))
    big_i = budgets.max_index

    tests: list[MLTest] = []
    for ti, test_entries in enumerate(raw.get("tests", [])):
        triples = _parse_schedule(test_entries, with_component=True)
        beyond = [comp for comp, _, _ in triples if comp > big_i]
        if beyond:
            raise ScenarioError(
                f"test {ti} schedules component {max(beyond)} beyond budget I={big_i}")
        comps = [Enumeration([(s, c) for comp, s, c in triples if comp == i])
                 for i in range(big_i + 1)]
        tests.append(MLTest(comps))

    partial: dict[int, dict[int, tuple[int, int]]] = {}
    for key, entries in sorted(raw.get("partial_functions", {}).items(), key=lambda kv: int(kv[0])):
        table = {int(e["arg"]): (int(e["stage"]), int(e["value"])) for e in entries}
        partial[int(key)] = table

    functionals: dict[int, dict[tuple[str, int], int]] = {}
    for key, entries in sorted(raw.get("functionals", {}).items(), key=lambda kv: int(kv[0])):
        table = {(check_bits(e["prefix"]), int(e["advice"])): int(e["value"]) for e in entries}
        functionals[int(key)] = table

    halting = {int(e["e"]): int(e["stage"]) for e in raw.get("halting", [])}

    streams: dict[str, Stream] = {}
    randoms: list[str] = []
    for e in raw.get("streams", []):
        st = Stream(name=e["name"], pad=e.get("pad", ""), period=e["period"])
        streams[st.name] = st
        if e.get("random"):
            randoms.append(st.name)

    opens: dict[str, tuple[Enumeration, ...]] = {}
    for name, family in sorted(raw.get("opens", {}).items()):
        opens[name] = tuple(
            Enumeration([(int(e["stage"]), check_bits(e["cylinder"])) for e in entries])
            for entries in family)

    trees: dict[str, Enumeration] = {}
    for name, entries in sorted(raw.get("trees", {}).items()):
        trees[name] = Enumeration(
            [(int(e["stage"]), check_bits(e["cylinder"])) for e in entries])

    return Scenario(
        budgets=budgets,
        tests=tuple(tests),
        partial_functions=partial,
        functionals=functionals,
        halting=halting,
        streams=streams,
        random_streams=tuple(randoms),
        inert_functionals=frozenset(int(e) for e in raw.get("inert_functionals", [])),
        opens=opens,
        trees=trees,
        parallel_family=tuple(raw.get("parallel_family", [])),
        parallel_bound=int(raw.get("parallel_bound", 0)),
        raw=raw,
    )


def validate_scenario(sc: Scenario) -> None:
    """Check budgets, schedules, stream declarations, and the padding reservoir.

    Raises ScenarioError on structural violations and SearchExhaustedError if
    the padding reservoir (a cylinder inside every universal component's
    stage-0 view) is missing.
    """
    b = sc.budgets
    b.validate()
    if not sc.tests:
        raise ScenarioError("scenario registers no tests")
    for ti, t in enumerate(sc.tests):
        for i, comp in enumerate(t.components):
            for s, c in comp.schedule:
                if s > b.max_stage:
                    raise ScenarioError(
                        f"test {ti} component {i}: stage {s} exceeds S={b.max_stage}")
                if len(c) > b.max_depth:
                    raise ScenarioError(
                        f"test {ti} component {i}: cylinder {c!r} deeper than K={b.max_depth}")
        t.ensure_budget()
    for e, table in sc.partial_functions.items():
        for arg, (stage, _value) in table.items():
            if stage > b.max_stage:
                raise ScenarioError(
                    f"partial function {e} arg {arg}: stage {stage} exceeds S")
    for e, table in sc.functionals.items():
        for (prefix, _advice) in table:
            if len(prefix) > b.max_depth:
                raise ScenarioError(f"functional {e}: prefix {prefix!r} deeper than K")
    for e, stage in sc.halting.items():
        if stage > b.max_stage:
            raise ScenarioError(f"halting entry {e}: stage {stage} exceeds S")
    unknown_inert = sc.inert_functionals - set(sc.functionals)
    if unknown_inert:
        raise ScenarioError(f"inert declaration for unknown functionals {sorted(unknown_inert)}")
    for name, fam in sc.opens.items():
        for enum in fam:
            if enum.max_length() > b.max_depth:
                raise ScenarioError(f"open family {name!r} deeper than K")
    for name, enum in sc.trees.items():
        if enum.max_length() > b.max_depth:
            raise ScenarioError(f"tree {name!r} deeper than K")

    surrogate = universal_sum(sc)

    # Padding reservoir: some cylinder inside every contentful component at
    # stage 0.  Components above the effective top are structurally empty
    # (their source indices fall outside the index budget) and no pad ever
    # targets them.
    inter: Clopen | None = None
    for i in range(effective_top(surrogate) + 1):
        view = surrogate.stage_view(i, 0)
        inter = view if inter is None else inter.intersect(view)
        if not inter:
            raise SearchExhaustedError(
                f"padding reservoir missing: intersection of components 0..{i} "
                "is empty at stage 0")

    top = effective_top(surrogate)
    for name in sc.random_streams:
        x = sc.stream(name)
        report = rd_at_stage(x, surrogate, b.max_stage)
        if report.value > top or not report.determined:
            raise ScenarioError(
                f"stream {name!r} declared random but captured by every "
                f"contentful component at stage {b.max_stage}")

    for name in sc.parallel_family:
        if name not in sc.random_streams:
            raise ScenarioError(
                f"parallel family member {name!r} is not a declared random stream")
        report = rd_at_stage(sc.stream(name), surrogate, b.max_stage)
        if report.value > sc.parallel_bound:
            raise ScenarioError(
                f"parallel family member {name!r} has deficiency {report.value} "
                f"above the declared bound {sc.parallel_bound}")


# ---------------------------------------------------------------------------
# combinators
# ---------------------------------------------------------------------------

def universal_sum(sc: Scenario) -> MLTest:
    """Componentwise union U_n of the registered tests' components n+e+1.

    The n-th component collects component ``n+e+1`` of every registered test
    ``e``; the geometric index shift keeps the budget.  Terms whose index
    would exceed the index budget are dropped and recorded in the notes; a
    test that would contribute to no component at all is an error.
    """
    if not sc.tests:
        raise ValueError("universal_sum needs at least one registered test")
    big_i = sc.budgets.max_index
    for e in range(len(sc.tests)):
        if e + 1 > big_i:
            raise BudgetError(
                f"budget I={big_i} too small for requested component {e + 1} "
                f"of registered test {e}")
    comps = []
    truncated: list[list[int]] = []
    for n in range(big_i + 1):
        sched: list[tuple[int, str]] = []
        for e, t in enumerate(sc.tests):
            j = n + e + 1
            if j <= big_i and j <= t.max_index:
                sched.extend(t.component(j).schedule)
            else:
                truncated.append([n, e])
        comps.append(Enumeration(sched))
    return MLTest(comps, notes={"truncated_terms": truncated})


def descending_chain(u: MLTest) -> MLTest:
    """The stagewise intersections V_n of components 0..n; nested by design."""
    comps: list[Enumeration] = []
    for n in range(u.max_index + 1):
        changes: set[int] = set()
        for i in range(n + 1):
            changes.update(u.component(i).change_stages())
        sched: list[tuple[int, str]] = []
        prev: Clopen | None = None
        for s in sorted(changes):
            view = intersect_all(u.stage_view(i, s) for i in range(n + 1))
            if view != prev:
                sched.extend((s, c) for c in view.cylinders)
                prev = view
        comps.append(Enumeration(sched))
    return MLTest(comps, nested=True)


def even_shift(v: MLTest) -> MLTest:
    """Re-index to W_n = V_{2n+1}."""
    comps = [v.component(2 * n + 1)
             for n in range((v.max_index + 1) // 2)]
    if not comps:
        raise BudgetError(f"even shift needs component 1; test ends at {v.max_index}")
    return MLTest(comps)


def shift_union(v: MLTest) -> MLTest:
    """Tail unions: component i collects every component strictly above i.

    The union is truncated at the test's own top index; the truncation point
    is recorded in the notes so traces carry it.
    """
    comps = []
    for i in range(v.max_index + 1):
        sched: list[tuple[int, str]] = []
        for j in range(i + 1, v.max_index + 1):
            sched.extend(v.component(j).schedule)
        comps.append(Enumeration(sched))
    return MLTest(comps, notes={"union_truncated_at": v.max_index})


def stratify(u: MLTest, budgets: Budgets) -> MLTest:
    """Unary-prefixed rebuild: component i holds the cone of 1**(i+3) plus
    every component-(i+1) cylinder re-rooted below 1**l 0 for l <= L.

    Re-rooted cylinders that would exceed the depth budget are skipped and
    counted in the notes.
    """
    depth, layers = budgets.max_depth, budgets.max_layers
    comps: list[Enumeration] = []
    skipped = 0
    for i in range(u.max_index):
        head = "1" * (i + 3)
        if len(head) > depth:
            raise DepthExceededError(
                f"stratification head 1^{i + 3} exceeds depth K={depth}")
        sched: list[tuple[int, str]] = [(0, head)]
        for s, c in u.component(i + 1).schedule:
            for layer in range(layers + 1):
                moved = "1" * layer + "0" + c
                if len(moved) <= depth:
                    sched.append((s, moved))
                else:
                    skipped += 1
        comps.append(Enumeration(sched))
    if not comps:
        raise BudgetError("stratification needs a test with at least two components")
    return MLTest(comps, notes={"depth_skipped": skipped})


def replace_component(u: MLTest, i: int, w: Enumeration) -> MLTest:
    """The same test with component ``i`` swapped for ``w`` (budget enforced)."""
    if not 0 <= i <= u.max_index:
        raise BudgetError(f"component index {i} out of range 0..{u.max_index}")
    if w.final_measure() > Dyadic.exp2(-i):
        raise BudgetError(
            f"replacement component has measure {w.final_measure()} > 2^-{i}")
    comps = list(u.components)
    comps[i] = w
    return MLTest(comps, nested=False, notes=dict(u.notes))


def index_shift(u: MLTest, c: int) -> MLTest:
    """Drop the first ``c`` components: component i becomes old i+c."""
    if c < 0 or c > u.max_index:
        raise BudgetError(f"shift {c} out of range for test ending at {u.max_index}")
    return MLTest([u.component(i + c) for i in range(u.max_index + 1 - c)],
                  nested=u.nested)
