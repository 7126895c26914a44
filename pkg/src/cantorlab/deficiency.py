"""Streams, stage-relative randomness deficiency, and advice-table evaluation.

A stream is a total infinite bit sequence realized as a finite pad followed by
a periodic tail, so every prefix is computable and repeated reads agree.  The
deficiency of a stream against a test at a stage is the least component index
whose current stage view misses the stream; it is monotone in the stage and
freezes once the test's schedules are exhausted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Iterator, Mapping, Protocol

from .core import Clopen, Dyadic, check_bits, extensions

if TYPE_CHECKING:  # pragma: no cover - typing only
    from .enumeration import MLTest


class StageViewSource(Protocol):
    def stage_view(self, s: int) -> Clopen: ...


@dataclass(frozen=True)
class Stream:
    """A deterministic infinite bit sequence: ``pad`` then ``period`` cycling."""

    name: str
    pad: str
    period: str

    def __post_init__(self) -> None:
        check_bits(self.pad)
        check_bits(self.period)
        if not self.period:
            raise ValueError(f"stream {self.name!r} needs a non-empty period")

    def bit(self, k: int) -> str:
        if k < len(self.pad):
            return self.pad[k]
        return self.period[(k - len(self.pad)) % len(self.period)]

    def prefix(self, k: int) -> str:
        if k <= len(self.pad):
            return self.pad[:k]
        reps = (k - len(self.pad)) // len(self.period) + 1
        return (self.pad + self.period * reps)[:k]

    def starts_with(self, bits: str) -> bool:
        return self.prefix(len(bits)) == bits


def prepend(bits: str, stream: Stream, name: str | None = None) -> Stream:
    """The stream ``bits`` followed by ``stream`` from position 0."""
    check_bits(bits)
    return Stream(name or f"{bits}^{stream.name}", bits + stream.pad, stream.period)


@dataclass(frozen=True)
class DeficiencyReport:
    """Least escaping component index at a stage.

    ``determined`` says the same index results at the final stage; a stream
    captured by every component reports ``max_index + 1`` and is flagged
    undetermined.
    """

    value: int
    stage: int
    determined: bool

    def to_dict(self) -> dict:
        return {"value": self.value, "stage": self.stage, "determined": self.determined}


def _escapes(x: Stream | str, view: Clopen) -> bool:
    if isinstance(x, str):
        return not view.covers(x)
    return not any(x.starts_with(c) for c in view.cylinders)


def member_at_stage(x: Stream, t: "MLTest", i: int, s: int) -> bool:
    """True iff some cylinder of component ``i``'s stage-``s`` view prefixes ``x``."""
    view = t.stage_view(i, s)
    return any(x.starts_with(c) for c in view.cylinders)


def _least_escape(x: Stream | str, t: "MLTest", s: int) -> int:
    for i in range(t.max_index + 1):
        if _escapes(x, t.stage_view(i, s)):
            return i
    return t.max_index + 1


def rd_at_stage(x: Stream | str, t: "MLTest", s: int) -> DeficiencyReport:
    """Stage-relative deficiency of a stream (or of a cylinder, for ``str``).

    For a stream the component view must prefix it; for a finite string the
    view must cover its whole cylinder.  The value is monotone non-decreasing
    in ``s``.
    """
    value = _least_escape(x, t, s)
    final = _least_escape(x, t, t.final_stage())
    determined = value <= t.max_index and value == final
    return DeficiencyReport(value=value, stage=s, determined=determined)


# ---------------------------------------------------------------------------
# co-trees: trees presented by a growing set of dead cones
# ---------------------------------------------------------------------------

class CoTree:
    """The depth-``depth`` tree of strings not yet covered by dead cones.

    ``dead`` is anything with ``stage_view(s) -> Clopen``; a node belongs to
    the tree at stage ``s`` while its cylinder is not fully covered.  A static
    tree is the special case of all dead cones present at stage 0.
    """

    def __init__(self, dead: StageViewSource, depth: int) -> None:
        self.dead = dead
        self.depth = depth

    def alive(self, node: str, s: int) -> bool:
        if len(node) > self.depth:
            raise ValueError(f"node {node!r} deeper than tree depth {self.depth}")
        return not self.dead.stage_view(s).covers(node)

    def dead_view(self, s: int) -> Clopen:
        return self.dead.stage_view(s)

    def path_measure(self, s: int) -> Dyadic:
        """Exact measure of the set of paths at stage ``s``."""
        return Dyadic.one() - self.dead.stage_view(s).measure()

    def live_clopen(self, s: int) -> Clopen:
        return self.dead.stage_view(s).complement(self.depth)

    def carries(self, x: Stream, s: int) -> bool:
        """True iff the depth-``depth`` prefix of ``x`` is still in the tree."""
        return self.alive(x.prefix(self.depth), s)


class _StaticDead:
    def __init__(self, cones: Iterable[str]) -> None:
        self._view = Clopen(cones)

    def stage_view(self, s: int) -> Clopen:
        return self._view


def static_cotree(dead_cones: Iterable[str], depth: int) -> CoTree:
    return CoTree(_StaticDead(dead_cones), depth)


def complement_tree(t: "MLTest", i: int, depth: int) -> CoTree:
    """The tree of strings whose cylinders escape component ``i``'s final view."""
    return static_cotree(t.stage_view(i, t.final_stage()).cylinders, depth)


# ---------------------------------------------------------------------------
# advice tables
# ---------------------------------------------------------------------------

AdviceTable = Mapping[tuple[str, int], int]


@dataclass(frozen=True)
class FilteredTree:
    """A co-tree pruned by an advice table at a fixed advice.

    A node survives iff the table has no entry for it (divergence) or the
    entry returns exactly the advice.
    """

    base: CoTree
    table: AdviceTable
    advice: int

    def contains(self, node: str, s: int = 0) -> bool:
        alive = self.base.alive(node, s)
        value = self.table.get((node, self.advice))
        return alive and (value is None or value == self.advice)

    def nodes(self, max_len: int) -> Iterator[str]:
        for d in range(max_len + 1):
            for node in extensions("", d):
                if self.contains(node):
                    yield node


def filter_tree(t_i: CoTree, phi: AdviceTable, i: int) -> FilteredTree:
    """Prune ``t_i`` to the nodes consistent with advice ``i`` under ``phi``."""
    return FilteredTree(base=t_i, table=dict(phi), advice=i)


def eval_table(phi: AdviceTable, x: Stream, advice: int, max_len: int) -> int | None:
    """Value of the shortest table entry hit by a prefix of ``x``, else None."""
    for n in range(max_len + 1):
        value = phi.get((x.prefix(n), advice))
        if value is not None:
            return value
    return None


@dataclass(frozen=True)
class LayerwiseVerdict:
    """Outcome of evaluating an advice table at every admissible advice."""

    advices: tuple[int, ...]
    values: tuple[tuple[int, int | None], ...]
    divergent: tuple[int, ...]
    consistent: bool
    exact_advice: int | None
    exact_value: int | None

    def to_dict(self) -> dict:
        return {
            "advices": list(self.advices),
            "values": [[a, v] for a, v in self.values],
            "divergent": list(self.divergent),
            "consistent": self.consistent,
            "exact_advice": self.exact_advice,
            "exact_value": self.exact_value,
        }


def layerwise_eval(phi: AdviceTable, x: Stream, t: "MLTest") -> LayerwiseVerdict:
    """Evaluate ``phi`` at every advice where ``x`` escapes the final view.

    Consistency requires every admissible evaluation to converge to one common
    value; the exact-advice slot evaluates at the least escaping index.
    """
    final = t.final_stage()
    max_len = max((len(k[0]) for k in phi.keys()), default=0)
    advices = tuple(i for i in range(t.max_index + 1)
                    if _escapes(x, t.stage_view(i, final)))
    values: list[tuple[int, int | None]] = []
    divergent: list[int] = []
    for i in advices:
        v = eval_table(phi, x, i, max_len)
        values.append((i, v))
        if v is None:
            divergent.append(i)
    defined = [v for _, v in values if v is not None]
    consistent = not divergent and len(set(defined)) <= 1
    rd = rd_at_stage(x, t, final)
    exact_advice = rd.value if rd.value <= t.max_index else None
    exact_value = (eval_table(phi, x, exact_advice, max_len)
                   if exact_advice is not None else None)
    return LayerwiseVerdict(
        advices=advices,
        values=tuple(values),
        divergent=tuple(divergent),
        consistent=consistent,
        exact_advice=exact_advice,
        exact_value=exact_value,
    )
