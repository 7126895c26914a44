"""Finite binary strings, canonical clopen sets, and exact dyadic measure.

The ambient space is the set of infinite binary sequences.  A cylinder is the
set of all sequences extending a finite string; a clopen set is a finite union
of cylinders, held in canonical form (prefix-free and sibling-merged) so that
equality, containment, and measure are exact decidable queries.  Measures are
dyadic rationals with arbitrary-precision numerators.  No floats anywhere.

Bit strings are plain ``str`` over ``{'0', '1'}``; the empty string denotes
the whole space's root.
"""

from __future__ import annotations

import math
from itertools import product
from typing import Callable, Iterable, Iterator

#: Largest denominator exponent a Dyadic may carry.  Stage constructions add
#: long tails of 2**-(s+c) terms; the cap turns a runaway scenario into an
#: error instead of an ever-growing integer.
DYADIC_EXPONENT_CAP = 4096


class CantorError(Exception):
    """Base class for all domain errors."""


class DepthExceededError(CantorError):
    """An operation needed strings deeper than the configured depth."""


class BudgetError(CantorError):
    """An index, stage, or measure budget was violated."""


class SearchExhaustedError(CantorError):
    """A bounded string search ran out of room (scenario too small)."""


class ScenarioError(CantorError):
    """A scenario file failed validation."""


# ---------------------------------------------------------------------------
# bit strings
# ---------------------------------------------------------------------------

def check_bits(bits: str) -> str:
    """Validate that ``bits`` is a string over {'0','1'} and return it."""
    if not isinstance(bits, str) or bits.strip("01"):
        raise ValueError(f"not a binary string: {bits!r}")
    return bits


def is_prefix(a: str, b: str) -> bool:
    """True iff ``a`` is a (not necessarily proper) prefix of ``b``."""
    return b.startswith(a)


def str_order_key(bits: str) -> tuple[int, str]:
    """Sort key for the length-lexicographic order: shorter first, 0 before 1."""
    return (len(bits), bits)


def str_order(a: str, b: str) -> int:
    """Three-way length-lexicographic comparison: -1, 0, or 1."""
    ka, kb = str_order_key(a), str_order_key(b)
    return -1 if ka < kb else (0 if ka == kb else 1)


def sigma_plus(bits: str) -> str | None:
    """The string immediately to the right of ``bits`` at the same length.

    Returns None when ``bits`` is the rightmost string of its length.
    """
    check_bits(bits)
    if not bits or bits == "1" * len(bits):
        return None
    n = int(bits, 2) + 1
    return format(n, f"0{len(bits)}b")


def extensions(prefix: str, length: int) -> Iterator[str]:
    """All length-``length`` extensions of ``prefix`` in lexicographic order."""
    gap = length - len(prefix)
    if gap < 0:
        return
    if gap == 0:
        yield prefix
        return
    for tail in product("01", repeat=gap):
        yield prefix + "".join(tail)


# ---------------------------------------------------------------------------
# exact dyadic rationals
# ---------------------------------------------------------------------------

class Dyadic:
    """An exact non-negative dyadic rational ``numerator / 2**exponent``.

    Normalized so the numerator is odd whenever the exponent is positive and
    zero is stored as 0 / 2**0.  Supports exact addition, subtraction (when
    the result stays non-negative), halving, and total ordering.
    """

    __slots__ = ("numerator", "exponent")

    def __init__(self, numerator: int, exponent: int = 0) -> None:
        if numerator < 0:
            raise ValueError("Dyadic numerator must be non-negative")
        if exponent < 0:
            raise ValueError("Dyadic exponent must be non-negative")
        while numerator and exponent and numerator % 2 == 0:
            numerator //= 2
            exponent -= 1
        if numerator == 0:
            exponent = 0
        if exponent > DYADIC_EXPONENT_CAP:
            raise BudgetError(f"dyadic exponent {exponent} exceeds cap {DYADIC_EXPONENT_CAP}")
        self.numerator = numerator
        self.exponent = exponent

    @classmethod
    def zero(cls) -> "Dyadic":
        return cls(0, 0)

    @classmethod
    def one(cls) -> "Dyadic":
        return cls(1, 0)

    @classmethod
    def exp2(cls, e: int) -> "Dyadic":
        """The value 2**e (e may be negative)."""
        return cls(1, -e) if e < 0 else cls(1 << e, 0)

    def half(self) -> "Dyadic":
        return Dyadic(self.numerator, self.exponent + 1)

    def is_zero(self) -> bool:
        return self.numerator == 0

    def _pair(self, other: "Dyadic") -> tuple[int, int, int]:
        e = max(self.exponent, other.exponent)
        return (self.numerator << (e - self.exponent),
                other.numerator << (e - other.exponent), e)

    def __add__(self, other: "Dyadic") -> "Dyadic":
        a, b, e = self._pair(other)
        return Dyadic(a + b, e)

    def __sub__(self, other: "Dyadic") -> "Dyadic":
        a, b, e = self._pair(other)
        if a < b:
            raise ValueError("Dyadic subtraction would go negative")
        return Dyadic(a - b, e)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dyadic):
            return NotImplemented
        return self.numerator == other.numerator and self.exponent == other.exponent

    def __hash__(self) -> int:
        return hash((self.numerator, self.exponent))

    def __lt__(self, other: "Dyadic") -> bool:
        a, b, _ = self._pair(other)
        return a < b

    def __le__(self, other: "Dyadic") -> bool:
        a, b, _ = self._pair(other)
        return a <= b

    def __gt__(self, other: "Dyadic") -> bool:
        return other < self

    def __ge__(self, other: "Dyadic") -> bool:
        return other <= self

    def __str__(self) -> str:
        return f"{self.numerator}/2^{self.exponent}"

    __repr__ = __str__

    @classmethod
    def parse(cls, text: str) -> "Dyadic":
        num, _, rest = text.partition("/2^")
        if not rest:
            raise ValueError(f"not a dyadic literal: {text!r}")
        return cls(int(num), int(rest))


# ---------------------------------------------------------------------------
# canonical clopen sets
# ---------------------------------------------------------------------------

def _trie_insert(root: list, bits: str) -> None:
    # node layout: [child0, child1, terminal]
    node = root
    for ch in bits:
        if node[2]:
            return  # already covered by a shorter cylinder
        i = 1 if ch == "1" else 0
        if node[i] is None:
            node[i] = [None, None, False]
        node = node[i]
    node[0] = node[1] = None  # absorb anything below
    node[2] = True


def _trie_merge(node: list | None) -> None:
    if node is None or node[2]:
        return
    _trie_merge(node[0])
    _trie_merge(node[1])
    if node[0] is not None and node[1] is not None and node[0][2] and node[1][2]:
        node[0] = node[1] = None
        node[2] = True


def _trie_collect(node: list | None, prefix: str, out: list[str]) -> None:
    if node is None:
        return
    if node[2]:
        out.append(prefix)
        return
    _trie_collect(node[0], prefix + "0", out)
    _trie_collect(node[1], prefix + "1", out)


class Clopen:
    """A finite union of cylinders in canonical (prefix-free, merged) form.

    The constructor canonicalizes eagerly: extensions of a present string are
    absorbed, and sibling pairs sigma0/sigma1 are merged to sigma, repeatedly.
    Two clopens denote the same set iff their ``cylinders`` tuples are equal.
    """

    __slots__ = ("cylinders",)

    def __init__(self, strings: Iterable[str] = ()) -> None:
        items = [check_bits(s) for s in strings]
        if items:
            root: list = [None, None, False]
            for s in sorted(items, key=len):
                _trie_insert(root, s)
            _trie_merge(root)
            collected: list[str] = []
            _trie_collect(root, "", collected)
            self.cylinders = tuple(sorted(collected, key=str_order_key))
        else:
            self.cylinders = ()

    # -- basic protocol ----------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Clopen):
            return NotImplemented
        return self.cylinders == other.cylinders

    def __hash__(self) -> int:
        return hash(self.cylinders)

    def __bool__(self) -> bool:
        return bool(self.cylinders)

    def __len__(self) -> int:
        return len(self.cylinders)

    def __iter__(self) -> Iterator[str]:
        return iter(self.cylinders)

    def __repr__(self) -> str:
        return "Clopen({" + ", ".join(self.cylinders) + "})"

    def to_list(self) -> list[str]:
        return list(self.cylinders)

    # -- queries -----------------------------------------------------------

    def is_full(self) -> bool:
        return self.cylinders == ("",)

    def covers(self, bits: str) -> bool:
        """True iff the cylinder of ``bits`` lies inside this set."""
        return any(bits.startswith(c) for c in self.cylinders)

    def meets(self, bits: str) -> bool:
        """True iff the cylinder of ``bits`` intersects this set."""
        return any(bits.startswith(c) or c.startswith(bits) for c in self.cylinders)

    def max_length(self) -> int:
        return max((len(c) for c in self.cylinders), default=0)

    def measure(self) -> Dyadic:
        """Exact measure: the sum of 2**-len over the canonical cylinders."""
        if not self.cylinders:
            return Dyadic.zero()
        k = self.max_length()
        num = sum(1 << (k - len(c)) for c in self.cylinders)
        return Dyadic(num, k)

    # -- algebra -----------------------------------------------------------

    def union(self, other: "Clopen") -> "Clopen":
        return Clopen(self.cylinders + other.cylinders)

    def intersect(self, other: "Clopen") -> "Clopen":
        kept: list[str] = []
        for a in self.cylinders:
            for b in other.cylinders:
                if a.startswith(b):
                    kept.append(a)
                elif b.startswith(a):
                    kept.append(b)
        return Clopen(kept)

    def complement(self, depth: int) -> "Clopen":
        """The complement within the whole space, exact and canonical.

        ``depth`` only bounds residency: every cylinder of this set must have
        length at most ``depth``.
        """
        deep = [c for c in self.cylinders if len(c) > depth]
        if deep:
            raise DepthExceededError(
                f"complement at depth {depth} requested below resident string {deep[0]!r}")
        if not self.cylinders:
            return Clopen([""])
        root: list = [None, None, False]
        for c in self.cylinders:
            _trie_insert(root, c)
        out: list[str] = []

        def walk(node: list | None, prefix: str) -> None:
            if node is None:
                out.append(prefix)
                return
            if node[2]:
                return
            walk(node[0], prefix + "0")
            walk(node[1], prefix + "1")

        walk(root, "")
        return Clopen(out)

    def difference(self, other: "Clopen", depth: int) -> "Clopen":
        return self.intersect(other.complement(depth))

    def is_subset_of(self, other: "Clopen") -> bool:
        """True iff every point of this set lies in ``other``."""
        return all(other.covers(c) for c in self.cylinders)

    def restrict(self, bits: str) -> "Clopen":
        """Intersection with the single cylinder of ``bits``."""
        return self.intersect(Clopen([bits]))


def intersect_all(clopens: Iterable[Clopen]) -> Clopen:
    """Intersection of a non-empty family of clopens."""
    result: Clopen | None = None
    for c in clopens:
        result = c if result is None else result.intersect(c)
    if result is None:
        raise ValueError("intersect_all needs at least one clopen")
    return result


# Operation-named wrappers kept as the stable public surface.

def canonicalize(strings: Iterable[str]) -> Clopen:
    return Clopen(strings)


def measure(c: Clopen) -> Dyadic:
    return c.measure()


def union(a: Clopen, b: Clopen) -> Clopen:
    return a.union(b)


def intersect(a: Clopen, b: Clopen) -> Clopen:
    return a.intersect(b)


def complement(a: Clopen, depth: int) -> Clopen:
    return a.complement(depth)


def subset(a: Clopen, b: Clopen) -> bool:
    return a.is_subset_of(b)


# ---------------------------------------------------------------------------
# pairing
# ---------------------------------------------------------------------------

def pair(i: int, s: int) -> int:
    """The diagonal pairing (i+s)(i+s+1)/2 + i."""
    if i < 0 or s < 0:
        raise ValueError("pair arguments must be non-negative")
    return (i + s) * (i + s + 1) // 2 + i


def unpair(n: int) -> tuple[int, int]:
    """Exact inverse of :func:`pair`."""
    if n < 0:
        raise ValueError("unpair argument must be non-negative")
    w = (math.isqrt(8 * n + 1) - 1) // 2
    i = n - w * (w + 1) // 2
    return i, w - i


def unpair3(n: int) -> tuple[int, int, int]:
    """Dovetail order over triples: unpair the first coordinate again."""
    a, t = unpair(n)
    i, m = unpair(a)
    return i, m, t


# ---------------------------------------------------------------------------
# bounded string searches
# ---------------------------------------------------------------------------

def first_extension_into(prefix: str, target: Clopen, max_len: int) -> str | None:
    """Least ``tau`` in length-lex order with [prefix + tau] inside ``target``.

    Returns the empty string when ``prefix`` is already covered, or None when
    no extension of length at most ``max_len`` fits.
    """
    if target.covers(prefix):
        return ""
    for c in target.cylinders:  # sorted by (len, lex): first hit is least
        if c.startswith(prefix) and len(c) <= max_len:
            return c[len(prefix):]
    return None


def first_free_string(
    min_len: int,
    max_len: int,
    covered: Clopen,
    pred: Callable[[str], bool] | None = None,
    scan_limit: int = 200_000,
) -> str:
    """First string in length-lex order whose cylinder avoids ``covered``.

    Searches lengths ``min_len..max_len``; an optional ``pred`` filters
    candidates (evaluated in order, bounded by ``scan_limit``).
    """
    free = covered.complement(max_len)
    scanned = 0
    for d in range(min_len, max_len + 1):
        cones = sorted(c for c in free.cylinders if len(c) <= d)
        for cone in cones:
            for sigma in extensions(cone, d):
                if pred is None or pred(sigma):
                    return sigma
                scanned += 1
                if scanned > scan_limit:
                    raise SearchExhaustedError(
                        f"free-string search exceeded {scan_limit} candidates")
    raise SearchExhaustedError(
        f"no free string of length in [{min_len}, {max_len}] outside {covered!r}")


def leftmost_uncovered(length: int, cones: Clopen) -> str | None:
    """Leftmost length-``length`` string whose cylinder is not inside ``cones``."""

    def walk(prefix: str) -> str | None:
        if cones.covers(prefix):
            return None
        if len(prefix) == length:
            return prefix
        return walk(prefix + "0") or walk(prefix + "1")

    return walk("")
