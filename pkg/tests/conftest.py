from __future__ import annotations

import pytest

from cantorlab import bundled_scenario
from cantorlab.enumeration import (
    Scenario,
    descending_chain,
    load_scenario,
    universal_sum,
    validate_scenario,
)

DEPTH = 8
LEAVES = 1 << DEPTH
FULL_MASK = (1 << LEAVES) - 1


def leaf_mask(strings, depth: int = DEPTH) -> int:
    """Bitset-of-leaves oracle: bit k set iff the depth-`depth` leaf with
    binary expansion k is covered by some cylinder."""
    mask = 0
    for s in strings:
        gap = depth - len(s)
        lo = int(s, 2) << gap if s else 0
        width = 1 << gap
        mask |= ((1 << width) - 1) << lo
    return mask


@pytest.fixture(scope="session")
def main_scenario() -> Scenario:
    sc = load_scenario(bundled_scenario("main"))
    validate_scenario(sc)
    return sc


@pytest.fixture(scope="session")
def deep_scenario() -> Scenario:
    sc = load_scenario(bundled_scenario("deep"))
    validate_scenario(sc)
    return sc


@pytest.fixture(scope="session")
def surrogate(main_scenario):
    return universal_sum(main_scenario)


@pytest.fixture(scope="session")
def chain(surrogate):
    return descending_chain(surrogate)
