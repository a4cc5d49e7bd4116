"""Shared fixtures: session-cached factories for chains and module builders.

Deep chains (M = 22) are the expensive objects in this suite, so all test
files draw them from one session-wide cache keyed by (weight coords, q, M).
Requesting the same key twice returns the identical object.
"""

import pytest

from qcartan import sps
from qcartan.qcore import Weight


@pytest.fixture(scope="session")
def chains():
    """Factory: chains(coords, q, M) -> CartanChain, cached per session."""
    cache = {}

    def build(coords, q, M):
        key = (tuple(coords), float(q), int(M))
        if key not in cache:
            cache[key] = sps.CartanChain(Weight(key[0]), key[1], key[2])
        return cache[key]

    return build


@pytest.fixture(scope="session")
def builders():
    """Factory: builders(N, q) -> GeneralWeightBuilder, cached per session."""
    cache = {}

    def get(N, q):
        key = (int(N), float(q))
        if key not in cache:
            cache[key] = sps.GeneralWeightBuilder(key[0], key[1])
        return cache[key]

    return get
