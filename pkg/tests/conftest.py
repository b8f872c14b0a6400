import random

import pytest

from hybridfl.thpaillier import deal_keys


@pytest.fixture(scope="session")
def key_3of5():
    """512-bit dealing, 3-of-5, shared across the suite (dealing is slow)."""
    return deal_keys(512, 5, 3, rng_seed=1009)


@pytest.fixture(scope="session")
def key_2of3():
    return deal_keys(512, 3, 2, rng_seed=1013)


@pytest.fixture(scope="session")
def small_key_1of10():
    """256-bit dealing with a single-share quorum, for fast protocol tests."""
    return deal_keys(256, 10, 1, rng_seed=1021)


@pytest.fixture()
def rng():
    return random.Random(0xFEED)
