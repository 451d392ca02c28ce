"""Shared fixtures for the test suite."""

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from modules.hopf import critical_point, cubic_profile, sech2_profile  # noqa: E402
from utils import run_cache  # noqa: E402


@pytest.fixture(scope="session")
def sech2():
    return sech2_profile()


@pytest.fixture(scope="session")
def sech2_cp(sech2):
    return critical_point(sech2)


@pytest.fixture(scope="session")
def cubic():
    return cubic_profile(1.0, 0.0)


@pytest.fixture(scope="session")
def hm_solution():
    return run_cache.fetch_hastings_mcleod()


@pytest.fixture(scope="session")
def edges_04(sech2):
    return run_cache.fetch_edges(0.4, sech2)


@pytest.fixture(scope="session")
def zone_04(sech2):
    return run_cache.fetch_zone(0.4, sech2, Nc=64)

