from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ailab.scenario import bundled_scenario_names, load_bundled


@pytest.fixture(scope="session")
def bundled_docs():
    return {name: load_bundled(name) for name in bundled_scenario_names()}


@pytest.fixture(scope="session")
def search_fixtures(bundled_docs):
    return {
        name: doc for name, doc in bundled_docs.items() if doc.kind == "search"
    }


@pytest.fixture(scope="session")
def default_deck(bundled_docs):
    return bundled_docs["red_black_default.deck"].spec


@pytest.fixture(scope="session")
def grid3(bundled_docs):
    return bundled_docs["grid3x3"].spec


@pytest.fixture(scope="session")
def grid4(bundled_docs):
    return bundled_docs["grid4x4"].spec


@pytest.fixture(scope="session")
def maps(bundled_docs):
    return {
        "country_a.map": bundled_docs["country_a.map"].spec,
        "country_b.map": bundled_docs["country_b.map"].spec,
    }
