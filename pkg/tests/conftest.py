import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from siteforge.catalog import build_catalog, extract_adjacency, shipped_designs

DESK_H, DESK_W = 12, 8


@pytest.fixture(scope="session")
def catalog():
    return build_catalog()


@pytest.fixture(scope="session")
def designs(catalog):
    return shipped_designs(catalog)


@pytest.fixture(scope="session")
def rules(catalog, designs):
    return extract_adjacency(catalog, designs)
