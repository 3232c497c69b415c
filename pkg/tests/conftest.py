import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fixtures import cupboard_groups, cupboard_registry  # noqa: E402


@pytest.fixture(scope="session")
def registry():
    return cupboard_registry()


@pytest.fixture(scope="session")
def cupboard_store(registry):
    return cupboard_groups(registry)


@pytest.fixture(scope="session")
def cupboard_snapshot(registry, cupboard_store):
    from dspace.index import build_index

    return build_index(cupboard_store, registry)
