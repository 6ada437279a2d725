import pytest

from semeq.gridworld import GridConfig
from semeq.language import synthesize_language
from semeq.transport import build_codebook


@pytest.fixture(scope="session")
def grid():
    return GridConfig()


@pytest.fixture(scope="session")
def lang_src(grid):
    return synthesize_language(grid, seed=2)


@pytest.fixture(scope="session")
def lang_tgt(grid):
    return synthesize_language(grid, seed=3)


@pytest.fixture(scope="session")
def codebook(lang_src, lang_tgt):
    # Shared across suites: fitting all 16 atom-pair maps dominates runtime.
    return build_codebook(lang_src, lang_tgt)
