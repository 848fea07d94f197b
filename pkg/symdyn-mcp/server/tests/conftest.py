"""Shared fixtures for the symdyn test suite."""

import os
import sys
from pathlib import Path

import pytest

# Server modules import each other by bare name
sys.path.insert(0, str(Path(__file__).parent.parent))

from distal import make_seed
from measures import periodic
from model_manager import get_model_manager
from settings import get_settings
from subshifts import TransitionSystem

DATA_DIR = Path(__file__).parent.parent.parent / "data"


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Every test sees default settings and an empty model cache."""
    for name in list(os.environ):
        if name.startswith("SYMDYN_"):
            monkeypatch.delenv(name, raising=False)
    get_settings.cache_clear()
    get_model_manager().clear_cache()
    yield
    get_settings.cache_clear()
    get_model_manager().clear_cache()


@pytest.fixture
def full2():
    return TransitionSystem.full(2)


@pytest.fixture
def golden_mean():
    return TransitionSystem.golden_mean()


@pytest.fixture
def two_cycle():
    return TransitionSystem([[0, 1], [1, 0]])


@pytest.fixture
def level_seed():
    """Seed with nu1 = periodic(01), partner periodic(011)."""
    return make_seed(periodic("01", 2), periodic("011", 2))


@pytest.fixture
def data_dir():
    return DATA_DIR
