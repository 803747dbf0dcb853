import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mslab.hgamma import SpacePair  # noqa: E402

import golden  # noqa: E402

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path_factory, monkeypatch):
    monkeypatch.setenv("MSLAB_CACHE_DIR", str(tmp_path_factory.getbasetemp() / "mslab-cache"))


@pytest.fixture(scope="session")
def golden_space():
    return SpacePair(golden.GAMMAS, (1.0,) * len(golden.GAMMAS))


@pytest.fixture(scope="session")
def small_space():
    return SpacePair(golden.SMALL_GAMMAS, (1.0, 1.0, 1.0))


@pytest.fixture(scope="session")
def configs_dir():
    return CONFIGS
