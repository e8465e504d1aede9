import os
from pathlib import Path

import pytest


def pytest_configure(config):
    # the 10^6-coefficient tables are shared between runs
    os.environ.setdefault("SCV_CACHE_DIR", str(Path.home() / ".cache" / "scv"))


@pytest.fixture
def tmp_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("SCV_CACHE_DIR", str(tmp_path / "cache"))
    return tmp_path / "cache"
