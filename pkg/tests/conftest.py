"""Shared test configuration.

Uses a temporary SQLite database for each test session so CLI runs recorded
by tests don't land in the real run ledger.
"""

import os
import tempfile

import pytest

# Use a temporary database for tests
_test_db_dir = tempfile.mkdtemp()
_test_db_path = os.path.join(_test_db_dir, "test_oscint.db")
os.environ["OSCINT_DB_PATH"] = _test_db_path
os.environ.pop("OSCINT_TOL", None)
os.environ.pop("OSCINT_WORKERS", None)


@pytest.fixture(autouse=True)
def _reset_settings_cache():
    """Clear cached settings and undo any OSCINT_* vars a test (or the CLI) set."""
    from src.config import get_settings

    saved = {k: v for k, v in os.environ.items() if k.startswith("OSCINT_")}
    get_settings.cache_clear()
    yield
    for key in [k for k in os.environ if k.startswith("OSCINT_")]:
        if key not in saved:
            del os.environ[key]
    os.environ.update(saved)
    get_settings.cache_clear()


@pytest.fixture(autouse=True)
def _reset_storage():
    """Reset the SQLite ledger between tests to prevent cross-contamination."""
    import src.storage as storage_mod

    test_db = os.path.join(_test_db_dir, f"test_{os.getpid()}.db")
    if storage_mod._storage is None:
        storage_mod._storage = storage_mod.SQLiteStorage(test_db)
    else:
        storage_mod._storage.clear_all()
    yield
    storage_mod._storage.clear_all()


@pytest.fixture
def tmp_out():
    """A fresh temporary directory for sweep output."""
    return tempfile.mkdtemp()
