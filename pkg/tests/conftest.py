import os
import tempfile

import pytest

os.environ.setdefault("ZETA_LAB_LOG_DIR", os.path.join(tempfile.gettempdir(), "zeta_lab_test_logs"))

from src.utils.parallel import get_threads, set_threads  # noqa: E402


@pytest.fixture
def restore_threads():
    threads = get_threads()
    yield
    set_threads(threads)
