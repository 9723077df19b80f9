import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
SRC = ROOT / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

from rlbwtlab.config import ENV_KEYS  # noqa: E402

FIG1_RAW = "bbabaababababaababa$"


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch):
    """Keep RLBWT_* variables from the caller's shell out of the tests."""
    for key in ENV_KEYS.values():
        monkeypatch.delenv(key, raising=False)


@pytest.fixture
def fig1_file(tmp_path: Path) -> Path:
    path = tmp_path / "fig1.txt"
    path.write_text(FIG1_RAW)
    return path
