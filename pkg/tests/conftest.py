import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from privtm.textformat import parse_history  # noqa: E402


def H(text: str) -> tuple:
    """History from compact ``thread kind [args]`` lines; ids are positions."""
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    return parse_history("".join(f"{i} {ln}\n" for i, ln in enumerate(lines, 1)))


@pytest.fixture
def hist():
    return H
