import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def saturn_text():
    return (FIXTURES / "saturn.svg").read_text()


@pytest.fixture(scope="session")
def replay_dir():
    return FIXTURES / "replay"


@pytest.fixture(scope="session")
def replay_texts(replay_dir):
    """Full response text of every replay fixture, keyed by file stem."""
    out = {}
    for path in sorted(replay_dir.glob("*.json")):
        out[path.stem] = "".join(json.loads(path.read_text())["chunks"])
    return out


@pytest.fixture()
def saturn_index(saturn_text):
    from keyframer import svg_core

    return svg_core.element_index(svg_core.parse_svg(saturn_text))
