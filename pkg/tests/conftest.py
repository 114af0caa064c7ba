import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from premiseguard import EmbeddingIndex, HashingEmbedder, ScriptedChat  # noqa: E402
from premiseguard.synthetic import load_bundled  # noqa: E402


@pytest.fixture(scope="session")
def bundle():
    kg, ds, transcripts = load_bundled()
    return kg, ds, transcripts


@pytest.fixture(scope="session")
def bundle_index(bundle):
    return EmbeddingIndex.build(bundle[0], HashingEmbedder())


@pytest.fixture
def scripted(bundle):
    return ScriptedChat(bundle[2])


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
