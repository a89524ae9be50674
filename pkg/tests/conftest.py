import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pathway_events.energy_model import load_dataset, shipped_dataset_path  # noqa: E402

DATA = Path(shipped_dataset_path()).parent


@pytest.fixture(scope="session")
def ds():
    return load_dataset(shipped_dataset_path())


@pytest.fixture(scope="session")
def manifest():
    return json.loads((DATA / "mini_be_manifest.json").read_text())


@pytest.fixture(scope="session")
def c_base(manifest):
    return manifest["c_base"]


@pytest.fixture(scope="session")
def raw_doc():
    return json.loads(Path(shipped_dataset_path()).read_text())


# acceptance verdicts, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
