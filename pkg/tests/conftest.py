import sys
from importlib import resources
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ahp.document import parse_document  # noqa: E402


def load_model(name: str):
    text = (resources.files("ahp") / "models" / f"{name}.ahp").read_text(encoding="utf-8")
    return parse_document(text)


@pytest.fixture(scope="session")
def lambda_doc():
    return load_model("lambda")


@pytest.fixture(scope="session")
def sec_doc():
    return load_model("securitisation")


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
