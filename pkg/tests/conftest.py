import pytest

from expertmatch.corpus import load_corpus
from expertmatch.embeddings import read_embedding_file
from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent / "data"

# criterion name -> outcome, filled by the makereport hook below and dumped
# as one line per criterion at the end of the run
_ACCEPTANCE: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "acceptance(name): marks a test as one acceptance criterion; "
        "its pass/fail state is printed in the terminal summary",
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    name = marker.args[0]
    if report.when == "call":
        _ACCEPTANCE[name] = report.outcome
    elif report.when == "setup" and report.outcome != "passed":
        _ACCEPTANCE[name] = report.outcome  # skipped or errored before the call


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        outcome = _ACCEPTANCE[name]
        terminalreporter.write_line(f"[{outcome.upper():>7s}] {name}")


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def synth_corpus():
    return load_corpus(DATA_DIR / "synth_corpus")


@pytest.fixture(scope="session")
def synth_embeddings():
    return read_embedding_file(DATA_DIR / "embeddings_synth.jsonl")
