import sys
from importlib import resources
from pathlib import Path

import pytest

from pathxai.demos import load_demonstrations_file
from pathxai.graph import Link, build_topology, load_topology

DATA = Path(str(resources.files("pathxai") / "data"))


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def t1():
    return load_topology(DATA / "t1_training.json")


@pytest.fixture(scope="session")
def t1b():
    return load_topology(DATA / "t1b_training.json")


@pytest.fixture(scope="session")
def t2():
    return load_topology(DATA / "t2_transfer.json")


@pytest.fixture(scope="session")
def corpus():
    return load_demonstrations_file(DATA / "corpus_fixture.json")


@pytest.fixture
def line_ab():
    return build_topology(["A", "B"], [Link("A", "B")], label="line")


@pytest.fixture
def line_abc():
    return build_topology(["A", "B", "C"], [Link("A", "B"), Link("B", "C")], label="line3")


@pytest.fixture
def triangle():
    return build_topology(["A", "B", "C"], [Link("A", "B"), Link("B", "C"), Link("A", "C")], label="tri")


@pytest.fixture
def square():
    return build_topology(
        ["A", "B", "C", "D"],
        [Link("A", "B"), Link("B", "C"), Link("C", "D"), Link("D", "A")],
        label="square",
    )


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None)
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for _, _, line in sorted(verdicts):
            terminalreporter.write_line(line)
