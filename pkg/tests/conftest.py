from importlib import resources

import pytest

from sizelab.problem import load_problem, parse_problem

PROBLEMS = resources.files("sizelab") / "problems"
SHIPPED = sorted(p.name[:-5] for p in PROBLEMS.iterdir() if p.name.endswith(".strs"))


def problem_path(name):
    return str(PROBLEMS / f"{name}.strs")


def load(name):
    return load_problem(problem_path(name))


@pytest.fixture(scope="session")
def div():
    return load("div")


@pytest.fixture(scope="session")
def brouwer():
    return load("brouwer")


@pytest.fixture(scope="session")
def plus_f():
    return load("plusF")


@pytest.fixture(scope="session")
def lists():
    return load("lists")


@pytest.fixture
def parse():
    return parse_problem


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
