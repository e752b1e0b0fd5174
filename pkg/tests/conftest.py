import numpy as np
import pytest

from layoutkie.data import GeneratorConfig, default_vocab, generate

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def vocab():
    return default_vocab()


@pytest.fixture(scope="session")
def small_corpus():
    """A handful of synthetic documents shared by read-only tests."""
    return generate(GeneratorConfig(seed=123), 8)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
