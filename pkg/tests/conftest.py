import numpy as np
import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20231015)


@pytest.fixture
def acceptance():
    """Record one ``ACCEPTANCE C<n> PASS|FAIL ...`` line and return the verdict."""

    def record(tag, passed, detail):
        line = f"ACCEPTANCE {tag} {'PASS' if passed else 'FAIL'} {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
