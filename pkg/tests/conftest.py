import numpy as np
import pytest

from ensemble_stability import ChainSpec, build_hamiltonian, diagonalize

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record_criterion():
    """Record one acceptance line; they are printed together at the end of the session."""

    def record(number: int, title: str, passed: bool, detail: str = "") -> None:
        status = "PASS" if passed else "FAIL"
        _ACCEPTANCE_LINES.append(f"[{status}] criterion {number:>2}: {title}" + (f" -- {detail}" if detail else ""))

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def eig4():
    return diagonalize(build_hamiltonian(ChainSpec(4)))


@pytest.fixture(scope="session")
def eig10():
    return diagonalize(build_hamiltonian(ChainSpec(10)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
