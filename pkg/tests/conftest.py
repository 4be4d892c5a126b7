from __future__ import annotations

import pytest

from rkl.kernels import TruncationLadder, catalog_kernel


@pytest.fixture(scope="session")
def gauss():
    return catalog_kernel("gauss_bump", {"sigma": 1.0})


@pytest.fixture(scope="session")
def frh():
    return catalog_kernel("finite_rank_hermitian", {"mu": [0.8, 0.3]})


@pytest.fixture(scope="session")
def ladder8():
    return TruncationLadder.linear(8)


_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record and print one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        _CRITERIA[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
