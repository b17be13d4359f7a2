import pytest

from deformed_ldp import AtomicMeasure

ACCEPTANCE_LINES = []


@pytest.fixture
def record():
    """Collect one PASS/FAIL line per acceptance criterion."""
    def _record(label, ok, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        print(ACCEPTANCE_LINES[-1])
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def dirac0():
    return AtomicMeasure.dirac(0.0)


@pytest.fixture
def two_atoms():
    return AtomicMeasure([(-1.0, 0.5), (1.0, 0.5)])
