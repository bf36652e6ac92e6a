import numpy as np
import pytest

_GATE_KEY = pytest.StashKey[dict]()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def gate(request):
    """Record one PASS/FAIL line per acceptance criterion and return the verdict."""
    lines = request.config.stash.setdefault(_GATE_KEY, {})

    def record(number: int, ok: bool, detail: str) -> bool:
        lines[number] = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail}"
        print(lines[number])
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_GATE_KEY, {})
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
