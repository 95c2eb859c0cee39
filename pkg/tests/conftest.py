import numpy as np
import pytest

from gogar_rl import kernels


@pytest.fixture(params=kernels.available())
def backend(request):
    """Run the test once per importable kernel backend."""
    previous = kernels.use(request.param)
    yield request.param
    kernels.use(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """``criterion(n, title, ok, detail)`` records one acceptance verdict and asserts it."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def report(n, title, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {title}" + (f" [{detail}]" if detail else "")
        lines.append((n, line))
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
