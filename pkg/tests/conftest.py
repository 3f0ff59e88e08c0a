import functools

import pytest

from stcode.analysis import analyze
from stcode.lattice import LatticeSpec, build_code_lattice

ACCEPTANCE_LINES: list[str] = []


@functools.lru_cache(maxsize=None)
def lattice(dims, boundary="Periodic3Torus", N=2):
    return build_code_lattice(LatticeSpec(tuple(dims), boundary, N))


@functools.lru_cache(maxsize=None)
def structure(dims, boundary="Periodic3Torus", N=2):
    return analyze(lattice(dims, boundary, N))


@pytest.fixture
def report():
    """Record one acceptance line; printed in the terminal summary."""
    def _report(name: str, ok: bool, detail: str = ""):
        line = f"{name}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
        print(line)
        ACCEPTANCE_LINES.append(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
