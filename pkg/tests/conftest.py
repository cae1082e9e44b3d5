import functools

import pytest

from leapsim.config import load_default
from leapsim.jump import simulate_jump

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def config():
    return load_default()


@pytest.fixture(scope="session")
def design(config):
    return config.design


@pytest.fixture(scope="session")
def run(config):
    """Cached reference runs keyed by scenario name from the shipped config."""

    @functools.lru_cache(maxsize=None)
    def _run(name: str):
        return simulate_jump(config.design, config.scenario(name))

    return _run


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
