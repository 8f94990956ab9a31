import pytest

from cacc_sim.config import preset
from cacc_sim.scenario import run

# Closed-loop runs are shared across modules; each preset is simulated once per session.
_CACHE = {}


def simulate(name):
    if name not in _CACHE:
        _CACHE[name] = run(preset(name))
    return _CACHE[name]


@pytest.fixture(scope="session")
def sim():
    return simulate


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if not mod or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.verdict_line(number))
