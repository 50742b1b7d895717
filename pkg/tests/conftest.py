import numpy as np
import pytest

from iqwalk.graph import build_graph, generate
from iqwalk.state import PureState, padding_mask

BULL_EDGES = [(0, 1), (0, 3), (0, 4), (2, 4), (3, 4)]


@pytest.fixture
def bull():
    return build_graph(BULL_EDGES, 5, name="bull")


@pytest.fixture
def cube():
    return generate("cube")


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


def random_state(graph, rng):
    """Normalized random state respecting the zero-padding invariant."""
    state = PureState.zeros(graph)
    mask = padding_mask(graph)
    shape = state.amplitudes[mask].shape
    state.amplitudes[mask] = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    state.amplitudes /= np.linalg.norm(state.amplitudes)
    return state


# acceptance criteria: one summary line per criterion after the run
_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (rep.when != "call" and not rep.failed):
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "details": []})
    entry["ok"] &= rep.passed
    entry["details"] += [f"{k}={v}" for k, v in rep.user_properties]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        status = "PASS" if entry["ok"] else "FAIL"
        details = ", ".join(entry["details"])
        terminalreporter.write_line(f"criterion {number:2d} {status}  {entry['title']}  [{details}]")
