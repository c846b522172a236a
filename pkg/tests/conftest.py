from __future__ import annotations

import numpy as np
import pytest

from randmax.spaces import Kind, Space

SMALL_SPACES = [
    Space(Kind.TREE, 2),
    Space(Kind.TREE, 3),
    Space(Kind.TREE, 4),
    Space(Kind.DAG, 3, 2),
    Space(Kind.DAG, 4, 2),
    Space(Kind.SET, 4, 2),
    Space(Kind.SET, 6, 3),
]

EXPERIMENT_SCALE = [Space(Kind.TREE, 6), Space(Kind.DAG, 5, 2), Space(Kind.SET, 15, 4)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def space_id(space: Space) -> str:
    return str(space).replace(" ", "")


# --- acceptance summary -------------------------------------------------------

_OUTCOMES: dict[int, list[str]] = {}
_NOTES: dict[int, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.fixture
def note(request):
    """Attach a detail line to the acceptance summary of the current criterion."""
    marker = request.node.get_closest_marker("criterion")

    def add(text: str):
        if marker is not None:
            _NOTES.setdefault(marker.args[0], []).append(text)
        print(text)

    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _OUTCOMES.setdefault(marker.args[0], []).append("PASS" if rep.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_OUTCOMES):
        status = "PASS" if all(o == "PASS" for o in _OUTCOMES[n]) else "FAIL"
        tr.write_line(f"criterion {n}: {status} ({_OUTCOMES[n].count('PASS')}/{len(_OUTCOMES[n])} tests)")
        for line in _NOTES.get(n, []):
            tr.write_line(f"    {line}")
