"""Acceptance bookkeeping: tests marked ``criterion(n)`` roll up into one PASS/FAIL line each."""

import pytest

CRITERIA = {
    1: "contraction suite",
    2: "fixed-point suite",
    3: "prox-form equivalence",
    4: "hand-recursion oracle",
    5: "rate measurement",
    6: "saddle suite",
    7: "cross-solver agreement",
    8: "gamma_eta certificate",
    9: "H-metric oracle",
}

_outcomes = pytest.StashKey()
_notes = pytest.StashKey()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion exercised by the test")
    config.stash[_outcomes] = {}
    config.stash[_notes] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.skipped:
        return
    if rep.when == "call" or rep.failed:
        item.config.stash[_outcomes].setdefault(marker.args[0], []).append(rep.passed)


@pytest.fixture
def note(request):
    """``note(text)`` attaches a detail line to the test's criterion in the summary."""
    marker = request.node.get_closest_marker("criterion")

    def add(text):
        request.config.stash[_notes].setdefault(marker.args[0], []).append(text)

    return add


def pytest_terminal_summary(terminalreporter, config):
    outcomes = config.stash[_outcomes]
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        if n not in outcomes:
            terminalreporter.write_line(f"criterion {n} ({title}): NOT RUN")
            continue
        status = "PASS" if all(outcomes[n]) else "FAIL"
        terminalreporter.write_line(f"criterion {n} ({title}): {status}")
        for text in config.stash[_notes].get(n, []):
            terminalreporter.write_line(f"    {text}")
