import numpy as np
import pytest

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


class CriterionRecorder:
    def __init__(self, name):
        self.name = name
        self.details = []

    def note(self, text):
        self.details.append(text)

    def check(self, ok, text):
        self.details.append(("ok   " if ok else "FAIL ") + text)
        return ok


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion and print a PASS/FAIL line for it."""
    rec = CriterionRecorder(request.node.name)
    yield rec
    failed = getattr(request.node, "rep_call", None)
    status = "FAIL" if failed is None or failed.failed else "PASS"
    line = f"[{status}] {rec.name}"
    if rec.details:
        line += "\n" + "\n".join(f"        {d}" for d in rec.details)
    _ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
