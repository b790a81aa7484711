import pytest

_RESULTS: dict[int, tuple[bool, str]] = {}


class CriterionLog:
    def __init__(self, number: int):
        self.number = number
        self.detail = ""

    def note(self, text: str) -> None:
        self.detail = text


@pytest.fixture
def criterion(request):
    """Record a PASS/FAIL line for the acceptance criterion given by the test's mark."""
    mark = request.node.get_closest_marker("criterion")
    log = CriterionLog(mark.args[0])
    yield log
    rep = getattr(request.node, "rep_call", None)
    ok = rep is not None and rep.passed
    _RESULTS[log.number] = (ok, log.detail)
    print(f"criterion {log.number}: {'PASS' if ok else 'FAIL'} {log.detail}")


@pytest.hookimpl(wrapper=True, tryfirst=True)
def pytest_runtest_makereport(item, call):
    rep = yield
    if rep.when == "call":
        item.rep_call = rep
    return rep


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        ok, detail = _RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
