import pytest

# nodeid -> {"label", "detail", "passed"}
_ACCEPTANCE = {}


@pytest.fixture
def verdict(request):
    """Record the summary line of an acceptance criterion.

    Call ``verdict(label, detail)`` as soon as the label is known and again
    with measured values; the line reads FAIL unless the test body passes.
    """
    entry = _ACCEPTANCE.setdefault(
        request.node.nodeid, {"label": request.node.name, "detail": "", "passed": False}
    )

    def record(label, detail=""):
        entry["label"] = label
        entry["detail"] = detail

    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and item.nodeid in _ACCEPTANCE:
        _ACCEPTANCE[item.nodeid]["passed"] = rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for entry in _ACCEPTANCE.values():
        line = f"{'PASS' if entry['passed'] else 'FAIL'}  {entry['label']}"
        if entry["detail"]:
            line += f"  [{entry['detail']}]"
        terminalreporter.write_line(line)
