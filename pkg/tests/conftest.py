import pytest

_criteria: dict[int, list] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or (report.when != "call" and not report.failed):
        return
    number, title = mark.args
    entry = _criteria.setdefault(number, [title, True, ""])
    if report.failed:
        entry[1] = False
        if not entry[2] and call.excinfo is not None:
            entry[2] = str(call.excinfo.value).splitlines()[0][:100]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok, why = _criteria[number]
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  ({why})" if why else ""))
