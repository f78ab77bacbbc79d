import pytest

_RESULTS: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number = mark.args[0]
    title = (item.function.__doc__ or item.name).strip().splitlines()[0]
    prev = _RESULTS.get(number, ("PASS", title))[0]
    if report.failed:
        _RESULTS[number] = ("FAIL", title)
    elif report.skipped and report.when != "teardown":
        _RESULTS[number] = ("SKIP" if prev == "PASS" else prev, title)
    elif number not in _RESULTS:
        _RESULTS[number] = ("PASS", title)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_RESULTS):
        status, title = _RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}  {status}  {title}")
