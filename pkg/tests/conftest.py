import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, name): acceptance criterion a test checks")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "SKIP" if rep.skipped else ("PASS" if rep.passed else "FAIL")
        _RESULTS.setdefault((str(mark.args[0]), mark.args[1]), []).append(status)


def _summary(statuses):
    if "FAIL" in statuses:
        return "FAIL"
    return "PASS" if "PASS" in statuses else "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), statuses in sorted(_RESULTS.items(), key=lambda kv: (int(kv[0][0].split("-")[0]), kv[0][0])):
        terminalreporter.write_line(f"criterion {num}: {_summary(statuses)}  {name}")
