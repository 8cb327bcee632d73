"""Prints one PASS/FAIL line per acceptance criterion at the end of the run."""

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            item.user_properties.append(("criterion", tuple(marker.args)))


def pytest_runtest_logreport(report):
    for name, value in report.user_properties:
        if name != "criterion":
            continue
        if report.failed or (report.when == "call" and report.skipped):
            _RESULTS[value] = "FAIL"
        else:
            _RESULTS.setdefault(value, "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), status in sorted(_RESULTS.items()):
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {title}")
