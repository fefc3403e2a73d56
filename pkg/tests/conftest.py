"""Collects outcomes of tests marked ``criterion(n, text)`` and prints one line per criterion."""

_criteria = {}   # n -> text
_owners = {}     # nodeid -> n
_status = {}     # n -> "PASS" | "FAIL" | "SKIP"

_RANK = {"PASS": 0, "SKIP": 1, "FAIL": 2}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is None:
            continue
        n, text = mark.args
        _criteria[n] = text
        _owners[item.nodeid] = n


def _record(n, outcome):
    prev = _status.get(n)
    if prev is None or _RANK[outcome] > _RANK[prev]:
        _status[n] = outcome


def pytest_runtest_logreport(report):
    n = _owners.get(report.nodeid)
    if n is None:
        return
    if report.failed:
        _record(n, "FAIL")
    elif report.skipped:
        _record(n, "SKIP")
    elif report.when == "call":
        _record(n, "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        status = _status.get(n, "NOT RUN")
        terminalreporter.write_line(f"criterion {n:>2}: {status:<7} {_criteria[n]}")
