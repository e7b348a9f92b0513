"""Per-criterion PASS/FAIL summary for the acceptance suite."""

from collections import defaultdict

_results = defaultdict(list)
_titles = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = report.user_properties and dict(report.user_properties).get("criterion")
    if crit:
        n, title = crit
        _titles[n] = title
        _results[n].append((report.nodeid.split("::")[-1], report.outcome))


def pytest_runtest_setup(item):
    mark = item.get_closest_marker("criterion")
    if mark:
        item.user_properties.append(("criterion", (mark.args[0], mark.args[1])))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_results):
        items = _results[n]
        ok = all(o == "passed" for _, o in items)
        tr.write_line(f"criterion {n} ({_titles[n]}): {'PASS' if ok else 'FAIL'}")
        for name, o in items:
            if o != "passed":
                tr.write_line(f"    {o.upper()}: {name}")
