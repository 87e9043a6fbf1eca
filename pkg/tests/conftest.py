"""Per-criterion reporting for the acceptance suite.

Tests marked ``@pytest.mark.criterion(n, "title")`` are grouped by n.  At the
end of the session one line per criterion is printed: PASS only if every
test of that criterion passed, with the summed wall time of setup and call.
"""
import time

import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion the test belongs to")


def _criterion(item):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return None
    return mark.args[0], mark.args[1] if len(mark.args) > 1 else ""


def _entry(n, title):
    entry = _RESULTS.setdefault(n, {"title": title, "ok": True, "seconds": 0.0, "failed": []})
    if title and not entry["title"]:
        entry["title"] = title
    return entry


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_setup(item):
    # fixture setup (shared genera, say) counts toward the criterion's wall time
    start = time.perf_counter()
    yield
    info = _criterion(item)
    if info is not None:
        _entry(*info)["seconds"] += time.perf_counter() - start


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_call(item):
    start = time.perf_counter()
    outcome = yield
    info = _criterion(item)
    if info is None:
        return
    entry = _entry(*info)
    entry["seconds"] += time.perf_counter() - start
    if outcome.excinfo is not None:
        entry["ok"] = False
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        e = _RESULTS[n]
        status = "PASS" if e["ok"] else "FAIL"
        line = f"criterion {n:2d}: {status}  {e['seconds']:7.2f}s  {e['title']}"
        if e["failed"]:
            line += f"  [failed: {', '.join(e['failed'])}]"
        terminalreporter.write_line(line)
