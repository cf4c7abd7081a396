"""Collects acceptance outcomes and prints one verdict line per criterion."""

import pytest

_verdicts: dict[str, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, title): acceptance criterion a test belongs to")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    cid, title = marker.args
    entry = _verdicts.setdefault(cid, {"title": title, "ok": True, "notes": []})
    failed = call.excinfo is not None
    entry["ok"] &= not failed
    for key, value in item.user_properties:
        if key == "measured":
            entry["notes"].append(("FAIL " if failed else "") + value)


@pytest.hookimpl(trylast=True)
def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_verdicts, key=lambda c: int(c[1:])):
        v = _verdicts[cid]
        status = "PASS" if v["ok"] else "FAIL"
        notes = "; ".join(v["notes"])
        terminalreporter.write_line(f"{cid} {status}  {v['title']}" + (f"  [{notes}]" if notes else ""))
