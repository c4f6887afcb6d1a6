import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

from sqzgrowth.kernels import available_backends, load_backend  # noqa: E402

_RESULTS = {}

settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")


@pytest.fixture(params=available_backends())
def backend(request):
    return load_backend(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    key = marker.args[0]
    text = marker.args[1] if len(marker.args) > 1 else ""
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        if hasattr(report, "wasxfail"):
            status = "XFAIL" if report.skipped else "XPASS"
        elif report.passed:
            status = "PASS"
        elif report.skipped:
            status = "SKIP"
        else:
            status = "FAIL"
        entry = _RESULTS.setdefault(key, {"text": text, "statuses": []})
        entry["statuses"].append(status)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    order = {"FAIL": 0, "XPASS": 1, "SKIP": 2, "XFAIL": 3, "PASS": 4}
    for key in sorted(_RESULTS):
        entry = _RESULTS[key]
        status = min(entry["statuses"], key=order.__getitem__)
        parts = ", ".join(f"{n} {s}" for s, n in sorted(
            ((s, entry["statuses"].count(s)) for s in set(entry["statuses"])),
            key=lambda sn: order[sn[0]]))
        terminalreporter.write_line(f"{key:5s} {status:5s}  {entry['text']}  [{parts}]")
