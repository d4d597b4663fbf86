import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile("default", deadline=None, max_examples=40)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=5)
hypothesis.settings.load_profile("default")

np.seterr(all="raise", under="ignore")

_criteria = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = [k for k in report.keywords if k.startswith("criterion_")]
    if marker:
        k = int(marker[0].split("_")[1])
        ok = report.outcome == "passed"
        _criteria[k] = _criteria.get(k, True) and ok


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_criteria):
        terminalreporter.write_line(f"criterion {k}: {'PASS' if _criteria[k] else 'FAIL'}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
