import os

import pytest
from hypothesis import HealthCheck, settings

# Property tests run at least a thousand cases each.
settings.register_profile("obliq", max_examples=1000, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("obliq")

LONG = os.environ.get("OBLIQ_LONG") == "1"


def pytest_collection_modifyitems(config, items):
    if LONG:
        return
    skip = pytest.mark.skip(reason="long run; set OBLIQ_LONG=1")
    for item in items:
        if "longrun" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def jit_warm():
    """Compile the numba kernels once so timed checks measure the search, not compilation."""
    from obliq.bound import verify_ratio
    from obliq.stepfn import GhPair
    verify_ratio(GhPair.from_values((0.8, 0.6), (0.6, 0.8)))
    return True


_CRITERIA: dict[int, list[tuple[str, str]]] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.split("::")[-1]
    if not report.nodeid.startswith("tests/test_acceptance.py") or not name.startswith("test_criterion_"):
        return
    k = int(name.split("_")[2])
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA.setdefault(k, []).append((name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        runs = _CRITERIA[k]
        failed = [n for n, o in runs if o == "failed"]
        skipped = [n for n, o in runs if o == "skipped"]
        passed = len(runs) - len(failed) - len(skipped)
        verdict = "FAIL" if failed else ("PASS" if passed else "SKIP")
        line = f"criterion {k}: {verdict}  ({passed} passed, {len(failed)} failed, {len(skipped)} skipped)"
        if failed:
            line += "  failing: " + ", ".join(failed)
        tr.write_line(line)
