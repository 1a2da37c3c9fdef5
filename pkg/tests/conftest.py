"""Per-criterion pass/fail summary for the acceptance suite."""

import pytest

CRITERIA = {
    1: "oracle region equivalence",
    2: "LP equivalence (rho and margin)",
    3: "worked golden value rho = 1/2",
    4: "region counts",
    5: "performance and dimension independence",
    6: "sparsity-aware noise certifies larger deletion radii",
    7: "soundness against exhaustive ball checks",
    8: "confidence bounds",
    9: "determinism of sample + certify",
}

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_logreport(report):
    n = getattr(report, "criterion", None)
    if n is None:
        return
    failed = report.failed or (report.when == "call" and report.skipped)
    prev = _outcomes.get(n, True)
    _outcomes[n] = prev and not failed


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, desc in CRITERIA.items():
        if n not in _outcomes:
            continue
        status = "PASS" if _outcomes[n] else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {status}  {desc}")
