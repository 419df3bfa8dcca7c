import numpy as np
import pytest

ACCEPTANCE_FILE = "test_acceptance.py"
_acceptance_results: list[tuple[str, str]] = []


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # First numba call JIT-compiles; warm up so timed checks measure the
    # algorithms, not compilation.
    from cip.kernels import active_backend, resize_bilinear, row_softmax_colmean

    if active_backend() == "numba":
        resize_bilinear(np.zeros((4, 4, 3), np.uint8), 2, 3)
        row_softmax_colmean(np.zeros((2, 3)))


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    if ACCEPTANCE_FILE not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    _acceptance_results.append((name, report.outcome.upper()))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, outcome in _acceptance_results:
        mark = "PASS" if outcome == "PASSED" else outcome
        terminalreporter.write_line(f"{mark}  {name}")
