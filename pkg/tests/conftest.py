import numpy as np
import pytest

ACCEPTANCE_RESULTS: dict[int, tuple[str, bool, str]] = {}


def record(number: int, title: str, passed: bool, detail: str = ""):
    ACCEPTANCE_RESULTS[number] = (title, bool(passed), detail)
    print(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        title, passed, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {title}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
