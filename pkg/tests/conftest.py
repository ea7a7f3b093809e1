import numpy as np
import pytest

from lnckit import Ball, HPolytope, LinearMap, Suspension


def unit_square() -> HPolytope:
    return HPolytope(np.vstack([np.eye(2), -np.eye(2)]), [1.0, 1.0, 0.0, 0.0])


def cone() -> Suspension:
    return Suspension(Ball([1.0, 0.0], 1.0))


def proj_xy(n: int = 3) -> LinearMap:
    return LinearMap(np.eye(n)[:2])


@pytest.fixture
def square():
    return unit_square()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance results: criterion number -> (passed, detail)
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (passed, detail)
    print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if passed else 'FAIL'}  {detail}")
