import math
import re
import warnings

import pytest

from drivenssh.models import DimerizationWarning, DriveProtocol

KAPPA0, DK0, DK1 = 0.25, 0.06, 0.12

# criterion id -> (passed, detail); filled by test_acceptance
ACCEPTANCE = {}


def reference(period_ratio=4 / 3, **kw):
    return DriveProtocol.from_period_ratio(KAPPA0, kw.pop("dkappa0", DK0), kw.pop("dkappa1", DK1), period_ratio, **kw)


@pytest.fixture
def coexist():
    return reference(n_sites=2)


@pytest.fixture(autouse=True)
def _quiet_dimerization():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DimerizationWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(re.match(r"\d+", k).group()), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")


def assert_close(a, b, tol):
    assert math.isclose(a, b, abs_tol=tol), (a, b)
