import numpy as np
import pytest
from scipy.constants import speed_of_light

from xlchansim.config import scenario_params
from xlchansim.geometry import ArrayGeometry, FieldPattern

FC = 7e9
LAMBDA = speed_of_light / FC


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def lam():
    return LAMBDA


@pytest.fixture
def umi():
    return scenario_params("UMi")


@pytest.fixture
def inh():
    return scenario_params("InH")


def small_bs(rows=2, cols=4, pol=2, pattern="isotropic", **kw):
    return ArrayGeometry(
        rows=rows, cols=cols, spacing_h=LAMBDA / 2, spacing_v=LAMBDA / 2, polarizations=pol,
        reference_point=kw.pop("reference_point", (0.0, 0.0, 3.0)), centered=kw.pop("centered", True),
        pattern=FieldPattern(kind=pattern), **kw,
    )


def small_ue(pol=2, **kw):
    return ArrayGeometry(
        offsets=[[0.0, -0.03, -0.07], [0.0, 0.03, 0.07]], polarizations=pol,
        reference_point=kw.pop("reference_point", (4.0, 1.0, 1.0)), **kw,
    )


# Acceptance results, one line per criterion, echoed in the terminal summary.
ACCEPTANCE = {}


def report(number: int, title: str, ok: bool, detail: str):
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} [{detail}]"
    ACCEPTANCE[number] = line
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
