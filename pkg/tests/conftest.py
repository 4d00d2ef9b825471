import pytest

from claw import dsl
from claw.ibragimov import adjoint_system
from claw.models import anderson_hiv, hiv_source

_acceptance = {}


@pytest.fixture(scope="session")
def hiv():
    return anderson_hiv()


@pytest.fixture(scope="session")
def hiv_adjoint(hiv):
    return adjoint_system(hiv.system)


@pytest.fixture(scope="session")
def hiv_doc():
    return dsl.parse(hiv_source())


def pytest_runtest_logreport(report):
    criterion = getattr(report, "criterion", None)
    if criterion is None:
        for key, value in report.user_properties:
            if key == "criterion":
                criterion = value
    if criterion is None:
        return
    if report.when == "call" or report.outcome != "passed":
        ok = _acceptance.get(criterion, True) and report.outcome == "passed"
        _acceptance[criterion] = ok


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_acceptance):
        status = "PASS" if _acceptance[criterion] else "FAIL"
        terminalreporter.write_line(f"{status}  {criterion}")
