import pytest
from hypothesis import HealthCheck, settings

from kcsnav.ship import default_ship

settings.register_profile(
    "repo", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture]
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def ship():
    return default_ship()


_CRITERIA = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1][len("test_criterion_"):]
    status, details = _CRITERIA.get(name, ("PASS", []))
    if report.failed:
        status = "FAIL"
    elif report.skipped:
        status = "SKIP"
    details += [v for k, v in report.user_properties if k == "detail" and v not in details]
    _CRITERIA[name] = (status, details)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA, key=lambda n: int(n.split("_")[0])):
        number, _, title = name.partition("_")
        status, details = _CRITERIA[name]
        terminalreporter.write_line(f"{status}  criterion {number}: {title.replace('_', ' ')}")
        for line in details:
            terminalreporter.write_line(f"      {line}")
