import pytest
from hypothesis import settings

from memlif.cli import load_calibration

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


@pytest.fixture(scope="session")
def cal():
    """The bundled calibration."""
    return load_calibration()


@pytest.fixture(scope="session")
def params(cal):
    return cal.params


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    outcome = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            name = getattr(rep, "nodeid", "").rpartition("::")[2]
            if not name.startswith("test_criterion_"):
                continue
            if rep.when != "call" and status != "error" and not rep.failed:
                continue
            detail = dict(getattr(rep, "user_properties", ())).get("detail", "")
            outcome[name] = ("PASS" if status == "passed" else "FAIL", detail)
    if not outcome:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(outcome):
        verdict, detail = outcome[name]
        number, _, title = name[len("test_criterion_"):].partition("_")
        line = f"{verdict}  criterion {int(number):2d}  {title.replace('_', ' ')}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
