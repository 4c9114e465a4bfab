import pytest

ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one acceptance line: ``report(number, title, passed, detail)``."""

    def add(number, title, passed, detail=""):
        ACCEPTANCE.append((number, title, bool(passed), detail))
        return bool(passed)

    return add


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {title}: {detail}")
