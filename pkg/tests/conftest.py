import pytest

CRITERIA_LINES = []


@pytest.fixture(scope="session")
def record_criterion():
    """Append ``"<id> PASS|FAIL <detail>"`` to the session summary."""

    def record(cid, verdict, detail=""):
        line = f"{cid:>4} {'PASS' if verdict else 'FAIL'} {detail}".rstrip()
        CRITERIA_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA_LINES:
            terminalreporter.write_line(line)
