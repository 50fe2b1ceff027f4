import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_results():
    from phenotumor.acceptance import Suite

    results = Suite(jobs=4).run_all()
    ACCEPTANCE_LINES.extend(r.line() for r in results)
    return {r.number: r for r in results}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
