"""Shared pytest plumbing: the acceptance tests register one result line
each, printed as a block after the run so the verdict per criterion is
visible in plain text output."""

ACCEPTANCE_RESULTS: list[tuple[int, bool, str]] = []


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS.append((number, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE_RESULTS):
        word = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"CRITERION {number}: {word} - {detail}")
