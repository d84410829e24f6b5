"""Collects one verdict line per acceptance criterion and prints the block
after the test summary, so the pass/fail record appears in every run."""

_VERDICTS = []


def record_verdict(line: str):
    _VERDICTS.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
