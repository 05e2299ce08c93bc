"""Shared pytest hooks: surface the acceptance criterion verdicts in the
terminal summary even when output capture is on."""

acceptance_lines = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.line(line)
