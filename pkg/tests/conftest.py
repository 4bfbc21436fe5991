"""Shared pytest plumbing.

The acceptance tests record one human-readable pass/fail line per
criterion; printing them here, in the terminal summary, keeps them
visible even though pytest captures test output.
"""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
