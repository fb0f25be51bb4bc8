import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

# (criterion, passed, detail) tuples appended by the acceptance module
ACCEPTANCE_REPORT = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_REPORT:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
