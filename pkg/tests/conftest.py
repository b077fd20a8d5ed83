import re
import sys


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=lambda s: [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", s.split()[1])]):
        terminalreporter.write_line(line)
