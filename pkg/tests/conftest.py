ACCEPTANCE_LINES = {}


def record(criterion, passed, detail):
    status = "PASS" if passed else "FAIL"
    line = f"[{status}] criterion {criterion:>2}: {detail}"
    ACCEPTANCE_LINES[criterion] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
