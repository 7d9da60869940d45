"""Collects one pass/fail line per acceptance criterion and prints them after the run."""

ACCEPTANCE = []


def record(name: str, passed, detail: str):
    """Store one summary line; ``passed=None`` marks an informational line."""
    ACCEPTANCE.append((name, passed, detail))
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE:
        status = "INFO" if passed is None else ("PASS" if passed else "FAIL")
        terminalreporter.write_line(f"{status}  {name}: {detail}")
