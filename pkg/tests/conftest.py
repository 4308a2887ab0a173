import pytest

_LINES = []


@pytest.fixture
def report():
    """Record one acceptance verdict line; shown in the terminal summary."""
    def rec(num, ok, detail):
        line = f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}"
        _LINES.append(line)
        print(line)
        return ok
    return rec


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance")
        for line in sorted(_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
