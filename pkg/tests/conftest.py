import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_LINES = []


def report(number: int, ok: bool, detail: str) -> None:
    """Print one acceptance line and fail the calling test when `ok` is false."""
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
    _LINES.append(line)
    print(line, flush=True)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
