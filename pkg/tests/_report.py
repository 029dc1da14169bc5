"""One line per acceptance criterion, collected for the terminal summary."""

from __future__ import annotations

LINES: list[str] = []


def record(number: int, ok: bool, detail: str) -> str:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    LINES.append(line)
    print(line)
    return line
