import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE = {}


class Criterion:
    """Times one acceptance criterion and records a pass/fail line for the summary."""

    def __init__(self, number: int, title: str, limit: float):
        self.number, self.title, self.limit = number, title, limit
        self.details = []
        self.ok = True
        self.t0 = time.perf_counter()

    def check(self, name: str, ok, detail: str = "") -> None:
        ok = bool(ok)
        self.ok &= ok
        self.details.append(f"{name}{'' if ok else ' FAILED'}{': ' + detail if detail else ''}")

    def finish(self) -> None:
        elapsed = time.perf_counter() - self.t0
        self.check("runtime", elapsed < self.limit, f"{elapsed:.2f}s < {self.limit:g}s")
        line = (f"[{'PASS' if self.ok else 'FAIL'}] criterion {self.number:2d} {self.title}"
                f" | {'; '.join(self.details)}")
        _ACCEPTANCE[(self.number, self.title)] = line
        print(line)
        assert self.ok, line


@pytest.fixture
def criterion():
    made = []

    def make(number: int, title: str, limit: float) -> Criterion:
        made.append(Criterion(number, title, limit))
        return made[-1]
    return make


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[k])
    numbers = {k[0] for k in _ACCEPTANCE}
    failed = {k[0] for k, line in _ACCEPTANCE.items() if not line.startswith("[PASS]")}
    terminalreporter.write_line(f"{len(numbers) - len(failed)}/{len(numbers)} criteria passed"
                                f" ({len(_ACCEPTANCE)} runs)")
