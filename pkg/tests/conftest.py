import time

import pytest

ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


class Criterion:
    """Collects checks for one acceptance criterion and reports a single verdict line."""

    def __init__(self, lines, number, title, budget):
        self.lines, self.number, self.title, self.budget = lines, number, title, budget
        self.failures = []
        self.details = []

    def check(self, ok, what):
        if not ok:
            self.failures.append(what)
        return ok

    def note(self, text):
        self.details.append(text)

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc_type is pytest.skip.Exception:
            self.lines.append(f"[SKIP] criterion {self.number}: {self.title} ({exc})")
            return False
        if exc_type is not None:
            self.failures.append(f"{exc_type.__name__}: {exc}")
        self.check(elapsed < self.budget, f"runtime {elapsed:.2f}s over budget {self.budget}s")
        verdict = "FAIL" if self.failures else "PASS"
        detail = "; ".join(self.failures or self.details)
        self.lines.append(f"[{verdict}] criterion {self.number}: {self.title} [{elapsed:.2f}s] {detail}".rstrip())
        print(self.lines[-1])
        if exc_type is None and self.failures:
            raise AssertionError(f"criterion {self.number} failed: {detail}")
        return False


@pytest.fixture
def criterion(request):
    def make(number, title, budget):
        return Criterion(request.config.stash[ACCEPTANCE], number, title, budget)

    return make


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
