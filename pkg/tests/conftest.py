import numpy as np
import pytest


def random_psd(rng, n, complex_=False):
    X = rng.standard_normal((n, n))
    if complex_:
        X = X + 1j * rng.standard_normal((n, n))
    return X @ X.conj().T / n


def random_unitary(rng, n, complex_=False):
    X = rng.standard_normal((n, n))
    if complex_:
        X = X + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(X)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# ------------------------------------------------------- acceptance summary

ACCEPTANCE_LINES = []


class _Criterion:
    def __init__(self, number, title, limit):
        self.number, self.title, self.limit = number, title, limit
        self.detail = ""

    def __enter__(self):
        import time

        self._start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        import time

        elapsed = time.perf_counter() - self._start
        passed = exc_type is None and elapsed < self.limit
        status = "PASS" if passed else "FAIL"
        note = self.detail if exc_type is None else f"{exc_type.__name__}: {exc}".splitlines()[0]
        line = f"[{status}] criterion {self.number}: {self.title} ({elapsed:.1f}s / limit {self.limit:.0f}s) {note}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        if exc_type is None and not passed:
            raise AssertionError(f"criterion {self.number} exceeded its runtime limit: {elapsed:.1f}s")
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
