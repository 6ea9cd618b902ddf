import numpy as np
import pytest


class ODESystem:
    """``F(t, y, yd) = yd - f(t, y)`` with the interface the integrator uses.

    ``f`` must accept a leading batch axis on ``y``.
    """

    def __init__(self, f, n, half_bandwidth=None):
        self.f = f
        self.n = n
        self.perm = np.arange(n)
        self.half_bandwidth = half_bandwidth

    def tau(self, t, y):
        return 1.0

    def residual(self, t, y, yd, tau=None, check=True):
        return np.asarray(yd, dtype=float) - self.f(t, np.asarray(y, float))


@pytest.fixture
def ode_system():
    return ODESystem


# --- acceptance report ------------------------------------------------------

ACCEPTANCE = {}


class Criterion:
    """Records the verdict of one numbered acceptance criterion."""

    def __init__(self, number, title):
        self.number = number
        self.title = title
        self.checks = []

    def check(self, label, ok, detail=""):
        self.checks.append((label, bool(ok), detail))

    @property
    def passed(self):
        return bool(self.checks) and all(ok for _, ok, _ in self.checks)

    def line(self):
        verdict = "PASS" if self.passed else "FAIL"
        parts = [f"{label}: {detail}" + ("" if ok else " [failed]")
                 for label, ok, detail in self.checks] or ["not evaluated"]
        return f"criterion {self.number:>2} {verdict}  {self.title} | " + \
            "; ".join(parts)

    def verify(self):
        failed = [f"{label} ({detail})" for label, ok, detail in self.checks
                  if not ok]
        assert not failed, "; ".join(failed)


@pytest.fixture
def criterion(request):
    number, title = request.node.get_closest_marker("criterion").args
    c = Criterion(number, title)
    ACCEPTANCE[number] = c
    yield c
    print(c.line())


def pytest_configure(config):
    config.addinivalue_line("markers",
                            "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number].line())
