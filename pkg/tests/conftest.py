import numpy as np
import pytest

from qgflow.littlewood_paley import build_frame
from qgflow.spectral import Grid2D


@pytest.fixture(scope="session")
def grid64():
    return Grid2D(64)


@pytest.fixture(scope="session")
def grid32():
    return Grid2D(32)


@pytest.fixture(scope="session")
def grid16():
    return Grid2D(16)


@pytest.fixture(scope="session")
def frame64(grid64):
    return build_frame(grid64)


def rel_l2(a, b):
    den = b.l2()
    return (a - b).l2() / den if den > 0 else (a - b).l2()


def brute_convolution(fc, gc, n, kmax):
    """O(n^4) coefficient convolution restricted to |k_i| <= kmax on inputs and output."""
    out = np.zeros((n, n), dtype=complex)
    ks = range(-kmax, kmax + 1)
    for a1 in ks:
        for a2 in ks:
            fa = fc[a1 % n, a2 % n]
            if fa == 0:
                continue
            for b1 in ks:
                for b2 in ks:
                    k1, k2 = a1 + b1, a2 + b2
                    if abs(k1) <= kmax and abs(k2) <= kmax:
                        out[k1 % n, k2 % n] += fa * gc[b1 % n, b2 % n]
    return out


ACCEPTANCE_LINES = []


def report_criterion(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} :: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
