import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

_I = np.eye(2)
_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Z = np.diag([1.0, -1.0])


def kron_pauli(n, xmask=0, zmask=0, coeff=1.0):
    """Dense c X^x Z^z built from Kronecker products (site i is bit i)."""
    m = np.ones((1, 1))
    for i in reversed(range(n)):
        f = _I
        if zmask >> i & 1:
            f = _Z @ f
        if xmask >> i & 1:
            f = _X @ f
        m = np.kron(m, f)
    return coeff * m


def kron_sum(n, strings):
    return sum(kron_pauli(n, s.xmask, s.zmask, s.coeff) for s in strings)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
