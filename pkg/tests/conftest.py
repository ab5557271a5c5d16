import numpy as np
import pytest


def kyfan_grid_oracle(x, w=None, step=1e-4):
    """sup{eps : mu(|x| >= eps) >= eps} scanned on a uniform eps grid."""
    a = np.abs(np.asarray(x, dtype=float))
    w = np.full(a.size, 1.0 / a.size) if w is None else np.asarray(w)
    best = 0.0
    for eps in np.arange(0.0, 1.0 + step, step):
        if w[a >= eps].sum() >= eps - 1e-15:
            best = eps
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE = []


def record_criterion(number: int, ok: bool, detail: str) -> str:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail}"
    ACCEPTANCE.append((number, line))
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
