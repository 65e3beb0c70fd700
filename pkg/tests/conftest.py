from __future__ import annotations

import numpy as np
import pytest

from hecke_lab.symspace import from_group

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record_acceptance(name: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS.append((name, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")


def _orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_sl(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    """QR-sampled element ``Q1 diag(e^a) Q2`` of SL_n(R), ``|a_i| <~ scale``."""
    a = rng.uniform(-scale, scale, n)
    a -= a.mean()
    return _orthogonal(rng, n) @ np.diag(np.exp(a)) @ _orthogonal(rng, n)


def random_point(rng: np.random.Generator, n: int, scale: float = 0.7):
    return from_group(random_sl(rng, n, scale))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
