"""Shared fixtures: seeded generators and random system factories."""

from __future__ import annotations

import numpy as np
import pytest

from fixedhinf import Plant, StateSpace


def stable_system(rng, n, m, p, margin=0.5):
    """Random state space with spectral abscissa exactly -margin."""
    A = rng.standard_normal((n, n))
    if n:
        alpha = float(np.max(np.linalg.eigvals(A).real))
        A = A - (alpha + margin) * np.eye(n)
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((p, n))
    D = rng.standard_normal((p, m))
    return StateSpace(A, B, C, D)


def random_plant(rng, n, m1, m2, p1, p2, *, stable=False, margin=0.5, d22=False):
    """Random generalized plant; D22 is zero unless asked for."""
    A = rng.standard_normal((n, n))
    if stable and n:
        alpha = float(np.max(np.linalg.eigvals(A).real))
        A = A - (alpha + margin) * np.eye(n)
    return Plant(
        A,
        rng.standard_normal((n, m1)),
        rng.standard_normal((n, m2)),
        rng.standard_normal((p1, n)),
        rng.standard_normal((p2, n)),
        rng.standard_normal((p1, m1)),
        rng.standard_normal((p1, m2)),
        rng.standard_normal((p2, m1)),
        0.1 * rng.standard_normal((p2, m2)) if d22 else np.zeros((p2, m2)),
    )


# Verdict lines recorded by the acceptance tests; replayed after the run so
# they stay visible even when pytest captures per-test output.
ACCEPTANCE_VERDICTS: list[str] = []


def record_verdict(line: str) -> None:
    ACCEPTANCE_VERDICTS.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def make_stable_system(rng):
    def make(n=4, m=2, p=2, margin=0.5):
        return stable_system(rng, n, m, p, margin)

    return make


@pytest.fixture
def make_plant(rng):
    def make(n=3, m1=2, m2=1, p1=2, p2=1, **kw):
        return random_plant(rng, n, m1, m2, p1, p2, **kw)

    return make


@pytest.fixture
def interior_plant():
    """Two-state plant whose optimal static feedback is strictly interior.

    The best static gain is DK = -(1 + sqrt(3)) with closed-loop norm
    1 + sqrt(3); controllers of order 1 and 2 achieve the same value, which
    makes the plant a sharp end-to-end regression target.
    """
    return Plant(
        np.diag([1.0, -2.0]),
        np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
        np.array([[1.0], [0.0]]),
        np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]),
        np.array([[1.0, 0.0]]),
        np.zeros((3, 3)),
        np.array([[0.0], [0.0], [1.0]]),
        np.array([[0.0, 0.0, 1.0]]),
        np.zeros((1, 1)),
    )


INTERIOR_OPTIMUM = 1.0 + np.sqrt(3.0)
