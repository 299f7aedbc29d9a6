from __future__ import annotations

import numpy as np
import pytest

from switchstab.chain import validate_generator
from switchstab.models import two_mode_model


@pytest.fixture(scope="session")
def example_model():
    return two_mode_model()


@pytest.fixture(scope="session")
def gamma(example_model):
    return example_model.generator


def random_generator(rng: np.random.Generator, n: int, scale: float = 5.0):
    """Dense irreducible generator with off-diagonal rates in (0.1, scale)."""
    off = rng.uniform(0.1, scale, size=(n, n))
    np.fill_diagonal(off, 0.0)
    np.fill_diagonal(off, -off.sum(axis=1))
    return validate_generator(off)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
