import numpy as np
import pytest

from si_euler.kernel import ScalarField, grid_nodes, symmetry_constants


@pytest.fixture
def fold4():
    return symmetry_constants(4)


def random_bandlimited(fold, n, rng, modes=8, mean=True):
    """Random field with wavenumbers j*m, j < modes."""
    th = grid_nodes(fold, n)
    vals = rng.normal() * mean + sum(
        rng.normal() * np.cos(j * fold.m * th) + rng.normal() * np.sin(j * fold.m * th)
        for j in range(1, modes)
    )
    return ScalarField(fold, vals)


ACCEPTANCE_LINES = []


def acceptance_line(number, name, ok, detail):
    """Record and print one pass/fail line for an acceptance criterion."""
    line = f"[{'PASS' if ok else 'FAIL'}] acceptance {number:>2} {name}: {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
