"""Shared fixtures and factories for the test suite."""

import random
from fractions import Fraction

import pytest

from rentdiv.model import Instance, ValuationMatrix
from rentdiv.scenarios import builtin_scenario

AGENTS = "ABCDEFGHIJKL"


def make_instance(rows, total=None):
    """Instance + matrix from integer/rational rows; rent defaults to row sum."""
    n = len(rows)
    if total is None:
        total = sum(rows[0])
    inst = Instance(
        tuple(f"R{j + 1}" for j in range(n)), tuple(AGENTS[:n]), Fraction(total)
    )
    return inst, ValuationMatrix.from_rows(
        [tuple(Fraction(v) for v in row) for row in rows]
    )


def random_rows(rng: random.Random, n: int, total: int = 36):
    """n nonnegative integer rows summing exactly to `total`."""
    rows = []
    for _ in range(n):
        cuts = sorted(rng.randint(0, total) for _ in range(n - 1))
        rows.append(
            tuple(Fraction(b - a) for a, b in zip([0] + cuts, cuts + [total]))
        )
    return rows


@pytest.fixture
def baseline():
    sc = builtin_scenario("baseline")
    return sc.instance, sc.reported_matrix


# One line per acceptance check, echoed after the run so the pass/fail ledger
# is visible even when pytest captures stdout.
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance checks")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
