import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cgpmut.core import BOOLEAN, REAL, FunctionSet, Geometry, random_genotype  # noqa: E402

ACCEPTANCE_LINES = []

BOOL_SET = FunctionSet(("AND", "OR", "XOR", "ANDN"), BOOLEAN)
MIXED_BOOL_SET = FunctionSet(("AND", "OR", "XOR", "NOR", "NAND", "XNOR", "ANDN", "NOT"), BOOLEAN)
REAL_SET = FunctionSet(("add", "sub", "mul", "div", "sin", "cos", "log", "exp"), REAL)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_geometry(rng, max_inputs=4, max_nodes=32, max_outputs=3):
    return Geometry(int(rng.integers(1, max_inputs + 1)), int(rng.integers(1, max_outputs + 1)),
                    int(rng.integers(1, max_nodes + 1)))


def random_genotypes(rng, count, function_set=BOOL_SET, **kw):
    for _ in range(count):
        yield random_genotype(random_geometry(rng, **kw), function_set, rng)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
