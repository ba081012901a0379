"""Benchmark problems: compressed truth tables and sampled regression datasets."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import _kernels as K
from .core import (
    BOOLEAN,
    REAL,
    FunctionSet,
    Genotype,
    GenotypeError,
    Geometry,
    row_mask,
    validate,
    words_to_array,
)

BOOLEAN_PROBLEMS = ("adder2", "mul2", "sub2")
REGRESSION_PROBLEMS = ("koza2", "koza3", "pagie1")
PROBLEM_NAMES = BOOLEAN_PROBLEMS + REGRESSION_PROBLEMS

ADD_MUL_FUNCTIONS = FunctionSet(("AND", "OR", "XOR", "ANDN"), BOOLEAN)
SUB_FUNCTIONS = FunctionSet(("AND", "OR", "XOR", "NOR", "ANDN"), BOOLEAN)
REGRESSION_FUNCTIONS = FunctionSet(("add", "sub", "mul", "div", "sin", "cos", "log", "exp"), REAL)

BOOLEAN_NODES = 30
REGRESSION_NODES = 10
BOOLEAN_POINT_RATE = 0.05
REGRESSION_POINT_RATE = 0.2
REGRESSION_TARGET = 0.01


@dataclass(frozen=True, eq=False)
class TruthTable:
    """Packed truth table; bit ``r`` of every word belongs to row ``r``."""

    num_inputs: int
    input_words: np.ndarray   # (num_inputs, W) uint64
    target_words: np.ndarray  # (num_outputs, W) uint64
    mask: np.ndarray          # (W,) uint64, ones for valid rows

    @property
    def num_rows(self) -> int:
        return 2 ** self.num_inputs


@dataclass(frozen=True, eq=False)
class Dataset:
    inputs: np.ndarray   # (num_inputs, P)
    targets: np.ndarray  # (num_outputs, P)
    descriptor: str = ""

    def __len__(self) -> int:
        return self.inputs.shape[1]

    def to_csv(self, path: str | Path) -> None:
        ni, no = self.inputs.shape[0], self.targets.shape[0]
        header = [f"x{i}" for i in range(ni)] + (["y"] if no == 1 else [f"y{k}" for k in range(no)])
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in np.vstack([self.inputs, self.targets]).T:
                writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path: str | Path, num_inputs: int, descriptor: str = "") -> "Dataset":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            rows = np.array([[float(v) for v in row] for row in reader if row], dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] <= num_inputs:
            raise ValueError(f"{path}: expected more than {num_inputs} columns")
        return cls(np.ascontiguousarray(rows[:, :num_inputs].T),
                   np.ascontiguousarray(rows[:, num_inputs:].T), descriptor)


@dataclass(frozen=True, eq=False)
class Problem:
    name: str
    geometry: Geometry
    function_set: FunctionSet
    payload: TruthTable | Dataset
    target_fitness: float = 0.0
    point_rate: float = BOOLEAN_POINT_RATE

    @property
    def kind(self) -> str:
        return self.function_set.kind

    def fitness(self, genotype: Genotype) -> float:
        if self.kind == BOOLEAN:
            return boolean_fitness(genotype, self)
        return regression_fitness(genotype, self)


def truth_table(num_inputs: int, fn: Callable[[tuple[int, ...]], tuple[int, ...]],
                num_outputs: int) -> TruthTable:
    """Build packed words by enumerating rows; input ``j`` in row ``r`` is bit ``j`` of ``r``."""
    n_rows = 2 ** num_inputs
    ins = [0] * num_inputs
    outs = [0] * num_outputs
    for r in range(n_rows):
        bits = tuple((r >> j) & 1 for j in range(num_inputs))
        for j, b in enumerate(bits):
            ins[j] |= b << r
        for k, b in enumerate(fn(bits)):
            outs[k] |= (b & 1) << r
    return TruthTable(num_inputs, words_to_array(ins, n_rows), words_to_array(outs, n_rows),
                      row_mask(n_rows))


def _full_adder(bits):
    a, b, c = bits
    s = a + b + c
    return s & 1, s >> 1


def _two_bit_multiplier(bits):
    a = bits[0] | bits[1] << 1
    b = bits[2] | bits[3] << 1
    p = a * b
    return tuple((p >> k) & 1 for k in range(4))


def _two_bit_subtractor(bits):
    a = bits[0] | bits[1] << 1
    b = bits[2] | bits[3] << 1
    d = (a - b) & 0b11
    return d & 1, d >> 1, int(a < b)


_BOOLEAN_CIRCUITS = {
    # name: (inputs, outputs, function set, row function)
    "adder2": (3, 2, ADD_MUL_FUNCTIONS, _full_adder),
    "mul2": (4, 4, ADD_MUL_FUNCTIONS, _two_bit_multiplier),
    "sub2": (4, 3, SUB_FUNCTIONS, _two_bit_subtractor),
}


def make_boolean_problem(name: str, num_nodes: int = BOOLEAN_NODES) -> Problem:
    if name not in _BOOLEAN_CIRCUITS:
        raise GenotypeError(f"unknown boolean problem {name!r}; choose from {BOOLEAN_PROBLEMS}")
    ni, no, fset, fn = _BOOLEAN_CIRCUITS[name]
    return Problem(name, Geometry(ni, no, num_nodes), fset, truth_table(ni, fn, no),
                   0.0, BOOLEAN_POINT_RATE)


def koza2(x):
    return x ** 5 - 2 * x ** 3 + x


def koza3(x):
    return x ** 6 - 2 * x ** 4 + x ** 2


def pagie1(x, y):
    # 1/(1+x^-4) rewritten as x^4/(1+x^4): same values, defined at 0
    x4, y4 = x ** 4, y ** 4
    return x4 / (1 + x4) + y4 / (1 + y4)


def uniform_points(low: float, high: float, count: int, num_vars: int,
                   rng: np.random.Generator) -> np.ndarray:
    """U[low, high, count]: ``count`` random points, shape (num_vars, count)."""
    return rng.uniform(low, high, size=(num_vars, count))


def grid_points(low: float, high: float, step: float, num_vars: int) -> np.ndarray:
    """E[low, high, step]: full evenly spaced grid, shape (num_vars, n**num_vars)."""
    n = int(round((high - low) / step)) + 1
    axis = np.round(low + step * np.arange(n), 12)
    mesh = np.meshgrid(*([axis] * num_vars), indexing="ij")
    return np.vstack([m.ravel() for m in mesh])


def make_regression_problem(name: str, dataset_rng: np.random.Generator | None = None,
                            num_nodes: int = REGRESSION_NODES,
                            dataset: Dataset | None = None) -> Problem:
    """Koza-2/3 sample U[-1,1,20] from ``dataset_rng``; Pagie-1 uses the E[-5,5,0.4] grid.

    Passing ``dataset`` pins the points (e.g. loaded from CSV) instead.
    """
    if name not in REGRESSION_PROBLEMS:
        raise GenotypeError(f"unknown regression problem {name!r}; choose from {REGRESSION_PROBLEMS}")
    ni = 2 if name == "pagie1" else 1
    if dataset is None:
        if name == "pagie1":
            pts = grid_points(-5.0, 5.0, 0.4, 2)
            dataset = Dataset(pts, pagie1(pts[0], pts[1]).reshape(1, -1), "E[-5,5,0.4]")
        else:
            if dataset_rng is None:
                raise GenotypeError(f"{name} needs a dataset_rng to draw U[-1,1,20]")
            pts = uniform_points(-1.0, 1.0, 20, 1, dataset_rng)
            fn = koza2 if name == "koza2" else koza3
            dataset = Dataset(pts, fn(pts[0]).reshape(1, -1), "U[-1,1,20]")
    if dataset.inputs.shape[0] != ni:
        raise GenotypeError(f"{name} takes {ni} inputs, dataset has {dataset.inputs.shape[0]}")
    return Problem(name, Geometry(ni, 1, num_nodes), REGRESSION_FUNCTIONS, dataset,
                   REGRESSION_TARGET, REGRESSION_POINT_RATE)


def make_problem(name: str, dataset_rng: np.random.Generator | None = None) -> Problem:
    if name in BOOLEAN_PROBLEMS:
        return make_boolean_problem(name)
    if name in REGRESSION_PROBLEMS:
        return make_regression_problem(name, dataset_rng)
    raise GenotypeError(f"unknown problem {name!r}; choose from {PROBLEM_NAMES}")


def _check(genotype: Genotype, problem: Problem, kind: str) -> None:
    if problem.kind != kind:
        raise GenotypeError(f"{problem.name} is a {problem.kind} problem, not {kind}")
    if genotype.geometry != problem.geometry or genotype.function_set != problem.function_set:
        raise GenotypeError("genotype does not match the problem's geometry/function set")
    bad = validate(genotype)
    if bad is not None:
        raise GenotypeError(str(bad))


def boolean_fitness(genotype: Genotype, problem: Problem) -> float:
    """Number of output bits that differ from the target truth table."""
    _check(genotype, problem, BOOLEAN)
    g, t = genotype.geometry, problem.payload
    return K.fitness_bool(genotype.genes, g.num_inputs, g.num_nodes, g.max_arity,
                          g.num_outputs, genotype.function_set.arities,
                          genotype.function_set.opcodes, t.input_words, t.target_words, t.mask)


def regression_fitness(genotype: Genotype, problem: Problem) -> float:
    """Sum of absolute errors over the dataset; inf if any output is non-finite."""
    _check(genotype, problem, REAL)
    g, d = genotype.geometry, problem.payload
    return K.fitness_real(genotype.genes, g.num_inputs, g.num_nodes, g.max_arity,
                          g.num_outputs, genotype.function_set.arities,
                          genotype.function_set.opcodes, d.inputs, d.targets)
