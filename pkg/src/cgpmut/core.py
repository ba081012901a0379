"""Genotype representation, validation, decoding and program execution."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from . import _kernels as K

BOOLEAN = "boolean"
REAL = "real"

# name -> (op code, arity)
BOOLEAN_FUNCTIONS = {
    "AND": (K.B_AND, 2),
    "OR": (K.B_OR, 2),
    "XOR": (K.B_XOR, 2),
    "NOR": (K.B_NOR, 2),
    "NAND": (K.B_NAND, 2),
    "XNOR": (K.B_XNOR, 2),
    "ANDN": (K.B_ANDN, 2),  # a AND (NOT b)
    "NOT": (K.B_NOT, 1),
    "ID": (K.B_ID, 1),
}

REAL_FUNCTIONS = {
    "add": (K.R_ADD, 2),
    "sub": (K.R_SUB, 2),
    "mul": (K.R_MUL, 2),
    "div": (K.R_DIV, 2),
    "sin": (K.R_SIN, 1),
    "cos": (K.R_COS, 1),
    "log": (K.R_LOG, 1),  # ln|x|, 0 at x = 0
    "exp": (K.R_EXP, 1),
}

_REGISTRY = {BOOLEAN: BOOLEAN_FUNCTIONS, REAL: REAL_FUNCTIONS}


class GenotypeError(ValueError):
    """Raised for malformed genotypes or incompatible configurations."""


@dataclass(frozen=True)
class Geometry:
    num_inputs: int
    num_outputs: int
    num_nodes: int
    max_arity: int = 2
    allow_output_to_input: bool = False

    def __post_init__(self):
        for name in ("num_inputs", "num_outputs", "num_nodes", "max_arity"):
            if getattr(self, name) < 1:
                raise GenotypeError(f"{name} must be >= 1, got {getattr(self, name)}")

    @property
    def genotype_length(self) -> int:
        return genotype_length(self)

    @property
    def node_width(self) -> int:
        return self.max_arity + 1

    def node_address(self, index: int) -> int:
        return self.num_inputs + index


def genotype_length(geometry: Geometry) -> int:
    """Number of integer genes: one function gene and ``max_arity`` connection
    genes per node, followed by one gene per output."""
    return geometry.num_nodes * (geometry.max_arity + 1) + geometry.num_outputs


@dataclass(frozen=True)
class FunctionSet:
    names: tuple[str, ...]
    kind: str = BOOLEAN

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if self.kind not in _REGISTRY:
            raise GenotypeError(f"unknown function-set kind {self.kind!r}")
        if not self.names:
            raise GenotypeError("function set is empty")
        table = _REGISTRY[self.kind]
        unknown = [n for n in self.names if n not in table]
        if unknown:
            raise GenotypeError(f"unknown {self.kind} functions: {unknown}")

    def __len__(self) -> int:
        return len(self.names)

    @cached_property
    def arities(self) -> np.ndarray:
        table = _REGISTRY[self.kind]
        return _frozen(np.array([table[n][1] for n in self.names], dtype=np.int64))

    @cached_property
    def opcodes(self) -> np.ndarray:
        table = _REGISTRY[self.kind]
        return _frozen(np.array([table[n][0] for n in self.names], dtype=np.int64))

    @property
    def max_arity(self) -> int:
        return int(self.arities.max())

    def check_geometry(self, geometry: Geometry) -> None:
        if self.max_arity > geometry.max_arity:
            raise GenotypeError(
                f"function arity {self.max_arity} exceeds geometry max_arity {geometry.max_arity}"
            )


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=64)
def gene_bounds(geometry: Geometry, num_functions: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-gene permissible range ``[lo, hi)``."""
    n = genotype_length(geometry)
    lo = np.zeros(n, dtype=np.int64)
    hi = np.zeros(n, dtype=np.int64)
    ni, w = geometry.num_inputs, geometry.node_width
    for i in range(geometry.num_nodes):
        hi[i * w] = num_functions
        hi[i * w + 1:(i + 1) * w] = ni + i
    base = geometry.num_nodes * w
    lo[base:] = 0 if geometry.allow_output_to_input else ni
    hi[base:] = ni + geometry.num_nodes
    return _frozen(lo), _frozen(hi)


@dataclass(frozen=True, eq=False)
class Genotype:
    """Immutable gene vector plus the geometry and function set it encodes for."""

    genes: np.ndarray
    geometry: Geometry
    function_set: FunctionSet

    def __post_init__(self):
        genes = np.array(self.genes, dtype=np.int64)
        if genes.ndim != 1:
            raise GenotypeError("genes must be one-dimensional")
        object.__setattr__(self, "genes", _frozen(genes))

    def __eq__(self, other):
        if not isinstance(other, Genotype):
            return NotImplemented
        return (
            self.geometry == other.geometry
            and self.function_set == other.function_set
            and np.array_equal(self.genes, other.genes)
        )

    def __hash__(self):
        return hash((self.geometry, self.function_set, self.genes.tobytes()))

    def __len__(self) -> int:
        return len(self.genes)

    def with_genes(self, genes) -> "Genotype":
        return Genotype(genes, self.geometry, self.function_set)

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return gene_bounds(self.geometry, len(self.function_set))

    def node_genes(self, index: int) -> np.ndarray:
        w = self.geometry.node_width
        return self.genes[index * w:(index + 1) * w]

    @property
    def output_genes(self) -> np.ndarray:
        return self.genes[self.geometry.num_nodes * self.geometry.node_width:]

    def active_mask(self) -> np.ndarray:
        g = self.geometry
        return K.active_mask(
            self.genes, g.num_inputs, g.num_nodes, g.max_arity, g.num_outputs,
            self.function_set.arities,
        )

    def active_nodes(self) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.active_mask()).tolist())

    # serialization: "Ni No Nc Na |F| genes..."
    def dumps(self) -> str:
        g = self.geometry
        header = [g.num_inputs, g.num_outputs, g.num_nodes, g.max_arity, len(self.function_set)]
        return " ".join(str(v) for v in header + self.genes.tolist())

    @classmethod
    def loads(cls, line: str, function_set: FunctionSet,
              allow_output_to_input: bool = False) -> "Genotype":
        try:
            values = [int(tok) for tok in line.split()]
        except ValueError as exc:
            raise GenotypeError(f"non-integer token in genotype line: {exc}") from None
        if len(values) < 5:
            raise GenotypeError("genotype line is missing its geometry header")
        ni, no, nc, na, nf = values[:5]
        if nf != len(function_set):
            raise GenotypeError(f"header declares {nf} functions, function set has {len(function_set)}")
        geometry = Geometry(ni, no, nc, na, allow_output_to_input)
        genotype = cls(values[5:], geometry, function_set)
        problem = validate(genotype)
        if problem is not None:
            raise GenotypeError(str(problem))
        return genotype


@dataclass(frozen=True)
class Violation:
    gene: int
    value: int
    low: int
    high: int

    def __str__(self):
        return f"gene {self.gene} = {self.value} outside [{self.low}, {self.high})"


def validate(genotype: Genotype) -> Violation | None:
    """Return the first gene outside its permissible range, or None when valid."""
    n = genotype_length(genotype.geometry)
    if len(genotype.genes) != n:
        return Violation(min(len(genotype.genes), n), -1, 0, 0)
    lo, hi = genotype.bounds
    bad = np.flatnonzero((genotype.genes < lo) | (genotype.genes >= hi))
    if bad.size == 0:
        return None
    i = int(bad[0])
    return Violation(i, int(genotype.genes[i]), int(lo[i]), int(hi[i]))


def random_genotype(geometry: Geometry, function_set: FunctionSet,
                    rng: np.random.Generator) -> Genotype:
    function_set.check_geometry(geometry)
    lo, hi = gene_bounds(geometry, len(function_set))
    genes = rng.integers(lo, hi)
    return Genotype(genes, geometry, function_set)


@dataclass(frozen=True)
class ActiveNode:
    index: int
    function: int
    inputs: tuple[int, ...]


@dataclass(frozen=True)
class DecodedProgram:
    num_inputs: int
    num_nodes: int
    active_nodes: tuple[ActiveNode, ...]
    output_addresses: tuple[int, ...]
    max_arity: int = 2

    @property
    def active_indices(self) -> tuple[int, ...]:
        return tuple(n.index for n in self.active_nodes)

    def _arrays(self, function_set: FunctionSet):
        k = len(self.active_nodes)
        width = max(1, self.max_arity)
        idx = np.empty(k, dtype=np.int64)
        ops = np.empty(k, dtype=np.int64)
        ins = np.full((k, width), -1, dtype=np.int64)
        for row, node in enumerate(self.active_nodes):
            idx[row] = node.index
            ops[row] = function_set.opcodes[node.function]
            ins[row, :len(node.inputs)] = node.inputs
        return idx, ops, ins, np.array(self.output_addresses, dtype=np.int64)


def decode(genotype: Genotype) -> DecodedProgram:
    """Backward search from the outputs; only reachable nodes are kept."""
    problem = validate(genotype)
    if problem is not None:
        raise GenotypeError(str(problem))
    g = genotype.geometry
    arities = genotype.function_set.arities
    nodes = []
    for i in np.flatnonzero(genotype.active_mask()).tolist():
        row = genotype.node_genes(i)
        f = int(row[0])
        nodes.append(ActiveNode(i, f, tuple(int(v) for v in row[1:1 + arities[f]])))
    return DecodedProgram(
        g.num_inputs, g.num_nodes, tuple(nodes),
        tuple(int(v) for v in genotype.output_genes), g.max_arity,
    )


def words_to_array(words: Sequence[int], n_rows: int) -> np.ndarray:
    """Split arbitrary-width Python ints into (len(words), ceil(n_rows/64)) uint64."""
    w = max(1, -(-n_rows // 64))
    out = np.zeros((len(words), w), dtype=np.uint64)
    for i, word in enumerate(words):
        word = int(word)
        for c in range(w):
            out[i, c] = (word >> (64 * c)) & 0xFFFFFFFFFFFFFFFF
    return out


def array_to_words(arr: np.ndarray) -> list[int]:
    words = []
    for row in arr:
        v = 0
        for c, chunk in enumerate(row.tolist()):
            v |= int(chunk) << (64 * c)
        words.append(v)
    return words


def row_mask(n_rows: int) -> np.ndarray:
    full = (1 << n_rows) - 1
    return words_to_array([full], n_rows)[0]


def execute_boolean(program: DecodedProgram, function_set: FunctionSet,
                    input_words: Sequence[int] | np.ndarray,
                    n_rows: int | None = None) -> list[int] | np.ndarray:
    """Evaluate on bit-parallel truth-table words.

    ``input_words`` is either a sequence of Python ints (returns ints) or a
    packed ``(num_inputs, W)`` uint64 array (returns an array of the same width).
    Bits past ``n_rows`` (default ``2**num_inputs``) are cleared.
    """
    if function_set.kind != BOOLEAN:
        raise GenotypeError("execute_boolean needs a boolean function set")
    if n_rows is None:
        n_rows = 2 ** program.num_inputs
    packed = isinstance(input_words, np.ndarray)
    words = input_words if packed else words_to_array(input_words, n_rows)
    if words.shape[0] != program.num_inputs:
        raise GenotypeError(f"expected {program.num_inputs} input words, got {words.shape[0]}")
    idx, ops, ins, outs = program._arrays(function_set)
    out = K.exec_bool(program.num_inputs, program.num_nodes, idx, ops, ins, outs,
                      np.ascontiguousarray(words, dtype=np.uint64))
    mask = row_mask(n_rows)
    if out.shape[1] == mask.shape[0]:
        out &= mask
    return out if packed else array_to_words(out)


def execute_real(program: DecodedProgram, function_set: FunctionSet,
                 inputs: Sequence[float] | np.ndarray) -> list[float] | np.ndarray:
    """Evaluate with protected arithmetic.

    A flat sequence of ``num_inputs`` values returns a list of output values; a
    ``(num_inputs, P)`` array evaluates P points at once and returns ``(num_outputs, P)``.
    """
    if function_set.kind != REAL:
        raise GenotypeError("execute_real needs a real-valued function set")
    arr = np.asarray(inputs, dtype=np.float64)
    single = arr.ndim == 1
    points = arr.reshape(-1, 1) if single else arr
    if points.shape[0] != program.num_inputs:
        raise GenotypeError(f"expected {program.num_inputs} inputs, got {points.shape[0]}")
    idx, ops, ins, outs = program._arrays(function_set)
    with np.errstate(all="ignore"):
        out = K.exec_real(program.num_inputs, program.num_nodes, idx, ops, ins, outs,
                          np.ascontiguousarray(points))
    return out[:, 0].tolist() if single else out
