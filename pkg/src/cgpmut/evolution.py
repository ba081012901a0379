"""(1+lambda) evolution with neutral drift."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K
from .core import BOOLEAN, Genotype, GenotypeError, random_genotype
from .mutation import MutationParams
from .problems import Problem

_EMPTY_U64 = np.zeros((0, 1), dtype=np.uint64)
_EMPTY_MASK = np.zeros(1, dtype=np.uint64)
_EMPTY_F64 = np.zeros((0, 1), dtype=np.float64)


@dataclass(frozen=True)
class EvolutionParams:
    """``max_evaluations`` / ``max_generations`` of 0 mean unbounded (not both)."""

    lam: int = 4
    target_fitness: float = 0.0
    max_evaluations: int = 0
    max_generations: int = 10_000_000
    mutation: MutationParams = field(default_factory=MutationParams)

    def __post_init__(self):
        if self.lam < 1:
            raise GenotypeError(f"lambda must be >= 1, got {self.lam}")
        if self.max_evaluations < 0 or self.max_generations < 0:
            raise GenotypeError("budgets must be non-negative")
        if self.max_evaluations == 0 and self.max_generations == 0:
            raise GenotypeError("at least one of max_evaluations / max_generations must be bounded")


@dataclass(frozen=True)
class RunRecord:
    seed: int
    generations: int
    evaluations: int
    best_fitness: float
    success: bool
    best_genotype: Genotype
    trace: tuple[float, ...] = ()


@dataclass(frozen=True)
class Individual:
    genotype: Genotype
    fitness: float


def replace_parent(parent: Individual, offspring: Sequence[Individual],
                   rng: np.random.Generator) -> Individual:
    """Pick a random best offspring if it is no worse than the parent.

    Equal fitness favours the offspring, so a parent never survives a tie.
    """
    best = min(child.fitness for child in offspring)
    if best > parent.fitness:
        return parent
    ties = [child for child in offspring if child.fitness == best]
    return ties[int(rng.integers(0, len(ties)))]


def run(problem: Problem, params: EvolutionParams, seed: int | np.random.Generator,
        trace: bool = False) -> RunRecord:
    """One (1+lambda) run; deterministic in ``seed``.

    With ``trace`` the parent fitness after every generation is recorded
    (index 0 is the initial parent).
    """
    geometry, fset = problem.geometry, problem.function_set
    fset.check_geometry(geometry)
    params.mutation.check(Genotype(np.zeros(geometry.genotype_length, dtype=np.int64),
                                   geometry, fset))
    if trace and params.max_generations == 0:
        raise GenotypeError("tracing needs a bounded max_generations")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    parent = random_genotype(geometry, fset, rng)
    lo, hi = parent.bounds
    if problem.kind == BOOLEAN:
        t = problem.payload
        kind, words, btarget, mask = K.KIND_BOOLEAN, t.input_words, t.target_words, t.mask
        points, rtarget = _EMPTY_F64, _EMPTY_F64
    else:
        d = problem.payload
        kind, words, btarget, mask = K.KIND_REAL, _EMPTY_U64, _EMPTY_U64, _EMPTY_MASK
        points, rtarget = np.ascontiguousarray(d.inputs), np.ascontiguousarray(d.targets)
    m = params.mutation
    genes, fit, gens, evals, success, history = K.evolve(
        parent.genes, lo, hi, geometry.num_inputs, geometry.num_nodes, geometry.max_arity,
        geometry.num_outputs, fset.arities, fset.opcodes, kind,
        words, btarget, mask, points, rtarget,
        params.lam, float(params.target_fitness), params.max_evaluations, params.max_generations,
        float(m.point_rate), float(m.insertion_rate), float(m.deletion_rate), m.min_active,
        m.use_sagms, geometry.allow_output_to_input, trace, rng,
    )
    return RunRecord(
        seed=-1 if isinstance(seed, np.random.Generator) else int(seed),
        generations=int(gens),
        evaluations=int(evals),
        best_fitness=float(fit),
        success=bool(success),
        best_genotype=parent.with_genes(genes),
        trace=tuple(history.tolist()),
    )
