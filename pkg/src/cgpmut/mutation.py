"""Point, single-active-gene, insertion and deletion mutation.

All operators return new genotypes; inputs are never modified. The phenotypic
operators (and single-active-gene mutation) also return a flag that is False
when the call was a no-op.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .core import Genotype, GenotypeError


@dataclass(frozen=True)
class MutationParams:
    point_rate: float = 0.05
    insertion_rate: float = 0.0
    deletion_rate: float = 0.0
    min_active: int = 4
    use_sagms: bool = False

    def __post_init__(self):
        for name in ("point_rate", "insertion_rate", "deletion_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise GenotypeError(f"{name} must lie in [0, 1], got {value}")
        if self.min_active < 0:
            raise GenotypeError(f"min_active must be >= 0, got {self.min_active}")

    def check(self, genotype: Genotype) -> None:
        if not genotype.geometry.allow_output_to_input and self.min_active < 1:
            raise GenotypeError("min_active must be >= 1 when outputs cannot read inputs")


def _shape(genotype: Genotype):
    g = genotype.geometry
    return g.num_inputs, g.num_nodes, g.max_arity, g.num_outputs, genotype.function_set.arities


def point_mutation(genotype: Genotype, rate: float, rng: np.random.Generator) -> Genotype:
    """Resample each gene with probability ``rate`` to a different legal value."""
    lo, hi = genotype.bounds
    return genotype.with_genes(K.point_mutate(genotype.genes, lo, hi, float(rate), rng))


def single_active_gene_mutation(genotype: Genotype,
                                rng: np.random.Generator) -> tuple[Genotype, bool]:
    lo, hi = genotype.bounds
    genes, changed = K.single_active_mutate(genotype.genes, lo, hi, *_shape(genotype), rng)
    return genotype.with_genes(genes), bool(changed)


def insertion(genotype: Genotype, params: MutationParams | None,
              rng: np.random.Generator) -> tuple[Genotype, bool]:
    """Activate one inactive node by splicing it in front of an active reader.

    The chosen node ``m`` takes over a connection (or output) gene that pointed
    below ``m``; the old target becomes ``m``'s first input and its other inputs
    are drawn from program inputs and already-active nodes, so nothing besides
    ``m`` changes state. With every node active the genotype is returned as is.
    """
    genes, changed = K.insert_node(genotype.genes, *_shape(genotype), rng)
    return genotype.with_genes(genes), bool(changed)


def deletion(genotype: Genotype, params: MutationParams,
             rng: np.random.Generator) -> tuple[Genotype, bool]:
    """Deactivate one active node by routing its readers to its first input.

    Only nodes whose removal deactivates nothing else are eligible; if there
    are none, the splice losing the fewest nodes is used as long as
    ``params.min_active`` still holds. At or below the floor this is a no-op.
    """
    params.check(genotype)
    genes, changed = K.delete_node(
        genotype.genes, *_shape(genotype), params.min_active,
        genotype.geometry.allow_output_to_input, rng,
    )
    return genotype.with_genes(genes), bool(changed)


def breed_offspring(parent: Genotype, params: MutationParams,
                    rng: np.random.Generator) -> Genotype:
    """Point (or single-active-gene) mutation, then insertion and deletion,
    each phenotypic operator firing with its own per-offspring probability."""
    params.check(parent)
    lo, hi = parent.bounds
    g = parent.geometry
    genes = K.breed(
        parent.genes, lo, hi, *_shape(parent), float(params.point_rate),
        float(params.insertion_rate), float(params.deletion_rate), params.min_active,
        params.use_sagms, g.allow_output_to_input, rng,
    )
    return parent.with_genes(genes)
