import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from cgpmut.core import Genotype, Geometry, random_genotype, validate
from cgpmut.mutation import (
    MutationParams,
    breed_offspring,
    deletion,
    insertion,
    point_mutation,
    single_active_gene_mutation,
)
from conftest import BOOL_SET, MIXED_BOOL_SET, REAL_SET, random_genotypes
import oracles

PARAMS = MutationParams(point_rate=0.0, min_active=4)


def active(g):
    return oracles.reachable(g)


def test_point_rate_zero_is_identity(rng):
    g = random_genotype(Geometry(3, 2, 30), BOOL_SET, rng)
    assert point_mutation(g, 0.0, rng) == g


def test_point_rate_one_changes_every_mutable_gene(rng):
    g = random_genotype(Geometry(3, 2, 30), BOOL_SET, rng)
    child = point_mutation(g, 1.0, rng)
    lo, hi = g.bounds
    mutable = (hi - lo) >= 2
    assert np.all(child.genes[mutable] != g.genes[mutable])
    assert np.all(child.genes[~mutable] == g.genes[~mutable])
    assert validate(child) is None


def test_point_mutation_mean_changed_genes():
    # binomial expectation 92 * 0.05 = 4.6; every adder gene range has >= 3 values
    rng = np.random.default_rng(7)
    g = random_genotype(Geometry(3, 2, 30), BOOL_SET, rng)
    changed = [int(np.sum(point_mutation(g, 0.05, rng).genes != g.genes)) for _ in range(100_000)]
    assert abs(np.mean(changed) - 4.6) < 0.1


def test_sagms_changes_exactly_one_active_gene(rng):
    for g in random_genotypes(rng, 500, MIXED_BOOL_SET):
        child, changed = single_active_gene_mutation(g, rng)
        diff = np.flatnonzero(child.genes != g.genes)
        if not changed:
            assert diff.size == 0
            continue
        assert diff.size == 1
        k = int(diff[0])
        geo = g.geometry
        w = geo.max_arity + 1
        if k >= geo.num_nodes * w:
            continue
        node, slot = divmod(k, w)
        assert node in active(g)
        if slot > 0:
            assert slot <= oracles.arity_of(g, int(g.genes[node * w]))


def test_sagms_forced_function_gene():
    # single input, single node: connection genes have one legal value, output too
    g = Genotype([0, 0, 0, 1], Geometry(1, 1, 1), BOOL_SET)
    child, changed = single_active_gene_mutation(g, np.random.default_rng(0))
    assert changed and child.genes[0] != 0 and list(child.genes[1:]) == [0, 0, 1]


def test_sagms_no_mutable_gene_is_flagged():
    fs = BOOL_SET.__class__(("AND",), BOOL_SET.kind)
    g = Genotype([0, 0, 0, 1], Geometry(1, 1, 1), fs)
    child, changed = single_active_gene_mutation(g, np.random.default_rng(0))
    assert not changed and child == g


def test_sagms_positions_uniform():
    rng = np.random.default_rng(3)
    g = random_genotype(Geometry(3, 2, 30), BOOL_SET, rng)
    counts = {}
    for _ in range(10_000):
        child, _ = single_active_gene_mutation(g, rng)
        k = int(np.flatnonzero(child.genes != g.genes)[0])
        counts[k] = counts.get(k, 0) + 1
    w = 3
    expected_positions = {n * w for n in active(g)} | {n * w + s for n in active(g) for s in (1, 2)
                                                       if g.bounds[1][n * w + s] > 1}
    expected_positions |= {30 * w + k for k in range(2)}
    assert set(counts) == expected_positions
    _, p = sps.chisquare(list(counts.values()))
    assert p > 0.001


def test_insertion_all_active_unchanged():
    # x0 -> n0 -> n1 -> n2 -> out, every node active
    geo = Geometry(1, 1, 3)
    g = Genotype([0, 0, 0, 1, 1, 1, 2, 2, 2, 3], geo, BOOL_SET)
    child, changed = insertion(g, PARAMS, np.random.default_rng(0))
    assert not changed and child == g


def test_insertion_splice_structure():
    # n0 = AND(x0, x1) active, n1 inactive, n2 = OR(n0, x1) -> output
    geo = Geometry(2, 1, 3)
    g = Genotype([0, 0, 1, 2, 1, 0, 1, 2, 1, 4], geo, BOOL_SET)
    assert active(g) == {0, 2}
    for seed in range(20):
        child, changed = insertion(g, PARAMS, np.random.default_rng(seed))
        assert changed
        assert active(child) == {0, 1, 2}
        n2 = list(child.genes[6:9])
        site = 1 if n2[1] == 3 else 2
        assert n2[site] == 3
        former = g.genes[6 + site]
        assert child.genes[4] == former                       # M's first input
        assert child.genes[5] in (0, 1, 2)                    # inputs or active n0
        assert child.genes[3] == g.genes[3]                    # function gene untouched
        assert np.array_equal(np.delete(child.genes, [4, 5, 6 + site]),
                              np.delete(g.genes, [4, 5, 6 + site]))


def test_insertion_adds_exactly_one_node(rng):
    hits = 0
    for g in random_genotypes(rng, 2000, MIXED_BOOL_SET):
        before = active(g)
        child, changed = insertion(g, PARAMS, rng)
        after = active(child)
        assert validate(child) is None
        if len(before) == g.geometry.num_nodes:
            assert not changed and child == g
            continue
        hits += 1
        assert changed
        assert before < after and len(after) == len(before) + 1
    assert hits > 1000


def test_insertion_on_real_set(rng):
    for g in random_genotypes(rng, 500, REAL_SET, max_inputs=2, max_nodes=10):
        before = active(g)
        child, changed = insertion(g, PARAMS, rng)
        assert changed == (len(before) < g.geometry.num_nodes)
        assert len(active(child)) == len(before) + int(changed)


def test_deletion_respects_floor():
    # exactly four active nodes: x0 -> n0 -> n1 -> n2 -> n3 -> out
    geo = Geometry(1, 1, 6)
    genes = [0, 0, 0, 0, 1, 1, 0, 2, 2, 0, 3, 3, 0, 0, 0, 0, 0, 0, 4]
    g = Genotype(genes, geo, BOOL_SET)
    assert active(g) == {0, 1, 2, 3}
    child, changed = deletion(g, MutationParams(min_active=4), np.random.default_rng(0))
    assert not changed and child == g


def test_deletion_splice_structure():
    # n0 = AND(x0, x0), n1 = OR(n0, n0), n2 = XOR(n1, x0) -> output; all unit candidates
    geo = Geometry(1, 1, 3)
    g = Genotype([0, 0, 0, 1, 1, 1, 2, 2, 0, 3], geo, BOOL_SET)
    seen = set()
    for seed in range(40):
        child, changed = deletion(g, MutationParams(min_active=1), np.random.default_rng(seed))
        assert changed
        gone = active(g) - active(child)
        assert len(gone) == 1 and active(child) < active(g)
        (m,) = gone
        seen.add(m)
        first_input = g.genes[m * 3 + 1]
        for j in range(m + 1, 3):
            for s in (1, 2):
                if g.genes[j * 3 + s] == 1 + m:
                    assert child.genes[j * 3 + s] == first_input
        if g.genes[-1] == 1 + m:
            assert child.genes[-1] == first_input
    assert seen == {0, 1, 2}


def test_deletion_output_never_targets_input():
    # n0 = AND(x0, x0), n1 = OR(x0, n0); outputs read n1 and n0. Either splice
    # would hand an output the program input x0.
    geo = Geometry(1, 2, 3)
    g = Genotype([0, 0, 0, 1, 0, 1, 0, 0, 0, 2, 1], geo, BOOL_SET)
    for seed in range(20):
        child, changed = deletion(g, MutationParams(min_active=1), np.random.default_rng(seed))
        assert changed and validate(child) is None
        assert all(o >= 1 for o in child.output_genes)
        assert len(active(child)) == 1


def test_deletion_properties(rng):
    params = MutationParams(min_active=4)
    unit_cases = 0
    for g in random_genotypes(rng, 2000, MIXED_BOOL_SET):
        before = active(g)
        child, changed = deletion(g, params, rng)
        after = active(child)
        assert validate(child) is None
        assert after <= before
        if len(before) <= 4:
            assert not changed and child == g
            continue
        if changed:
            assert len(after) >= 4
        if oracles.has_unit_deletion(g, before):
            unit_cases += 1
            assert changed and len(before - after) == 1
    assert unit_cases > 300


def test_operators_do_not_modify_input(rng):
    g = random_genotype(Geometry(3, 2, 30), BOOL_SET, rng)
    snapshot = g.genes.copy()
    point_mutation(g, 0.5, rng)
    single_active_gene_mutation(g, rng)
    insertion(g, PARAMS, rng)
    deletion(g, PARAMS, rng)
    breed_offspring(g, MutationParams(0.5, 1.0, 1.0), rng)
    assert np.array_equal(g.genes, snapshot)


def test_breed_zero_rates_identity(rng):
    g = random_genotype(Geometry(3, 2, 30), BOOL_SET, rng)
    assert breed_offspring(g, MutationParams(0.0, 0.0, 0.0), rng) == g


def test_breed_insertion_only(rng):
    params = MutationParams(0.0, 1.0, 0.0)
    for g in random_genotypes(rng, 300, BOOL_SET, max_nodes=30):
        before = active(g)
        if len(before) == g.geometry.num_nodes:
            continue
        assert len(active(breed_offspring(g, params, rng))) == len(before) + 1


def test_breed_insert_then_delete_bounded_drift(rng):
    params = MutationParams(0.0, 1.0, 1.0, min_active=4)
    n = 0
    for g in random_genotypes(rng, 3000, BOOL_SET, max_nodes=30):
        before = active(g)
        if len(before) == g.geometry.num_nodes:
            continue
        n += 1
        child = breed_offspring(g, params, rng)
        assert len(active(child)) - len(before) in (-1, 0, 1)
        if n == 1000:
            break
    assert n == 1000


def test_mutation_params_validation():
    with pytest.raises(ValueError):
        MutationParams(point_rate=1.5)
    with pytest.raises(ValueError):
        MutationParams(insertion_rate=-0.1)


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), rates=st.tuples(st.floats(0, 1), st.floats(0, 1),
                                                      st.floats(0, 1)),
       sagms=st.booleans())
def test_breed_preserves_validity(seed, rates, sagms):
    rng = np.random.default_rng(seed)
    g = random_genotype(Geometry(int(rng.integers(1, 5)), int(rng.integers(1, 4)),
                                 int(rng.integers(1, 31))), MIXED_BOOL_SET, rng)
    params = MutationParams(*rates, min_active=2, use_sagms=sagms)
    child = breed_offspring(g, params, rng)
    assert validate(child) is None and len(child) == len(g)
