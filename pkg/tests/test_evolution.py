import math

import numpy as np
import pytest

from cgpmut.core import Geometry, GenotypeError, random_genotype
from cgpmut.evolution import EvolutionParams, Individual, replace_parent, run
from cgpmut.mutation import MutationParams
from cgpmut.problems import make_boolean_problem, make_regression_problem
from conftest import BOOL_SET


@pytest.fixture(scope="module")
def adder():
    return make_boolean_problem("adder2")


@pytest.fixture(scope="module")
def koza():
    return make_regression_problem("koza2", np.random.default_rng(0))


def _ind(fitness, tag=0):
    g = random_genotype(Geometry(1, 1, 2), BOOL_SET, np.random.default_rng(tag))
    return Individual(g, fitness)


def test_replace_keeps_better_parent():
    parent = _ind(3.0)
    assert replace_parent(parent, [_ind(4.0, 1), _ind(5.0, 2)], np.random.default_rng(0)) is parent


def test_replace_takes_better_offspring():
    best = _ind(1.0, 2)
    out = replace_parent(_ind(3.0), [_ind(4.0, 1), best], np.random.default_rng(0))
    assert out is best


def test_replace_prefers_offspring_on_tie():
    parent = _ind(3.0)
    kids = [_ind(3.0, 1), _ind(3.0, 2), _ind(9.0, 3)]
    picks = {id(replace_parent(parent, kids, np.random.default_rng(s))) for s in range(50)}
    assert picks == {id(kids[0]), id(kids[1])}


def test_trivial_target_succeeds_immediately(adder):
    params = EvolutionParams(target_fitness=math.inf, max_generations=100)
    r = run(adder, params, 1)
    assert r.success and r.generations == 0 and r.evaluations == 1


def test_regression_budget(koza):
    params = EvolutionParams(target_fitness=-1.0, max_evaluations=10_000, max_generations=0,
                             mutation=MutationParams(0.2))
    r = run(koza, params, 3)
    assert not r.success
    assert r.evaluations <= 10_000 and r.generations == 2499
    assert r.evaluations == 1 + 4 * r.generations


def test_evaluations_count(adder):
    params = EvolutionParams(max_generations=10_000_000)
    for seed in range(5):
        r = run(adder, params, seed)
        assert r.success and r.best_fitness == 0
        assert r.evaluations == 1 + 4 * r.generations
        assert adder.fitness(r.best_genotype) == 0


def test_runs_are_deterministic(koza):
    params = EvolutionParams(max_evaluations=2000, max_generations=0,
                             mutation=MutationParams(0.2, 0.3, 0.1))
    a, b = run(koza, params, 11), run(koza, params, 11)
    assert a == b
    assert run(koza, params, 12).best_genotype != a.best_genotype


def test_generator_seed(koza):
    params = EvolutionParams(max_evaluations=400, max_generations=0)
    a = run(koza, params, np.random.default_rng(4))
    b = run(koza, params, np.random.default_rng(4))
    assert a.seed == -1 and a.best_fitness == b.best_fitness


def test_best_fitness_is_reported_genotype_fitness(koza):
    params = EvolutionParams(max_evaluations=2000, max_generations=0,
                             mutation=MutationParams(0.2, 0.2, 0.2))
    r = run(koza, params, 5)
    assert koza.fitness(r.best_genotype) == r.best_fitness


def test_zero_rates_keep_parent_fitness(adder):
    params = EvolutionParams(max_generations=500, mutation=MutationParams(0.0))
    r = run(adder, params, 2, trace=True)
    assert len(r.trace) == 501 or r.success
    assert len(set(r.trace)) == 1


@pytest.mark.parametrize("rates", [(0.05, 0.0, 0.0), (0.05, 0.3, 0.3)])
def test_trace_never_increases(adder, rates):
    params = EvolutionParams(max_generations=2000, mutation=MutationParams(*rates))
    r = run(adder, params, 8, trace=True)
    assert all(b <= a for a, b in zip(r.trace, r.trace[1:]))
    assert r.trace[-1] == r.best_fitness


def test_bad_parameters(adder):
    with pytest.raises(GenotypeError):
        EvolutionParams(lam=0)
    with pytest.raises(GenotypeError):
        EvolutionParams(max_evaluations=0, max_generations=0)
    with pytest.raises(GenotypeError):
        run(adder, EvolutionParams(max_evaluations=100, max_generations=0), 0, trace=True)
