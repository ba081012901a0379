import itertools
import math
from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from cgpmut.stats import (
    DAGGER,
    DOUBLE_DAGGER,
    NO_MARKER,
    exact_p,
    mann_whitney_u,
    marker_for,
    midranks,
    normal_p,
    summarize_cell,
)
import oracles


@dataclass
class R:
    generations: int
    best_fitness: float = 0.0
    success: bool = True


def test_midranks_with_ties():
    assert list(midranks(np.array([3.0, 1.0, 3.0, 2.0]))) == [3.5, 1.0, 3.5, 2.0]


def test_fully_separated_triplets():
    u, p = mann_whitney_u([1, 2, 3], [4, 5, 6])
    assert u == 0.0
    assert p == pytest.approx(0.1, abs=1e-12)


def test_self_comparison():
    a = [3.0, 1.0, 4.0, 1.5, 9.0, 2.6]
    u, p = mann_whitney_u(a, a)
    assert u == len(a) ** 2 / 2 and p == 1.0


def test_exact_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(150):
        na, nb = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        # small integer range so ties are common
        a = rng.integers(0, 5, na).astype(float)
        b = rng.integers(0, 5, nb).astype(float)
        assert exact_p(a, b) == pytest.approx(oracles.exact_mann_whitney_p(a, b), abs=1e-12)


def test_exact_matches_scipy_without_ties():
    rng = np.random.default_rng(1)
    for _ in range(50):
        na, nb = int(rng.integers(2, 9)), int(rng.integers(2, 9))
        pooled = rng.permutation(40)[:na + nb].astype(float)
        a, b = pooled[:na], pooled[na:]
        want = sps.mannwhitneyu(a, b, alternative="two-sided", method="exact").pvalue
        assert exact_p(a, b) == pytest.approx(want, abs=1e-12)


def test_normal_matches_scipy_asymptotic():
    rng = np.random.default_rng(2)
    for _ in range(50):
        a = rng.integers(0, 20, 30).astype(float)
        b = rng.integers(3, 25, 40).astype(float)
        want = sps.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic",
                                use_continuity=True).pvalue
        assert normal_p(a, b) == pytest.approx(want, abs=1e-12)


def test_ten_by_ten_normal_close_to_exact():
    worst = 0.0
    for a in itertools.islice(itertools.combinations(range(20), 10), 0, None, 97):
        b = [x for x in range(20) if x not in a]
        worst = max(worst, abs(normal_p(a, b) - exact_p(a, b)))
    assert worst < 0.02


def test_auto_method_switch():
    small = mann_whitney_u(range(8), range(5, 30))
    assert small.p == exact_p(range(8), range(5, 30))
    large = mann_whitney_u(range(9), range(5, 30))
    assert large.p == normal_p(range(9), range(5, 30))


def test_empty_and_unknown_method():
    with pytest.raises(ValueError):
        mann_whitney_u([], [1.0])
    with pytest.raises(ValueError):
        mann_whitney_u([1.0], [2.0], method="magic")


@settings(max_examples=200, deadline=None)
@given(a=st.lists(st.integers(0, 10), min_size=1, max_size=12),
       b=st.lists(st.integers(0, 10), min_size=1, max_size=12))
def test_symmetry_and_range(a, b):
    ab, ba = mann_whitney_u(a, b), mann_whitney_u(b, a)
    assert ab.u == ba.u
    assert ab.p == pytest.approx(ba.p, abs=1e-12)
    assert 0.0 <= ab.p <= 1.0
    assert 0.0 <= ab.u <= len(a) * len(b) / 2


def test_growing_shift_drives_p_down():
    rng = np.random.default_rng(3)
    base = rng.normal(size=40)
    ps = [mann_whitney_u(base, base + s).p for s in (0.0, 0.5, 1.0, 2.0, 4.0)]
    assert ps[-1] < 1e-10
    assert all(b <= a + 1e-12 for a, b in zip(ps, ps[1:]))


@pytest.mark.parametrize("p,marker", [(0.001, DOUBLE_DAGGER), (0.0099, DOUBLE_DAGGER),
                                      (0.01, DAGGER), (0.049, DAGGER), (0.05, NO_MARKER),
                                      (None, NO_MARKER), (math.nan, NO_MARKER)])
def test_markers(p, marker):
    assert marker_for(p) == marker


def test_summary_of_constant_cell():
    base = [R(g) for g in (10, 20, 30)]
    cell = [R(20) for _ in range(5)]
    s = summarize_cell(cell, base, "generations", 0.1, 0.0)
    assert s.mean == 20 and s.median == 20 and s.std_dev == 0.0
    assert s.insertion_rate == 0.1 and s.n_runs == 5


def test_summary_separated_cells_get_double_dagger():
    base = [R(g) for g in range(1000, 1100)]
    cell = [R(g) for g in range(100)]
    s = summarize_cell(cell, base, "generations", 0.1, 0.0)
    assert s.p_value < 0.01 and s.marker == DOUBLE_DAGGER and s.u_statistic == 0.0
    assert s.formatted_mean(0).endswith("‡")


def test_summary_excludes_failed_runs_for_generations():
    base = [R(10), R(12), R(14)]
    cell = [R(5), R(7), R(10_000_000, success=False)]
    s = summarize_cell(cell, base, "generations")
    assert s.excluded == 1 and s.n_runs == 2 and s.mean == 6
    f = summarize_cell(cell, base, "best_fitness")
    assert f.excluded == 0 and f.n_runs == 3


def test_summary_all_excluded():
    s = summarize_cell([R(9, success=False)], [R(3)], "generations")
    assert math.isnan(s.mean) and s.p_value is None and s.formatted_mean() == "n/a"


def test_baseline_cell_has_no_test():
    base = [R(1), R(2)]
    s = summarize_cell(base, base, "generations", is_baseline=True)
    assert s.p_value is None and s.u_statistic is None and s.marker == NO_MARKER


def test_sample_std():
    base = [R(0)]
    cell = [R(0, best_fitness=v) for v in (1.0, 2.0, 3.0, 4.0)]
    s = summarize_cell(cell, base, "best_fitness")
    assert s.std_dev == pytest.approx(np.std([1, 2, 3, 4], ddof=1))


@pytest.mark.parametrize("n", [3, 20])
def test_all_identical_values(n):
    assert mann_whitney_u([7.0] * n, [7.0] * (n + 1)).p == 1.0
