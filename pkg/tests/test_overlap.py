from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topoprune.overlap import (
    monte_carlo_overlap,
    overlap_count_for_fraction,
    overlap_lower_bound,
    overlap_lower_bound_sparse,
    random_overlap_pmf,
    random_overlap_tail,
    trial_generator,
)

from _oracles import exact_bound, exact_pmf


def test_bound_100_10():
    assert overlap_lower_bound(100, 10) == pytest.approx(0.04909, abs=1e-5)
    assert overlap_lower_bound(100, 10) == pytest.approx(float(exact_bound(100, 10)), rel=1e-13)


def test_bound_thin_layer_is_one():
    assert overlap_lower_bound(784, 1) == 1.0
    assert overlap_lower_bound(1, 5) == 1.0


def test_bound_2_2():
    # (4/4 + 1/3 + 0/2) / 3
    assert overlap_lower_bound(2, 2) == pytest.approx(4 / 9, rel=1e-15)


@pytest.mark.parametrize("m,n", [(8, 8), (32, 16), (100, 100), (784, 100), (3, 17)])
def test_bound_matches_exact(m, n):
    assert overlap_lower_bound(m, n) == pytest.approx(float(exact_bound(m, n)), rel=1e-13)


def test_sparse_reduces_to_dense():
    assert overlap_lower_bound_sparse(100, 10, 1.0) == overlap_lower_bound(100, 10)


def test_sparse_100_10_fifth():
    expected = exact_bound(100, 10, Fraction(1, 5))
    assert overlap_lower_bound_sparse(100, 10, 0.2) == pytest.approx(float(expected), rel=1e-13)
    assert round(float(expected), 5) == 0.24841


def test_sparse_clamps_at_one():
    p = 15 / 64
    assert exact_bound(8, 8, Fraction(15, 64)) == 1
    assert overlap_lower_bound_sparse(8, 8, p) == 1.0


def test_sparse_4_4_smallest_valid_p_stays_below_one():
    # the sum only reaches 0.69 here; a 4x4 layer never hits the clamp
    p = 7 / 16
    assert overlap_lower_bound_sparse(4, 4, p) == pytest.approx(float(exact_bound(4, 4, Fraction(7, 16))))
    assert overlap_lower_bound_sparse(4, 4, p) < 1.0


def test_sparse_rejects_too_few_weights():
    with pytest.raises(ValueError, match="spanning tree"):
        overlap_lower_bound_sparse(100, 10, 0.1)


@pytest.mark.parametrize("p", [0.0, -0.5, 1.5])
def test_sparse_rejects_bad_fraction(p):
    with pytest.raises(ValueError):
        overlap_lower_bound_sparse(10, 10, p)


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 60), st.integers(2, 60), st.floats(0, 1), st.floats(0, 1))
def test_sparse_non_increasing_in_p(m, n, a, b):
    p_min = (m + n - 1) / (m * n)
    lo, hi = sorted((p_min + (1 - p_min) * a, p_min + (1 - p_min) * b))
    assert overlap_lower_bound_sparse(m, n, hi) <= overlap_lower_bound_sparse(m, n, lo) + 1e-15
    assert 0 <= overlap_lower_bound_sparse(m, n, hi) <= 1


def test_pmf_reference_values():
    assert random_overlap_pmf(100, 10, 109, 5) == pytest.approx(0.011, abs=1e-3)
    assert random_overlap_pmf(100, 100, 199, 9) == pytest.approx(0.012, abs=1e-3)
    assert random_overlap_tail(100, 10, 109, 5) == pytest.approx(0.994, abs=2e-3)
    assert random_overlap_tail(100, 100, 199, 9) == pytest.approx(0.019, abs=2e-3)


def test_pmf_forty_percent_values():
    # reference values carry 3 significant figures
    assert random_overlap_pmf(100, 100, 199, 79) == pytest.approx(2.40e-79, rel=5e-3)
    assert random_overlap_pmf(100, 10, 109, 43) == pytest.approx(8.79e-15, rel=5e-3)
    assert random_overlap_tail(100, 100, 199, 79) == pytest.approx(2.48e-79, rel=5e-3)
    assert random_overlap_tail(100, 10, 109, 43) == pytest.approx(1.07e-14, rel=5e-3)


def test_pmf_784_100_magnitude():
    # the reference mantissas 7.4 and 9.4 appear at 1e-16
    w = overlap_count_for_fraction(0.05, 883)
    assert w == 44
    assert random_overlap_pmf(784, 100, 883, w) == pytest.approx(7.4e-16, rel=1e-2)
    assert random_overlap_tail(784, 100, 883, w) == pytest.approx(9.4e-16, rel=1e-2)


@pytest.mark.parametrize("m,n,alpha,w", [(100, 10, 109, 5), (100, 100, 199, 9), (7, 3, 9, 4), (5, 5, 9, 0)])
def test_pmf_matches_exact(m, n, alpha, w):
    assert random_overlap_pmf(m, n, alpha, w) == pytest.approx(float(exact_pmf(m, n, alpha, w)), rel=1e-11)


def test_pmf_full_subsets():
    assert random_overlap_pmf(3, 4, 12, 12) == 1.0
    assert random_overlap_pmf(3, 4, 12, 11) == 0.0


def test_pmf_empty_subsets():
    assert random_overlap_pmf(3, 4, 0, 0) == 1.0


@pytest.mark.parametrize("m,n", [(100, 10), (100, 100), (8, 8), (784, 100)])
def test_pmf_sums_to_one_and_tail_consistent(m, n):
    alpha = m + n - 1
    pmf = [random_overlap_pmf(m, n, alpha, w) for w in range(alpha + 1)]
    assert sum(pmf) == pytest.approx(1.0, abs=1e-9)
    tails = [random_overlap_tail(m, n, alpha, w) for w in range(alpha + 1)]
    assert tails[0] == 1.0
    assert all(a >= b for a, b in zip(tails, tails[1:]))
    for w in range(0, alpha + 1, max(1, alpha // 17)):
        assert tails[w] == pytest.approx(sum(pmf[w:]), abs=1e-9)


def test_pmf_argument_checks():
    with pytest.raises(ValueError):
        random_overlap_pmf(2, 2, 5, 1)
    with pytest.raises(ValueError):
        random_overlap_pmf(4, 4, 5, 6)


@pytest.mark.parametrize("frac,alpha,expected", [(0.05, 109, 5), (0.05, 199, 9), (0.4, 199, 79),
                                                 (0.29, 100, 29), (1, 7, 7), (0, 7, 0)])
def test_overlap_count_for_fraction(frac, alpha, expected):
    assert overlap_count_for_fraction(frac, alpha) == expected


def test_monte_carlo_thin_layer_is_exact():
    for dist in ("uniform01", "gaussian-abs"):
        est = monte_carlo_overlap(25, 1, dist=dist, trials=10, seed=3)
        assert est.mean_overlap == 1.0
        assert est.std_dev == 0.0


def test_monte_carlo_above_bound_100_10():
    est = monte_carlo_overlap(100, 10, trials=200, seed=42)
    assert est.mean_overlap - 3 * est.standard_error >= overlap_lower_bound(100, 10)


def test_monte_carlo_deterministic():
    a = monte_carlo_overlap(20, 12, trials=15, seed=42)
    b = monte_carlo_overlap(20, 12, trials=15, seed=42)
    assert a.fractions.tobytes() == b.fractions.tobytes()
    c = monte_carlo_overlap(20, 12, trials=15, seed=43)
    assert a.fractions.tobytes() != c.fractions.tobytes()


def test_monte_carlo_trials_are_schedule_independent():
    # a run's prefix equals a shorter run: each trial owns its stream
    long = monte_carlo_overlap(10, 10, trials=12, seed=9)
    short = monte_carlo_overlap(10, 10, trials=5, seed=9)
    np.testing.assert_array_equal(long.fractions[:5], short.fractions)
    g1 = trial_generator(9, 3).random(4)
    g2 = trial_generator(9, 3).random(4)
    np.testing.assert_array_equal(g1, g2)


def test_monte_carlo_estimate_fields():
    est = monte_carlo_overlap(6, 5, trials=8, seed=1)
    d = est.to_dict()
    assert d["trials"] == 8 and len(d["fractions"]) == 8
    assert 0 <= d["mean_overlap"] <= 1
    assert d["standard_error"] == pytest.approx(d["std_dev"] / np.sqrt(8))


def test_monte_carlo_unknown_distribution():
    with pytest.raises(ValueError, match="unknown distribution"):
        monte_carlo_overlap(4, 4, dist="cauchy", trials=1, seed=0)
