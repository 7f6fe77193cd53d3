"""Random energy landscapes: depth laws, thresholds, determinism."""

import math

import mpmath
import numpy as np
import pytest
from scipy import stats

from agelab import graphs, landscape


def test_exponential_depths_are_pareto():
    scape = landscape.sample_landscape(graphs.complete(200000),
                                       "exponential", 2.0, seed=5)
    rows = landscape.depth_tail_check(scape, [1.5, 4.0, 16.0, 64.0, 256.0])
    for a, emp, exact, se, z in rows:
        assert abs(z) < 4.0, (a, emp, exact, z)


def test_depth_tail_check_requires_exponential():
    scape = landscape.sample_landscape(graphs.complete(100), "gaussian",
                                       2.0, seed=5)
    with pytest.raises(ValueError):
        landscape.depth_tail_check(scape, [2.0])


def test_energies_are_positive_exponential_mean_one():
    scape = landscape.sample_landscape(graphs.complete(100000),
                                       "exponential", 3.0, seed=11)
    e = scape.energies
    assert np.all(e >= 0)
    assert abs(e.mean() - 1.0) < 4.0 / math.sqrt(len(e))
    assert np.allclose(scape.depths, np.exp(3.0 * e))


def test_gaussian_energies_standard_normal():
    scape = landscape.sample_landscape(graphs.hypercube(17), "gaussian",
                                       2.0, seed=13)
    e = scape.energies
    n = len(e)
    assert n == 2**17
    assert abs(e.mean()) < 4.0 / math.sqrt(n)
    assert abs(e.std() - 1.0) < 4.0 / math.sqrt(n)
    # third moment distinguishes gaussian from exponential immediately
    assert abs(stats.skew(e)) < 0.1


def test_alpha_is_inverse_beta():
    scape = landscape.sample_landscape(graphs.segment(10), "exponential",
                                       2.5, seed=1)
    assert scape.alpha == pytest.approx(0.4)


def test_same_seed_same_landscape():
    a = landscape.sample_landscape(graphs.segment(50), "exponential", 2.0, 9)
    b = landscape.sample_landscape(graphs.segment(50), "exponential", 2.0, 9)
    c = landscape.sample_landscape(graphs.segment(50), "exponential", 2.0, 10)
    assert np.array_equal(a.energies, b.energies)
    assert not np.array_equal(a.energies, c.energies)


def test_rejects_unknown_distribution():
    with pytest.raises(ValueError):
        landscape.sample_landscape(graphs.segment(5), "cauchy", 2.0, 1)


def test_extreme_value_threshold_formula():
    """Cross-check against an independent high-precision evaluation."""
    mpmath.mp.dps = 40
    for N in (8, 16, 24, 64):
        for E in (-3.0, -1.0, 0.0, 2.0):
            got = landscape.extreme_value_threshold(N, E)
            ln2 = mpmath.log(2)
            base = mpmath.sqrt(2 * N * ln2)
            want = (base + E / base
                    - (mpmath.log(N * ln2) + mpmath.log(4 * mpmath.pi))
                    / (2 * base))
            assert abs(got - float(want)) < 1e-12, (N, E)


def test_extreme_value_threshold_calibrates_tail():
    """2^N * P(X > u_N(E)) -> e^{-E}: the threshold picks out an expected
    Poisson number of exceedances."""
    mpmath.mp.dps = 40
    for E in (-2.0, 0.0, 1.0):
        errs = []
        for N in (16, 64, 256):
            u = landscape.extreme_value_threshold(N, E)
            tail = mpmath.erfc(u / mpmath.sqrt(2)) / 2
            errs.append(abs(float(2**N * tail) - math.exp(-E)))
        assert errs[-1] < errs[0]
        assert errs[-1] < 0.05 * math.exp(-E)
