import itertools
import math

import numpy as np
import pytest

from permcap.combinatorics import GroupSizes, swap_distance
from permcap.errors import DomainError, OrbitTooLargeError
from permcap.estimators import StandardizedPair, standardized_labels
from permcap.inclusion import SubsphereContext, single_inclusion
from permcap.oracle import (
    OracleConfig,
    exact_p,
    labels_at_swap_distances,
    make_rng,
    mc_p,
    orbit_subsets,
    orbit_vectors,
    sample_centered_sphere,
    sample_subsphere,
    sample_uniform_sphere,
)


def naive_p(labels, y, sided):
    """Textbook permutation p-value on the difference of group means."""
    labels = np.asarray(labels)
    n, m1 = labels.size, int(labels.sum())

    def stat(ones):
        mask = np.zeros(n, bool)
        mask[list(ones)] = True
        return y[mask].mean() - y[~mask].mean()

    obs = stat(np.flatnonzero(labels))
    vals = np.array([stat(c) for c in itertools.combinations(range(n), m1)])
    tol = 1e-9 * np.abs(vals).max()
    if sided == "one":
        return np.mean(vals >= obs - tol)
    return np.mean(np.abs(vals) >= abs(obs) - tol)


class TestExactP:
    @pytest.mark.parametrize("seed", range(4))
    @pytest.mark.parametrize("sided", ["one", "two"])
    def test_matches_textbook_statistic(self, seed, sided):
        rng = np.random.default_rng(seed)
        labels = rng.permutation([0] * 5 + [1] * 4)
        y = rng.exponential(size=9) + labels
        sp = StandardizedPair.from_data(labels, y)
        assert exact_p(sp, sided) == pytest.approx(naive_p(labels, y, sided), abs=1e-15)

    def test_ties_count_as_extreme(self):
        labels = np.array([0, 0, 1, 1])
        y = np.array([0.0, 1.0, 0.0, 1.0])
        sp = StandardizedPair.from_data(labels, y)
        # every allocation with one 0 and one 1 ties the observed statistic
        assert exact_p(sp, "one") == pytest.approx(5 / 6)

    def test_orbit_limit(self):
        sp = StandardizedPair.from_data(np.array([0] * 12 + [1] * 12), np.arange(24.0))
        with pytest.raises(OrbitTooLargeError):
            exact_p(sp, "one", OracleConfig(max_exact_orbit=1000))


class TestMonteCarloP:
    def test_close_to_exact(self):
        rng = np.random.default_rng(8)
        labels = np.array([0] * 8 + [1] * 8)
        y = rng.standard_normal(16) + 0.6 * labels
        sp = StandardizedPair.from_data(labels, y)
        p, se = mc_p(sp, "two", OracleConfig(mc_draws=50_000, seed=3))
        assert abs(p - exact_p(sp, "two")) <= 4 * se

    def test_floor_and_reproducibility(self):
        labels = np.array([0] * 10 + [1] * 10)
        sp = StandardizedPair.from_data(labels, labels + 1e-3 * np.arange(20))
        cfg = OracleConfig(mc_draws=1000, seed=11)
        p, _ = mc_p(sp, "one", cfg)
        assert p == 1 / 1000
        assert mc_p(sp, "one", cfg) == (p, _)

    def test_config_validation(self):
        with pytest.raises(DomainError):
            OracleConfig(mc_draws=0)
        with pytest.raises(DomainError):
            OracleConfig(seed=-1)


class TestRandomStreams:
    def test_streams_are_reproducible_and_distinct(self):
        a = make_rng(5, 0).random(4)
        np.testing.assert_array_equal(a, make_rng(5, 0).random(4))
        assert not np.array_equal(a, make_rng(5, 1).random(4))
        assert not np.array_equal(a, make_rng(6, 0).random(4))

    def test_large_seed(self):
        make_rng(2**64 - 1, 3).random()


class TestSamplers:
    def test_uniform_sphere_moments(self):
        z = sample_uniform_sphere(4, 100_000, seed=1)
        np.testing.assert_allclose(np.linalg.norm(z, axis=1), 1.0, atol=1e-14)
        np.testing.assert_allclose(z.mean(axis=0), 0.0, atol=4 / math.sqrt(5 * 100_000))
        np.testing.assert_allclose((z**2).mean(axis=0), 0.2, atol=0.005)

    def test_centered_sphere(self):
        z = sample_centered_sphere(7, 1000, seed=2)
        np.testing.assert_allclose(z.sum(axis=1), 0.0, atol=1e-14)
        np.testing.assert_allclose(np.linalg.norm(z, axis=1), 1.0, atol=1e-14)

    def test_subsphere_constraints(self):
        xc = standardized_labels([0, 0, 0, 1, 1, 1, 1])
        y = sample_subsphere(xc, 0.37, 500, seed=3)
        np.testing.assert_allclose(y @ xc, 0.37, atol=1e-14)
        np.testing.assert_allclose(y.sum(axis=1), 0.0, atol=1e-14)
        np.testing.assert_allclose(np.linalg.norm(y, axis=1), 1.0, atol=1e-14)

    def test_subsphere_degenerate(self):
        xc = standardized_labels([0, 1, 0, 1])
        np.testing.assert_allclose(sample_subsphere(xc, -1.0, 3, seed=0), np.tile(-xc, (3, 1)))

    def test_subsphere_dimension(self):
        """The residual lives on S^(n-3): tails against an orthogonal direction match S^(d-1) caps."""
        g = GroupSizes(4, 5)
        xc = standardized_labels([0] * 4 + [1] * 5)
        w = sample_subsphere(xc, 0.0, 1, seed=9)[0]
        rt = 0.5
        y = sample_subsphere(xc, rt, 200_000, seed=4)
        for s in (0.1, 0.3, 0.6):
            ev = (y @ w >= s).astype(float)
            se = ev.std(ddof=1) / math.sqrt(ev.size)
            assert abs(single_inclusion(0.0, SubsphereContext(g.d, rt, s)) - ev.mean()) <= 4 * se

    def test_subsphere_rejects_bad_center(self):
        with pytest.raises(DomainError):
            sample_subsphere(np.ones(4), 0.1, 2, seed=0)


class TestOrbit:
    def test_orbit_vectors(self):
        g = GroupSizes(3, 4)
        v = orbit_vectors(g)
        assert v.shape == (35, 7)
        np.testing.assert_allclose(v @ v.T, v @ v.T)  # finite
        np.testing.assert_allclose(np.diag(v @ v.T), 1.0, atol=1e-14)
        assert len({tuple(r) for r in orbit_subsets(7, 4)}) == 35

    @pytest.mark.parametrize("r1,r2,r3", [(1, 1, 1), (1, 1, 2), (2, 3, 1), (3, 3, 2), (2, 2, 4)])
    def test_labels_at_distances(self, r1, r2, r3):
        g = GroupSizes(5, 6)
        c, a, b = labels_at_swap_distances(g, r1, r2, r3)
        assert (swap_distance(c, a), swap_distance(c, b), swap_distance(a, b)) == (r1, r2, r3)

    def test_unattainable(self):
        with pytest.raises(DomainError):
            labels_at_swap_distances(GroupSizes(3, 3), 3, 3, 2)
