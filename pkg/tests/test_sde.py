"""Euler chains: determinism, moments, radial drifts, and the
n-dimensional isotropic diffusion."""

import math

import numpy as np
import pytest

from escrate.errors import DomainError, NonFiniteState
from escrate.profiles import ManifoldModel, RadialCoefficient
from escrate.sde import (
    HyperbolicBound,
    Sde1D,
    ensemble,
    euclidean_diffusion_nd,
    euler_path,
    radial_drift,
)


def zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def one(x):
    return np.ones_like(np.asarray(x, dtype=float))


class TestEulerPath:
    def test_deterministic_ode_limit(self):
        s = Sde1D(drift=one, sigma=zero, floor=1e-6, sigma_const=0.0)
        path = euler_path(s, 1e-6, 5.0, 1e-3, seed=3)
        assert path[-1] == pytest.approx(1e-6 + 5.0, abs=1e-9)
        assert path.size == 5001

    def test_same_seed_same_path(self):
        s = Sde1D(drift=zero)
        a = euler_path(s, 10.0, 1.0, 1e-2, seed=11)
        b = euler_path(s, 10.0, 1.0, 1e-2, seed=11)
        assert np.array_equal(a, b)

    def test_different_seed_differs(self):
        s = Sde1D(drift=zero)
        a = euler_path(s, 10.0, 1.0, 1e-2, seed=11)
        b = euler_path(s, 10.0, 1.0, 1e-2, seed=12)
        assert not np.array_equal(a, b)

    def test_nonfinite_reported_with_step(self):
        s = Sde1D(drift=lambda x: np.asarray(x, dtype=float) * 1e300, sigma=zero,
                  sigma_const=0.0)
        with np.errstate(over="ignore"), pytest.raises(NonFiniteState):
            euler_path(s, 1.0, 1.0, 1e-2, seed=1)

    def test_x0_below_floor_rejected(self):
        s = Sde1D(drift=zero, floor=0.5)
        with pytest.raises(DomainError):
            euler_path(s, 0.1, 1.0, 1e-2, seed=1)


class TestEnsemble:
    def test_driftless_martingale_mean(self):
        s = Sde1D(drift=zero)
        ens = ensemble(s, 10.0, 1.0, 1e-2, 10_000, master_seed=44,
                       store_every=100)
        final = ens.values[:, -1]
        se = final.std(ddof=1) / math.sqrt(final.size)
        assert abs(final.mean() - 10.0) <= 3.0 * se

    def test_single_path_reproduces_euler_path(self):
        s = Sde1D(drift=zero)
        ens = ensemble(s, 5.0, 1.0, 1e-2, 1, master_seed=77)
        direct = euler_path(s, 5.0, 1.0, 1e-2, seed=77 ^ 0)
        assert np.array_equal(ens.values[0], direct)

    def test_infinite_barrier_never_exits(self):
        s = Sde1D(drift=zero)
        ens = ensemble(s, 1.0, 1.0, 1e-2, 50, master_seed=5,
                       barrier=math.inf)
        assert np.all(np.isnan(ens.first_exit))

    def test_driftless_exit_fraction(self):
        # pilot-verified: essentially every path crosses R = 1 by T = 50
        from escrate.pinned import DRIFTLESS_EXIT_MIN_FRACTION
        s = Sde1D(drift=zero)
        ens = ensemble(s, 0.5, 50.0, 1e-2, 2000, master_seed=313,
                       barrier=1.0, store_every=5000)
        frac = np.mean(np.isfinite(ens.first_exit))
        assert frac >= DRIFTLESS_EXIT_MIN_FRACTION

    def test_reruns_bit_identical(self):
        s = Sde1D(drift=lambda x: 1.0 / np.asarray(x, dtype=float), floor=0.01)
        a = ensemble(s, 1.0, 0.5, 1e-2, 100, master_seed=99)
        b = ensemble(s, 1.0, 0.5, 1e-2, 100, master_seed=99)
        assert np.array_equal(a.values, b.values)

    def test_halving_dt_stable_mean(self):
        # weak-convergence self-check on the hyperbolic majorant drift
        drift = radial_drift(HyperbolicBound(2, 1.0), floor=0.05)
        s = Sde1D(drift=drift, floor=0.05)
        coarse = ensemble(s, 1.0, 2.0, 2e-3, 4000, master_seed=21,
                          store_every=1000)
        fine = ensemble(s, 1.0, 2.0, 1e-3, 4000, master_seed=22,
                        store_every=2000)
        fc, ff = coarse.values[:, -1], fine.values[:, -1]
        se = math.hypot(fc.std(ddof=1) / math.sqrt(fc.size),
                        ff.std(ddof=1) / math.sqrt(ff.size))
        assert abs(fc.mean() - ff.mean()) <= 3.0 * se

    def test_repelling_drift_avoids_floor(self):
        # near-origin repulsion: floor reflection stays inactive
        s = Sde1D(drift=lambda x: 1.0 / np.asarray(x, dtype=float), floor=1e-6)
        ens = ensemble(s, 1e-5, 1.0, 1e-4, 500, master_seed=8)
        quiet = np.mean(ens.floor_hits == 0)
        assert quiet >= 0.999


class TestRadialDrift:
    def test_euclidean_three_dim(self):
        drift = radial_drift(ManifoldModel.euclidean(3))
        assert drift(2.0) == pytest.approx(1.0)
        assert np.allclose(drift(np.array([1.0, 4.0])), [2.0, 0.5])

    def test_constant_coefficient_matches_euclidean(self):
        drift_c = radial_drift((RadialCoefficient.constant(), 3))
        drift_e = radial_drift(ManifoldModel.euclidean(3))
        for r in (0.5, 2.0, 9.0):
            assert drift_c(r) == pytest.approx(drift_e(r))

    def test_hyperbolic_bound_dominates_coth(self):
        drift = radial_drift(HyperbolicBound(2, 1.0), floor=1e-4)
        grid = np.geomspace(1e-3, 1e3, 120)
        coth = 1.0 / np.tanh(grid)
        assert np.all(drift(grid) >= coth)
        assert drift(1.0) == pytest.approx(2.0)

    def test_invalid_source(self):
        with pytest.raises(DomainError):
            radial_drift("not a drift source")


class TestEuclideanDiffusionNd:
    def test_constant_coefficient_increment_variance(self):
        # sqrt(2)-scaled standard Brownian motion per coordinate
        radius, _ = euclidean_diffusion_nd(RadialCoefficient.constant(), 2,
                                           np.array([100.0, 0.0]), 10.0,
                                           1e-2, seed=31)
        # check the radial increments' quadratic variation instead of the
        # coordinates: far from the origin the radius is locally a BM
        inc = np.diff(radius)
        assert np.var(inc) == pytest.approx(2.0 * 1e-2, rel=0.1)

    def test_constant_intrinsic_equals_euclidean(self):
        radius, intrinsic = euclidean_diffusion_nd(
            RadialCoefficient.constant(), 2, np.array([1.0, 0.0]), 1.0,
            1e-2, seed=5)
        assert np.allclose(radius, intrinsic)

    def test_two_resolution_consistency(self):
        # Dynkin: d/dt E|X|^2 = E[2 a'(|X|) |X| + 2 n a(|X|)]; cross-check
        # with a 10x finer grid instead of evaluating the expectation
        coeff = RadialCoefficient.power(1.0)
        T, n_rep = 0.2, 150
        finals = {}
        for dt in (2e-3, 2e-4):
            vals = [euclidean_diffusion_nd(coeff, 2, np.array([1.0, 0.0]),
                                           T, dt, seed=1000 + k)[0][-1] ** 2
                    for k in range(n_rep)]
            finals[dt] = np.array(vals)
        a, b = finals[2e-3], finals[2e-4]
        se = math.hypot(a.std(ddof=1) / math.sqrt(n_rep),
                        b.std(ddof=1) / math.sqrt(n_rep))
        assert abs(a.mean() - b.mean()) <= 3.0 * se

    def test_dimension_guard(self):
        with pytest.raises(DomainError):
            euclidean_diffusion_nd(RadialCoefficient.constant(), 1,
                                   np.array([1.0]), 1.0, 1e-2, seed=1)
