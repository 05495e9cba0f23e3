import math

import numpy as np
import pytest
from scipy import stats

from cpheat.errors import PreconditionError, SamplingError
from cpheat.geometry import Ball, Box, Interval
from cpheat.jumps import (
    GaussianIsotropic,
    ProcessSpec,
    RadialDecreasing,
    UniformOnSet,
    density_mass,
    rearranged_density,
    validate_assumptions,
)


def triangle_jump():
    # density (1 - |x|)+ on (-1, 1); mass of the profile is exactly 1
    return RadialDecreasing(lambda r: np.clip(1.0 - r, 0.0, None), 1.0, dimension=1)


class TestDensityEval:
    def test_uniform_value(self):
        j = UniformOnSet(Interval(-1, 1))
        assert j.pdf(0.3) == pytest.approx(0.5)

    def test_uniform_outside(self):
        assert UniformOnSet(Interval(-1, 1)).pdf(2.0) == 0.0

    def test_gaussian_at_zero(self):
        assert GaussianIsotropic(1.0).pdf(0.0) == pytest.approx((2 * math.pi) ** -0.5)

    def test_gaussian_2d(self):
        j = GaussianIsotropic(0.5, 2)
        expect = 1.0 / (2 * math.pi * 0.25)
        assert j.pdf([0.0, 0.0]) == pytest.approx(expect)

    def test_triangle_profile(self):
        j = triangle_jump()
        assert j.pdf(0.0) == pytest.approx(1.0, rel=1e-6)
        assert j.pdf(0.5) == pytest.approx(0.5, rel=1e-6)
        assert j.pdf(1.5) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(PreconditionError):
            GaussianIsotropic(1.0, 2).pdf(0.3)


class TestSampling:
    def test_uniform_mean_within_3se(self):
        rng = np.random.default_rng(42)
        draws = UniformOnSet(Interval(-1, 1)).sample(rng, 100_000)
        # Var of Uniform(-1,1) is 1/3
        assert abs(draws.mean()) <= 3.0 * math.sqrt(1.0 / 3.0) / math.sqrt(100_000)

    def test_gaussian_variance(self):
        rng = np.random.default_rng(43)
        draws = GaussianIsotropic(2.0).sample(rng, 100_000)
        assert draws.var() == pytest.approx(4.0, rel=0.05)

    def test_uniform_draws_in_support(self):
        ball = Ball([0.5, 0.5], 1.5)
        rng = np.random.default_rng(44)
        draws = UniformOnSet(ball).sample(rng, 50_000)
        assert ball.contains(draws).all()

    def test_radial_draws_in_support(self):
        rng = np.random.default_rng(45)
        draws = triangle_jump().sample(rng, 50_000)
        assert (np.abs(draws) < 1.0).all()

    @pytest.mark.parametrize(
        "jump,cells,lo,hi",
        [
            (UniformOnSet(Interval(-1, 1)), 32, -1.0, 1.0),
            (GaussianIsotropic(1.0), 32, -4.0, 4.0),
            (triangle_jump(), 32, -1.0, 1.0),
        ],
    )
    def test_histogram_matches_density(self, jump, cells, lo, hi):
        rng = np.random.default_rng(46)
        draws = jump.sample(rng, 1_000_000)[:, 0]
        edges = np.linspace(lo, hi, cells + 1)
        observed, _ = np.histogram(draws, bins=edges)
        # expected masses by fine Riemann sums of the density over each cell
        fine = 200
        masses = []
        for a, b in zip(edges[:-1], edges[1:]):
            xs = np.linspace(a, b, fine, endpoint=False) + (b - a) / (2 * fine)
            masses.append(jump.pdf(xs.reshape(-1, 1)).mean() * (b - a))
        masses = np.array(masses)
        inside = observed.sum()
        chi2, p = stats.chisquare(observed, masses / masses.sum() * inside)
        assert p > 0.001

    def test_degenerate_support_aborts(self):
        # a sliver inside a huge bounding box forces rejection to starve
        thin = Box([0, 0], [1e-4, 1e-4])
        wide = Box([-100, -100], [100, 100])

        class Sliver(Box):
            def bounding_box(self):
                return wide.bounding_box()

        j = UniformOnSet(Sliver([0, 0], [1e-4, 1e-4]))
        rng = np.random.default_rng(47)
        with pytest.raises(SamplingError):
            j.sample(rng, 100)


class TestRearranged:
    def test_uniform_box_to_ball(self):
        j = UniformOnSet(Box([0, 0], [2, 0.5]))
        out = rearranged_density(j)
        assert isinstance(out.support, Ball)
        assert out.support.radius == pytest.approx(math.sqrt(1 / math.pi), rel=1e-12)

    def test_gaussian_fixed_point(self):
        j = GaussianIsotropic(0.7, 2)
        assert rearranged_density(j) is j

    def test_symmetric_interval_fixed_point(self):
        j = UniformOnSet(Interval(-1, 1))
        out = rearranged_density(j)
        assert isinstance(out.support, Ball)
        assert out.support.radius == pytest.approx(1.0, rel=1e-12)

    def test_mass_and_level_sets_preserved(self):
        j = UniformOnSet(Box([0, 0], [2, 0.5]))
        out = rearranged_density(j)
        sup = j.sup_density()
        for t in np.linspace(0.0, 1.2 * sup, 16):
            vol_in = j.support.volume() if t < sup else 0.0
            vol_out = out.support.volume() if t < out.sup_density() else 0.0
            assert vol_in == pytest.approx(vol_out, rel=1e-9, abs=1e-12)


class TestNormalization:
    @pytest.mark.parametrize(
        "jump",
        [
            UniformOnSet(Interval(-1, 1)),
            UniformOnSet(Ball([0.0, 0.0], 0.8)),
            GaussianIsotropic(1.0),
            GaussianIsotropic(0.5, 2),
            triangle_jump(),
        ],
    )
    def test_density_integrates_to_one(self, jump):
        mass, se = density_mass(jump, n_samples=1_000_000, seed=48)
        assert abs(mass - 1.0) <= max(1e-3, 3.0 * se)


class TestAssumptions:
    def test_gaussian_passes(self):
        rep = validate_assumptions(ProcessSpec(1.0, GaussianIsotropic(1.0)))
        assert rep.passed
        assert rep.variance == pytest.approx(1.0, rel=0.05)
        assert "bounded" in rep.discrete_spectrum

    def test_symmetric_uniform_passes(self):
        rep = validate_assumptions(ProcessSpec(1.0, UniformOnSet(Interval(-1, 1))))
        assert rep.passed
        # Var of Uniform(-1,1) = 1/3
        assert rep.variance == pytest.approx(1.0 / 3.0, rel=0.05)

    def test_asymmetric_support_fails_symmetry(self):
        rep = validate_assumptions(ProcessSpec(1.0, UniformOnSet(Interval(0, 1))))
        assert not rep.symmetric
        assert not rep.passed

    def test_shifted_mean_detected(self):
        rep = validate_assumptions(ProcessSpec(1.0, UniformOnSet(Interval(0, 1))))
        assert not rep.mean_zero

    def test_rate_must_be_positive(self):
        with pytest.raises(PreconditionError):
            ProcessSpec(0.0, GaussianIsotropic(1.0))


class TestRadialValidation:
    def test_increasing_profile_rejected(self):
        with pytest.raises(PreconditionError):
            RadialDecreasing(lambda r: r, 1.0, dimension=1)

    def test_zero_mass_rejected(self):
        with pytest.raises(PreconditionError):
            RadialDecreasing(lambda r: np.zeros_like(r), 1.0, dimension=1)

    def test_analytic_inverse_cdf_route(self):
        # uniform profile on |x| < 1 in 1d: radius cdf F(r) = r, inverse = u
        j = RadialDecreasing(
            lambda r: np.ones_like(r), 1.0, dimension=1, radius_inverse_cdf=lambda u: u
        )
        rng = np.random.default_rng(49)
        draws = j.sample(rng, 200_000)[:, 0]
        assert abs(draws.mean()) < 0.01
        assert np.abs(draws).max() <= 1.0
        assert draws.var() == pytest.approx(1.0 / 3.0, rel=0.02)
