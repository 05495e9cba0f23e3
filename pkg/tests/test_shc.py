import math

import numpy as np
import pytest

from cpheat.eigenvalue import QuadratureSpec, principal_eigenvalue
from cpheat.errors import PreconditionError
from cpheat.geometry import Ball, Box, Interval, apply_linear, symmetric_rearrangement
from cpheat.jumps import GaussianIsotropic, ProcessSpec, UniformOnSet, rearranged_density
from cpheat.shc import (
    EstimateCI,
    ShcCurve,
    estimate_Q,
    lambda_from_shc,
    poisson_pmf_truncated,
    q_series,
    stay_integral,
    survive_one_path,
)

WIDE = ProcessSpec(1.0, UniformOnSet(Interval(-1, 1)))  # D-D inside support
UNIT = Interval(0, 1)


class TestSingleSurvival:
    def test_time_zero_always_survives(self):
        rng = np.random.default_rng(0)
        assert all(survive_one_path(WIDE, UNIT, 0.0, rng) for _ in range(200))

    def test_far_support_survival_is_no_jump(self):
        # jumps land far outside, so surviving means the count stayed zero
        spec = ProcessSpec(1.0, UniformOnSet(Interval(5, 6)))
        rng = np.random.default_rng(1)
        t = 1.5
        hits = sum(survive_one_path(spec, UNIT, t, rng) for _ in range(20_000))
        p = hits / 20_000
        expect = math.exp(-t)
        assert abs(p - expect) <= 3.0 * math.sqrt(expect * (1 - expect) / 20_000)


class TestEstimateQ:
    def test_time_zero_exact(self):
        curve = estimate_Q(WIDE, UNIT, [0.0, 1.0], 1000, seed=2)
        assert curve.estimates[0].mean == UNIT.volume()
        assert curve.estimates[0].stderr == 0.0

    def test_closed_form_interval(self):
        times = [0.5, 1.0, 2.0, 4.0]
        curve = estimate_Q(WIDE, UNIT, times, 100_000, seed=3)
        for t, est in zip(times, curve.estimates):
            assert abs(est.mean - math.exp(-t / 2)) <= 3.0 * est.stderr

    def test_closed_form_square(self):
        spec = ProcessSpec(1.0, UniformOnSet(Box([-4, -4], [4, 4])))
        d = Box([0, 0], [1, 1])
        curve = estimate_Q(spec, d, [1.0], 100_000, seed=4)
        est = curve.estimates[0]
        assert abs(est.mean - math.exp(-63.0 / 64.0)) <= 3.0 * est.stderr

    def test_monotone_exact_by_path_reuse(self):
        curve = estimate_Q(WIDE, UNIT, [0.25, 0.5, 1.0, 2.0, 3.0, 5.0], 20_000, seed=5)
        means = curve.means()
        assert (np.diff(means) <= 0).all()

    def test_range(self):
        curve = estimate_Q(WIDE, UNIT, [0.5, 1.0], 5000, seed=6)
        assert ((curve.means() >= 0) & (curve.means() <= UNIT.volume())).all()

    def test_worker_count_is_irrelevant(self):
        a = estimate_Q(WIDE, UNIT, [0.5, 1.0], 30_000, seed=7, workers=1)
        b = estimate_Q(WIDE, UNIT, [0.5, 1.0], 30_000, seed=7, workers=4)
        assert a.means().tolist() == b.means().tolist()
        assert a.stderrs().tolist() == b.stderrs().tolist()

    def test_path_minimum(self):
        with pytest.raises(PreconditionError):
            estimate_Q(WIDE, UNIT, [1.0], 99, seed=8)

    def test_symmetrization_bound(self):
        # asymmetric domain against its ball, same jump family
        spec = ProcessSpec(1.0, GaussianIsotropic(0.5, 2))
        d = Box([0, 0], [2, 0.5])
        ball = symmetric_rearrangement(d)
        sym = ProcessSpec(1.0, rearranged_density(spec.jump))
        t = [0.5, 1.0, 2.0]
        q_d = estimate_Q(spec, d, t, 100_000, seed=9)
        q_b = estimate_Q(sym, ball, t, 100_000, seed=10)
        for ed, eb in zip(q_d.estimates, q_b.estimates):
            comb = math.hypot(ed.stderr, eb.stderr)
            assert ed.mean <= eb.mean + 3.0 * comb

    def test_linear_isomorphism_invariance(self):
        m = np.array([[1.0, 1.0], [0.0, 1.0]])
        d = Box([0, 0], [1, 1])
        a = Ball([0.0, 0.0], 2.0)
        spec = ProcessSpec(1.0, UniformOnSet(a))
        spec_t = ProcessSpec(1.0, UniformOnSet(apply_linear(a, m)))
        t = [0.5, 1.0, 2.0]
        q0 = estimate_Q(spec, d, t, 100_000, seed=11)
        q1 = estimate_Q(spec_t, apply_linear(d, m), t, 100_000, seed=12)
        for e0, e1 in zip(q0.estimates, q1.estimates):
            assert abs(e0.mean - e1.mean) <= 3.0 * math.hypot(e0.stderr, e1.stderr)


class TestStayIntegral:
    def test_n_zero_exact(self):
        est = stay_integral(UNIT, WIDE.jump, 0, QuadratureSpec("mc", 1000, 13))
        assert est.value == UNIT.volume()
        assert est.error == 0.0

    def test_geometric_identity(self):
        # wide uniform support: each step stays with probability |D|/|A| = 1/2
        est = stay_integral(UNIT, WIDE.jump, 2, QuadratureSpec("mc", 100_000, 14))
        assert abs(est.value - 0.25) <= 3.0 * est.error

    def test_band_one_step(self):
        # oracle: int_D P_x(jump lands in D) dx = density * band area
        #       = (1/(2a)) * (2aL - a^2) with a = 0.25, L = 1
        a, length = 0.25, 1.0
        oracle = (2 * a * length - a * a) / (2 * a)
        j = UniformOnSet(Interval(-0.25, 0.25))
        est = stay_integral(UNIT, j, 1, QuadratureSpec("mc", 100_000, 15))
        assert oracle == 0.875
        assert abs(est.value - oracle) <= 3.0 * est.error

    def test_monotone_in_n_and_bounded(self):
        vals = [
            stay_integral(UNIT, GaussianIsotropic(0.5), n, QuadratureSpec("mc", 50_000, 16)).value
            for n in range(5)
        ]
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
        assert all(0.0 <= v <= UNIT.volume() for v in vals)

    def test_requires_mc(self):
        with pytest.raises(PreconditionError):
            stay_integral(UNIT, WIDE.jump, 1, QuadratureSpec("grid", 64))


class TestPoissonTruncation:
    def test_tail_below_tolerance(self):
        for mean, tol in [(0.5, 1e-6), (3.0, 1e-6), (10.0, 1e-4)]:
            pmf = poisson_pmf_truncated(mean, tol)
            assert 1.0 - pmf.sum() < tol
            # independent oracle
            from scipy import stats

            direct = stats.poisson.pmf(np.arange(len(pmf)), mean)
            assert np.allclose(pmf, direct, rtol=1e-10)

    def test_term_cap(self):
        with pytest.raises(PreconditionError):
            poisson_pmf_truncated(1e6, 1e-6)


class TestQSeries:
    def test_time_zero_exact(self):
        res = q_series(WIDE, UNIT, 0.0, 1e-6, QuadratureSpec("mc", 1000, 17))
        assert res.value == UNIT.volume()
        assert res.mc_stderr == 0.0

    def test_closed_form_interval(self):
        res = q_series(WIDE, UNIT, 1.0, 1e-6, QuadratureSpec("mc", 200_000, 18))
        assert abs(res.value - math.exp(-0.5)) <= 3.0 * res.error

    def test_agrees_with_paths_on_gaussian_disk(self):
        disk = Ball([0.0, 0.0], math.sqrt(1 / math.pi))
        spec = ProcessSpec(1.0, GaussianIsotropic(0.5, 2))
        for t in (1.0, 2.0):
            series = q_series(spec, disk, t, 1e-6, QuadratureSpec("mc", 100_000, 19))
            paths = estimate_Q(spec, disk, [t], 100_000, seed=20)
            gap = abs(series.value - paths.estimates[0].mean)
            assert gap <= 3.0 * math.hypot(series.error, paths.estimates[0].stderr)

    def test_tail_tol_validation(self):
        with pytest.raises(PreconditionError):
            q_series(WIDE, UNIT, 1.0, 0.01, QuadratureSpec("mc", 1000, 21))


class TestLambdaFit:
    def _exact_curve(self, rate=0.5, vol=1.0, times=(1, 2, 4, 8)):
        ests = tuple(EstimateCI(vol * math.exp(-rate * t), 0.0, 1000, 0) for t in times)
        return ShcCurve(tuple(float(t) for t in times), ests, vol)

    def test_exact_exponential_recovered(self):
        fit = lambda_from_shc(self._exact_curve())
        assert fit.lambda1 == pytest.approx(0.5, abs=1e-12)
        assert fit.intercept == pytest.approx(0.0, abs=1e-12)

    def test_volume_scaling_handled(self):
        fit = lambda_from_shc(self._exact_curve(rate=0.25, vol=3.7))
        assert fit.lambda1 == pytest.approx(0.25, abs=1e-12)

    def test_simulated_interval_within_5pct(self):
        curve = estimate_Q(WIDE, UNIT, [1.0, 2.0, 4.0, 6.0], 100_000, seed=22)
        fit = lambda_from_shc(curve)
        assert fit.lambda1 == pytest.approx(0.5, rel=0.05)

    def test_cross_check_against_quadrature(self):
        spec = ProcessSpec(1.0, GaussianIsotropic(0.5))
        curve = estimate_Q(spec, UNIT, [1.0, 2.0, 4.0, 6.0], 100_000, seed=23)
        fit = lambda_from_shc(curve)
        ref = principal_eigenvalue(spec, UNIT, QuadratureSpec("grid", 2048))
        assert abs(fit.lambda1 - ref.lambda1) <= 0.05 * ref.lambda1

    def test_too_few_points(self):
        curve = self._exact_curve(times=(1, 2, 4))
        with pytest.raises(PreconditionError):
            lambda_from_shc(curve)

    def test_noisy_tail_filtered_out(self):
        times = (1.0, 2.0, 3.0, 4.0, 12.0)
        ests = [EstimateCI(math.exp(-0.5 * t), 1e-4, 1000, 0) for t in times[:4]]
        ests.append(EstimateCI(2e-4, 1.5e-4, 1000, 0))  # hopeless relative CI
        fit = lambda_from_shc(ShcCurve(times, tuple(ests), 1.0))
        assert fit.n_used == 4
        assert 12.0 not in fit.times_used


class TestCurveValidation:
    def test_times_must_increase(self):
        with pytest.raises(PreconditionError):
            ShcCurve((1.0, 1.0), (EstimateCI(1, 0, 1, 0), EstimateCI(1, 0, 1, 0)), 1.0)

    def test_stderr_nonnegative(self):
        with pytest.raises(PreconditionError):
            EstimateCI(1.0, -0.1, 10, 0)
