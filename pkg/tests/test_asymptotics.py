import cmath
import math

import numpy as np
import pytest

from cpheat.asymptotics import (
    conditional_charfun,
    conditional_containment,
    uniform_fourier,
)
from cpheat.eigenvalue import QuadratureSpec, alpha
from cpheat.errors import AcceptanceRateError, PreconditionError
from cpheat.geometry import Ball, Box, Interval, Translate
from cpheat.jumps import GaussianIsotropic, UniformOnSet


class TestUniformFourier:
    @pytest.mark.parametrize(
        "domain",
        [Interval(-2, 5), Box([0, 0], [1, 2]), Ball([0.5, 0.5], 0.7)],
    )
    def test_zero_frequency_normalized(self, domain):
        xi = np.zeros(domain.dimension)
        assert uniform_fourier(domain, xi) == pytest.approx(1.0)

    def test_symmetric_interval_sine(self):
        # (1/2) int_{-1}^{1} e^{i xi w} dw = sin(xi)/xi
        assert abs(uniform_fourier(Interval(-1, 1), math.pi)) == pytest.approx(0.0, abs=1e-12)
        assert uniform_fourier(Interval(-1, 1), math.pi / 2).real == pytest.approx(
            2 / math.pi, rel=1e-12
        )

    def test_translate_phase(self):
        base = Interval(-1, 1)
        shifted = Translate(base, [2.0])
        xi = 0.7
        expect = cmath.exp(1j * xi * 2.0) * uniform_fourier(base, xi)
        got = uniform_fourier(shifted, xi)
        assert got == pytest.approx(expect, rel=1e-12)

    def test_ball_2d_against_grid_quadrature(self):
        from cpheat.asymptotics import _fourier_grid

        ball = Ball([0.3, -0.2], 0.9)
        xi = np.array([1.3, -0.4])
        analytic = uniform_fourier(ball, xi)
        grid = _fourier_grid(ball, xi, res=1024)
        assert analytic == pytest.approx(grid, abs=5e-3)

    def test_interval_matches_riemann_sum(self):
        d = Interval(0.2, 1.9)
        xi = 2.4
        xs = np.linspace(0.2, 1.9, 20001)
        riemann = np.trapezoid(np.exp(1j * xi * xs), xs) / (1.9 - 0.2)
        assert uniform_fourier(d, xi) == pytest.approx(complex(riemann), abs=1e-8)


class TestConditionalCharfun:
    def test_zero_frequency_exact(self):
        est = conditional_charfun(
            UniformOnSet(Interval(-1, 1)), Interval(0, 1), [0.0], 3, 0.0, 2000, seed=1
        )
        assert est.value == 1.0 + 0.0j
        assert est.stderr == 0.0

    def test_single_jump_conditional_law(self):
        # from 0, one jump uniform on (-1,1) conditioned into (0,1) is U(0,1):
        # E e^{i pi W} = (e^{i pi} - 1)/(i pi) = 2i/pi
        est = conditional_charfun(
            UniformOnSet(Interval(-1, 1)), Interval(0, 1), [0.0], 1, math.pi, 50_000, seed=2
        )
        assert est.value.real == pytest.approx(0.0, abs=4 * est.stderr_re)
        assert est.value.imag == pytest.approx(2 / math.pi, abs=4 * est.stderr_im)
        assert est.acceptance_rate == pytest.approx(0.5, abs=0.01)

    def test_modulus_bounded(self):
        for n in (1, 3, 8):
            est = conditional_charfun(
                GaussianIsotropic(0.5), Interval(0, 1), [0.5], n, 2 * math.pi, 3000, seed=3
            )
            assert abs(est.value) <= 1.0 + est.stderr

    def test_flattens_toward_uniform_law(self):
        # distance to the domain's normalized Fourier transform shrinks in n
        j = GaussianIsotropic(0.5)
        d = Interval(0, 1)
        dist = {}
        for n in (2, 30):
            errs = []
            for s in range(6):
                for xi in (math.pi, 2 * math.pi, 3 * math.pi):
                    est = conditional_charfun(j, d, [0.5], n, xi, 4000, seed=(10 * s + n))
                    errs.append(abs(est.value - uniform_fourier(d, xi)))
            dist[n] = np.mean(errs)
        assert dist[30] < dist[2]

    def test_order_cap(self):
        with pytest.raises(PreconditionError):
            conditional_charfun(
                GaussianIsotropic(0.5), Interval(0, 1), [0.5], 51, math.pi, 100, seed=4
            )


class TestConditionalContainment:
    def test_single_step_from_origin_boundary(self):
        # n=0 from x=0: P(jump in (0,1)) = 1/2 for uniform jumps on (-1,1)
        est = conditional_containment(
            UniformOnSet(Interval(-1, 1)), Interval(0, 1), [0.0], 0, 100_000, seed=5
        )
        assert abs(est.mean - 0.5) <= 3.0 * est.stderr

    @pytest.mark.parametrize("n", [0, 1, 2, 3, 4, 5])
    def test_wide_uniform_ratio_every_depth(self, n):
        # D-D inside the support: every conditional step stays with
        # probability |D|/|A| = 1/2 exactly, from any interior start
        est = conditional_containment(
            UniformOnSet(Interval(-1, 1)), Interval(0, 1), [0.5], n, 20_000, seed=6 + n
        )
        assert abs(est.mean - 0.5) <= 3.0 * max(est.stderr, 1e-4)

    def test_deep_conditioning_no_farther_than_shallow(self):
        # the distance to the mean containment must not grow with depth
        j = GaussianIsotropic(0.5)
        d = Interval(0, 1)
        target = alpha(d, j, QuadratureSpec("grid", 2048)).value
        shallow = conditional_containment(j, d, [0.5], 2, 3000, seed=31)
        deep = conditional_containment(j, d, [0.5], 20, 3000, seed=32, min_acceptance=1e-5)
        sigma = math.hypot(shallow.stderr, deep.stderr)
        assert abs(deep.mean - target) < abs(shallow.mean - target) + 3.0 * sigma

    def test_gaussian_matches_containment_quadrature(self):
        # moderate depth estimate against the mean-containment quadrature
        j = GaussianIsotropic(0.5)
        d = Interval(0, 1)
        target = alpha(d, j, QuadratureSpec("grid", 2048)).value
        est = conditional_containment(j, d, [0.5], 8, 20_000, seed=12)
        assert abs(est.mean - target) <= 4.0 * est.stderr + 0.01

    def test_acceptance_abort(self):
        # surviving 4 steps in a sliver of the jump range is ~1e-5 rare
        j = UniformOnSet(Interval(-1, 1))
        tiny = Interval(0, 0.05)
        with pytest.raises(AcceptanceRateError):
            conditional_containment(j, tiny, [0.025], 4, 50_000, seed=13)

    def test_budget_cap_limits_accepted(self):
        est = conditional_containment(
            UniformOnSet(Interval(-1, 1)),
            Interval(0, 1),
            [0.5],
            1,
            10**9,
            seed=14,
            max_chains=1 << 16,
        )
        assert est.n_accepted < 10**9
        assert est.n_accepted > 0

    def test_no_survivor_raises(self):
        j = UniformOnSet(Interval(-1, 1))
        tiny = Interval(0, 1e-4)
        with pytest.raises(AcceptanceRateError):
            conditional_containment(
                j, tiny, [5e-5], 3, 1000, seed=15, min_acceptance=0.0, max_chains=1 << 16
            )
