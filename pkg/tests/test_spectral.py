"""Closed-form coefficient/rate formulas against brute-force oracles.

Every analytic quantity here has an independent check: companion-matrix
growth rates, scalar recurrence runs, or dense grid searches. Frozen
constants were derived by hand from the quadratic root formulas.
"""

import io
import math

import numpy as np
import pytest

from nestersolve.spectral import (
    BoundsError, ChebyshevParams, ChebyshevScheme, CoefficientDomainError,
    NesterovScheme, Regime, RegionGrid, SpectrumBounds, acceleration_ratio,
    chebyshev_asymptotic_rate, chebyshev_parameters, companion_rate_oracle,
    critical_b, critical_c, optimal_coefficient, rate_complex, rate_real,
    regime_classify, region_scan, scalar_recurrence_rate_oracle,
)

C_STAR_03_09 = 0.5194938532959157
R_STAR_03_09 = 1.0 - math.sqrt(0.1)          # 0.6837722339831620...


def random_bounds(rng, lo=-0.95, hi=0.95, min_gap=0.0):
    while True:
        b1, bN = sorted(rng.uniform(lo, hi, 2))
        if bN - b1 >= min_gap:
            return SpectrumBounds(float(b1), float(bN))


class TestSpectrumBounds:
    def test_invariants(self):
        with pytest.raises(BoundsError):
            SpectrumBounds(0.9, 0.3)
        with pytest.raises(BoundsError):
            SpectrumBounds(-3.0, 0.5)
        with pytest.raises(BoundsError):
            SpectrumBounds(-0.5, 1.0)
        with pytest.raises(BoundsError):
            SpectrumBounds(float("nan"), 0.5)

    def test_extended_flag(self):
        assert SpectrumBounds(-2.0, 0.5).extended
        assert SpectrumBounds(-1.0, 0.5).extended
        assert not SpectrumBounds(-0.99, 0.5).extended

    def test_plain_radius(self):
        assert SpectrumBounds(-0.7, 0.3).plain_radius == 0.7
        assert SpectrumBounds(-0.2, 0.9).plain_radius == 0.9


class TestCriticalFormulas:
    def test_critical_b_values(self):
        assert critical_b(0.0) == 0.0
        assert math.isclose(critical_b(1.0 / 3.0), 0.75, rel_tol=1e-15)
        assert math.isclose(critical_b(-1.0 / 3.0), -3.0, rel_tol=1e-15)
        with pytest.raises(CoefficientDomainError):
            critical_b(-1.0)

    def test_critical_c_values(self):
        assert critical_c(0.0) == 0.0
        assert math.isclose(critical_c(-1.0), -3.0 + 2.0 * math.sqrt(2.0), rel_tol=1e-14)
        s = math.sqrt(2.0)
        assert math.isclose(critical_c(-1.0), (1.0 - s) / (1.0 + s), rel_tol=1e-15)
        assert math.isclose(critical_c(0.75), 1.0 / 3.0, rel_tol=1e-15)
        with pytest.raises(CoefficientDomainError):
            critical_c(1.0)

    def test_mutual_inverse(self):
        rng = np.random.default_rng(0)
        for b in rng.uniform(-2.9, 0.99, 200):
            assert math.isclose(critical_b(critical_c(b)), b, rel_tol=1e-12, abs_tol=1e-12)

    def test_critical_c_monotone(self):
        bs = np.linspace(-2.9, 0.99, 500)
        cs = [critical_c(b) for b in bs]
        assert all(c2 > c1 for c1, c2 in zip(cs, cs[1:]))


class TestRateReal:
    def test_no_momentum(self):
        assert rate_real(0.0, 0.7) == 0.7

    def test_critical_point_value(self):
        # at b = critical_b(c) the double root gives 2c/(1+c)
        assert math.isclose(rate_real(0.5, 8.0 / 9.0), 2.0 / 3.0, rel_tol=1e-12)

    def test_real_root_branch(self):
        # max-modulus root of lambda^2 + 0.6 lambda - 0.1
        expect = 0.5 * (0.6 + math.sqrt(0.36 + 0.4))
        assert math.isclose(rate_real(0.2, -0.5), expect, rel_tol=1e-15)
        assert math.isclose(rate_real(0.2, -0.5), 0.7358898943540673, rel_tol=1e-15)

    def test_zero_eigenvalue(self):
        assert rate_real(0.5, 0.0) == 0.0
        assert rate_real(-0.5, 0.0) == 0.0

    def test_domain(self):
        with pytest.raises(CoefficientDomainError):
            rate_real(1.0, 0.5)

    def test_roots_against_numpy(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            c = float(rng.uniform(-0.99, 0.99))
            b = float(rng.uniform(-2.9, 0.99))
            roots = np.roots([1.0, -(1.0 + c) * b, c * b])
            assert math.isclose(rate_real(c, b), float(np.max(np.abs(roots))),
                                rel_tol=1e-9, abs_tol=1e-12)

    def test_discriminant_sign_characterization(self):
        # complex pair iff b, c share sign and 0 < |b| < |critical_b(c)|
        cs = np.linspace(-0.95, 0.95, 39)
        bs = np.linspace(-2.9, 0.95, 78)
        for c in cs:
            if c == 0.0:
                continue
            for b in bs:
                disc = (1.0 + c) ** 2 * b * b - 4.0 * c * b
                same_sign = b != 0.0 and (b > 0) == (c > 0)
                inside = same_sign and abs(b) < abs(critical_b(c))
                assert (disc < 0.0) == inside, (c, b, disc)


class TestRateComplex:
    def test_no_momentum_modulus(self):
        assert math.isclose(rate_complex(0.0, 0.2 + 0.3j), abs(0.2 + 0.3j), rel_tol=1e-15)

    def test_real_axis_consistency(self):
        cs = np.linspace(-0.9, 0.9, 19)
        bs = np.linspace(-2.5, 0.95, 40)
        for c in cs:
            for b in bs:
                assert abs(rate_complex(c, complex(b)) - rate_real(c, b)) <= 1e-12

    def test_disk_boundary_point(self):
        assert rate_complex(C_STAR_03_09, -0.3 + 0j) <= R_STAR_03_09 + 1e-12

    def test_matches_numpy_roots(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            c = float(rng.uniform(-0.99, 0.99))
            b = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
            roots = np.roots([1.0, -(1.0 + c) * b, c * b])
            assert math.isclose(rate_complex(c, b), float(np.max(np.abs(roots))),
                                rel_tol=1e-9, abs_tol=1e-12)


class TestRegimesAndOptimum:
    def test_classification(self):
        assert regime_classify(SpectrumBounds(-0.3, 0.9)) is Regime.TOP
        assert regime_classify(SpectrumBounds(-0.9, 0.3)) is Regime.BOT
        assert regime_classify(SpectrumBounds(-0.5, 0.9)) is Regime.MID
        assert regime_classify(SpectrumBounds(-0.1, 0.4)) is Regime.TOP
        assert regime_classify(SpectrumBounds(-0.9, 0.1)) is Regime.BOT

    def test_boundary_formulas_coincide(self):
        # on bN = -3 b1 the Mid g formula collapses to bN (ties go Top)
        for b1 in (-0.1, -0.2, -0.3):
            bN = -3.0 * b1
            g_mid = -8.0 * bN * b1 * (b1 + bN) / (b1 - bN) ** 2
            assert math.isclose(g_mid, bN, rel_tol=1e-12)
        # on bN = -b1/3 it collapses to b1 (ties go Bot)
        for b1 in (-0.3, -0.6, -0.9):
            bN = -b1 / 3.0
            g_mid = -8.0 * bN * b1 * (b1 + bN) / (b1 - bN) ** 2
            assert math.isclose(g_mid, b1, rel_tol=1e-12)

    def test_symmetric_interval(self):
        acc = optimal_coefficient(SpectrumBounds(-0.5, 0.5))
        assert acc.c_star == 0.0
        assert acc.r_star == 0.5

    def test_top_case_frozen(self):
        acc = optimal_coefficient(SpectrumBounds(-0.3, 0.9))
        assert acc.regime is Regime.TOP
        assert math.isclose(acc.c_star, C_STAR_03_09, rel_tol=1e-14)
        assert math.isclose(acc.r_star, R_STAR_03_09, rel_tol=1e-14)
        assert acc.robustness_radius == 0.3
        assert not acc.extended

    def test_mid_case_endpoint_equality(self):
        acc = optimal_coefficient(SpectrumBounds(-0.3, 0.5))
        assert acc.regime is Regime.MID
        assert math.isclose(acc.c_star, 0.11696311977549419, rel_tol=1e-13)
        assert math.isclose(acc.r_star, 0.41886116991581035, rel_tol=1e-13)
        r_lo = rate_real(acc.c_star, -0.3)
        r_hi = rate_real(acc.c_star, 0.5)
        assert abs(r_lo - r_hi) <= 1e-12
        assert acc.robustness_radius == 0.3

    def test_extended_case(self):
        acc = optimal_coefficient(SpectrumBounds(-2.0, 0.5))
        assert acc.regime is Regime.BOT
        assert math.isclose(acc.c_star, math.sqrt(3.0) - 2.0, rel_tol=1e-13)
        assert math.isclose(acc.r_star, math.sqrt(3.0) - 1.0, rel_tol=1e-13)
        assert acc.extended
        assert math.isclose(acc.robustness_radius, 2.0 / 3.0, rel_tol=1e-15)

    def test_degenerate_zero_spectrum(self):
        acc = optimal_coefficient(SpectrumBounds(0.0, 0.0))
        assert acc.c_star == 0.0
        assert acc.r_star == 0.0
        assert acc.robustness_radius == 0.0

    def test_accelerates_unless_symmetric(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            bounds = random_bounds(rng)
            acc = optimal_coefficient(bounds)
            if math.isclose(bounds.b1, -bounds.bN, rel_tol=0, abs_tol=1e-12):
                assert math.isclose(acc.r_star, bounds.bN, rel_tol=1e-9)
            else:
                assert acc.r_star < bounds.plain_radius

    def test_coefficient_magnitude_bounded(self):
        # |c*| < 1 over a dense bounds grid, including the extension
        grid = np.linspace(-2.95, 0.95, 60)
        for b1 in grid:
            for bN in grid:
                if b1 <= bN < 1.0:
                    assert abs(optimal_coefficient(SpectrumBounds(b1, bN)).c_star) < 1.0

    def test_endpoints_dominate_interior(self):
        # interior eigenvalues never dominate the endpoint rates
        rng = np.random.default_rng(23)
        for _ in range(100):
            c = float(rng.uniform(-0.99, 0.99))
            b1, bN = sorted(rng.uniform(-0.99, 0.99, 2))
            interior = np.linspace(b1, bN, 101)
            rates = [rate_real(c, float(b)) for b in interior]
            cap = max(rate_real(c, float(b1)), rate_real(c, float(bN)))
            assert max(rates) <= cap + 1e-12

    def test_critical_c_is_argmin(self):
        rng = np.random.default_rng(29)
        cs = np.linspace(-0.999, 0.999, 2001)
        step = cs[1] - cs[0]
        for _ in range(20):
            b = float(rng.uniform(-0.95, 0.95))
            rates = np.array([rate_real(float(c), b) for c in cs])
            c_best = cs[int(np.argmin(rates))]
            assert abs(c_best - critical_c(b)) <= step + 1e-12


class TestAccelerationRatio:
    def test_symmetric_is_one(self):
        assert acceleration_ratio(SpectrumBounds(-0.5, 0.5)) == 1.0

    def test_frozen_value(self):
        ar = acceleration_ratio(SpectrumBounds(-0.3, 0.9))
        assert math.isclose(ar, math.log(R_STAR_03_09) / math.log(0.9), rel_tol=1e-15)
        assert math.isclose(ar, 3.6079019326433515, rel_tol=1e-13)

    def test_flat_for_small_ratio(self):
        # identical formula output whenever b1/bN >= -1/3 (same Top path)
        bN = 0.6
        ars = [acceleration_ratio(SpectrumBounds(ratio * bN, bN))
               for ratio in (-1.0 / 3.0, -0.2, 0.0)]
        assert ars[0] == ars[1] == ars[2]

    def test_divergent_plain(self):
        with pytest.raises(BoundsError, match="unaccelerated divergent; AR undefined"):
            acceleration_ratio(SpectrumBounds(-2.0, 0.5))
        with pytest.raises(BoundsError, match="unaccelerated divergent; AR undefined"):
            acceleration_ratio(SpectrumBounds(-1.0, 0.5))

    def test_zero_radius(self):
        with pytest.raises(BoundsError):
            acceleration_ratio(SpectrumBounds(0.0, 0.0))

    def test_negative_dominant_side(self):
        # |b1| > bN: plain radius comes from b1
        ar = acceleration_ratio(SpectrumBounds(-0.9, 0.3))
        r = optimal_coefficient(SpectrumBounds(-0.9, 0.3)).r_star
        assert math.isclose(ar, math.log(r) / math.log(0.9), rel_tol=1e-14)


class TestCompanionOracle:
    def test_plain_reduction(self):
        assert abs(companion_rate_oracle(0.0, [0.5, -0.3]) - 0.5) <= 1e-3

    def test_matches_closed_form_rate(self):
        r = companion_rate_oracle(C_STAR_03_09, [-0.3, 0.9])
        assert abs(r - R_STAR_03_09) <= 1e-3

    def test_complex_pair_inside_disk(self):
        z = 0.25 * complex(math.cos(2.5), math.sin(2.5))
        r = companion_rate_oracle(C_STAR_03_09, [-0.3, 0.9, z])
        assert r <= R_STAR_03_09 + 1e-3

    def test_domain(self):
        with pytest.raises(CoefficientDomainError):
            companion_rate_oracle(1.0, [0.5])


class TestChebyshevParams:
    def test_symmetric_interval(self):
        p = chebyshev_parameters(SpectrumBounds(-0.6, 0.6))
        assert p.gamma == 1.0
        assert math.isclose(p.sigma, 0.6, rel_tol=1e-15)

    def test_one_sided(self):
        p = chebyshev_parameters(SpectrumBounds(0.0, 0.6))
        assert math.isclose(p.gamma, 10.0 / 7.0, rel_tol=1e-15)
        assert math.isclose(p.sigma, 3.0 / 7.0, rel_tol=1e-15)

    def test_beta_sequence(self):
        p = ChebyshevParams(gamma=1.0, sigma=0.6)
        betas = p.beta_sequence()
        assert next(betas) == 1.0
        assert math.isclose(next(betas), 1.0 / (1.0 - 0.18), rel_tol=1e-15)
        for _ in range(200):
            last = next(betas)
        assert math.isclose(last, p.beta_limit, rel_tol=1e-12)
        assert math.isclose(p.beta_limit, 2.0 / 1.8, rel_tol=1e-15)

    def test_requires_convergent_interval(self):
        with pytest.raises(BoundsError):
            chebyshev_parameters(SpectrumBounds(-1.5, 0.5))
        with pytest.raises(BoundsError):
            chebyshev_parameters(SpectrumBounds(0.5, 0.5))

    def test_sigma_in_unit_interval(self):
        rng = np.random.default_rng(31)
        for _ in range(100):
            bounds = random_bounds(rng, min_gap=1e-6)
            p = chebyshev_parameters(bounds)
            assert 0.0 < p.sigma < 1.0
            assert p.gamma > 0.0


class TestChebyshevRate:
    def test_on_interval_value(self):
        r = chebyshev_asymptotic_rate(SpectrumBounds(-0.6, 0.6), 0.6)
        assert math.isclose(r, 1.0 / 3.0, rel_tol=1e-14)

    def test_one_sided_beats_momentum(self):
        r = chebyshev_asymptotic_rate(SpectrumBounds(0.0, 0.6), 0.6)
        assert math.isclose(r, 0.2251482265544138, rel_tol=1e-13)
        assert r < optimal_coefficient(SpectrumBounds(0.0, 0.6)).r_star

    def test_imaginary_point(self):
        r = chebyshev_asymptotic_rate(SpectrumBounds(-0.6, 0.6), 0.3j)
        golden = (1.0 + math.sqrt(5.0)) / 2.0
        assert math.isclose(r, golden / 3.0, rel_tol=1e-13)

    def test_constant_on_interval(self):
        bounds = SpectrumBounds(-0.4, 0.7)
        t1 = (2.0 - bounds.b1 - bounds.bN) / (bounds.bN - bounds.b1)
        expect = 1.0 / (t1 + math.sqrt(t1 * t1 - 1.0))
        for b in np.linspace(bounds.b1, bounds.bN, 25):
            assert math.isclose(chebyshev_asymptotic_rate(bounds, float(b)), expect,
                                rel_tol=1e-12)


class TestScalarRecurrenceOracle:
    def test_plain_scalar(self):
        r = scalar_recurrence_rate_oracle(NesterovScheme(0.0), 0.7)
        assert abs(r - 0.7) <= 1e-3

    def test_momentum_scalar(self):
        r = scalar_recurrence_rate_oracle(NesterovScheme(C_STAR_03_09), 0.9)
        assert abs(r - R_STAR_03_09) <= 1e-3

    def test_chebyshev_scalar(self):
        params = chebyshev_parameters(SpectrumBounds(-0.6, 0.6))
        r = scalar_recurrence_rate_oracle(ChebyshevScheme(params), 0.6)
        assert abs(r - 1.0 / 3.0) <= 1e-2

    def test_zero_eigenvalue(self):
        assert scalar_recurrence_rate_oracle(NesterovScheme(0.3), 0.0) == 0.0

    def test_iters_floor(self):
        with pytest.raises(ValueError):
            scalar_recurrence_rate_oracle(NesterovScheme(0.0), 0.5, iters=50)

    def test_cheb_rate_agrees_with_recurrence(self):
        # the conformal-map rate must match the actually-run beta recurrence
        rng = np.random.default_rng(37)
        for _ in range(100):
            bounds = random_bounds(rng, lo=-0.9, hi=0.9, min_gap=0.3)
            params = chebyshev_parameters(bounds)
            b = complex(rng.uniform(-0.95, 0.95), rng.uniform(-0.95, 0.95))
            analytic = chebyshev_asymptotic_rate(bounds, b)
            if analytic >= 1.3:  # divergent recurrences overflow no matter the guard
                continue
            measured = scalar_recurrence_rate_oracle(ChebyshevScheme(params), b, iters=4000)
            assert abs(measured - analytic) <= 2e-2, (bounds, b)

    def test_nesterov_rate_agrees_with_recurrence(self):
        rng = np.random.default_rng(41)
        for _ in range(60):
            c = float(rng.uniform(-0.8, 0.8))
            b = complex(rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9))
            analytic = rate_complex(c, b)
            if analytic >= 1.3:
                continue
            measured = scalar_recurrence_rate_oracle(NesterovScheme(c), b, iters=4000)
            assert abs(measured - analytic) <= 2e-2, (c, b)


class TestMonotonicityInAngle:
    def test_nondecreasing_and_even(self):
        # fixed modulus, rate vs angle: nondecreasing on [0, pi], even in theta
        thetas = np.linspace(0.0, math.pi, 101)
        for b1, bN in ((-0.3, 0.9), (-0.5, 0.9), (0.0, 0.6)):
            c = optimal_coefficient(SpectrumBounds(b1, bN)).c_star
            for mod in (0.2, 0.5, 0.8):
                vals = [rate_complex(c, mod * complex(math.cos(t), math.sin(t)))
                        for t in thetas]
                diffs = np.diff(vals)
                assert np.all(diffs >= -1e-12)
                for t in thetas[::10]:
                    plus = rate_complex(c, mod * complex(math.cos(t), math.sin(t)))
                    minus = rate_complex(c, mod * complex(math.cos(t), -math.sin(t)))
                    assert abs(plus - minus) <= 1e-15


class TestRegionScan:
    def test_grid_axes(self):
        g = RegionGrid.square(5)
        np.testing.assert_allclose(g.re_axis(), [-1, -0.5, 0, 0.5, 1])
        np.testing.assert_allclose(g.im_axis(), [-1, -0.5, 0, 0.5, 1])
        with pytest.raises(ValueError):
            RegionGrid.square(2)
        with pytest.raises(ValueError):
            RegionGrid(0, 1, 0, 1, -0.1)
        with pytest.raises(ValueError):
            RegionGrid(1, 0, 0, 1, 0.5)

    def test_row_major_order(self):
        rmap = region_scan(SpectrumBounds(-0.3, 0.9), RegionGrid.square(3))
        np.testing.assert_allclose(rmap.re, [-1, -1, -1, 0, 0, 0, 1, 1, 1])
        np.testing.assert_allclose(rmap.im, [-1, 0, 1, -1, 0, 1, -1, 0, 1])

    def test_values_match_pointwise_formulas(self):
        bounds = SpectrumBounds(-0.3, 0.9)
        acc = optimal_coefficient(bounds)
        rmap = region_scan(bounds, RegionGrid.square(9))
        for i in range(len(rmap.re)):
            b = complex(rmap.re[i], rmap.im[i])
            assert math.isclose(rmap.nesterov_rate[i], rate_complex(acc.c_star, b),
                                rel_tol=1e-13, abs_tol=1e-15)
            assert math.isclose(rmap.cheb_rate[i], chebyshev_asymptotic_rate(bounds, b),
                                rel_tol=1e-13, abs_tol=1e-15)
            assert rmap.nesterov_valid[i] == (rmap.nesterov_rate[i] <= acc.r_star + 1e-12)

    def test_robustness_disk_all_valid(self):
        for b1, bN in ((-0.3, 0.9), (-0.5, 0.9)):
            bounds = SpectrumBounds(b1, bN)
            radius = optimal_coefficient(bounds).robustness_radius
            rmap = region_scan(bounds, RegionGrid.square(81))
            inside = rmap.re**2 + rmap.im**2 <= radius**2
            assert np.all(rmap.nesterov_valid[inside])

    def test_mid_regime_endpoint_rate(self):
        bounds = SpectrumBounds(-0.5, 0.9)
        acc = optimal_coefficient(bounds)
        rmap = region_scan(bounds, RegionGrid(-0.5, 0.9, 0.0, 0.0, 0.7))
        assert rmap.re[0] == -0.5 and rmap.im[0] == 0.0
        assert abs(rmap.nesterov_rate[0] - acc.r_star) <= 1e-12

    def test_csv_format(self):
        rmap = region_scan(SpectrumBounds(-0.3, 0.9), RegionGrid.square(3))
        buf = io.StringIO()
        rmap.write_csv(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "re,im,nesterov_rate,cheb_rate,nesterov_valid,cheb_valid"
        assert len(lines) == 1 + 9
        first = lines[1].split(",")
        assert first[0] == "-1" and first[1] == "-1"
        assert first[4] in ("0", "1") and first[5] in ("0", "1")

    def test_parallel_output_identical(self, monkeypatch):
        bounds = SpectrumBounds(-0.5, 0.9)
        grid = RegionGrid.square(41)

        def render():
            buf = io.StringIO()
            region_scan(bounds, grid).write_csv(buf)
            return buf.getvalue()

        monkeypatch.delenv("NESTERSOLVE_THREADS", raising=False)
        serial = render()
        monkeypatch.setenv("NESTERSOLVE_THREADS", "3")
        assert render() == serial
        monkeypatch.setenv("NESTERSOLVE_THREADS", "64")
        assert render() == serial
        monkeypatch.setenv("NESTERSOLVE_THREADS", "not-a-number")
        assert render() == serial

    def test_containment_exception_counter(self):
        rmap = region_scan(SpectrumBounds(-0.3, 0.9), RegionGrid.square(21))
        manual = int(np.sum(rmap.cheb_valid & ~rmap.nesterov_valid))
        assert rmap.containment_exceptions() == manual
