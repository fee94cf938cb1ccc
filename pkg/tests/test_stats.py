import math

import numpy as np
import pytest

from symcp import (GroupSpec, InvalidInputError,
                   chernoff_bound, concentration_bounds, cvar, cvar_gap_check,
                   empirical_cgf, icx_dominates, lipschitz_gap_bound,
                   rate_function, set_volume, stop_loss,
                   strong_convexity_lower_bound, variance_decomposition,
                   volume_gap)
from symcp.predictors import ConstantVelocity, FixedPoint, PoseBiasedVelocity
from symcp.stats import (EmpiricalDistribution, VolumeSpec, default_lambda_grid,
                         empirical_quantile, paired_se, pooled_value_grid,
                         resampled_se, support_grid, unit_ball_volume,
                         upper_quantile_integral, within_orbit_double_sum)


def dist(values):
    return EmpiricalDistribution.from_values(values)


class TestQuantileConvention:
    def test_right_continuous_inverse(self):
        d = dist([10.0, 20.0, 30.0, 40.0])
        assert empirical_quantile(d, 0.25) == 10.0
        assert empirical_quantile(d, 0.26) == 20.0
        assert empirical_quantile(d, 1.0) == 40.0

    def test_matches_sorted_indexing_under_float_drift(self):
        d = dist(np.arange(1.0, 101.0))
        assert empirical_quantile(d, 0.95) == 95.0

    def test_upper_integral_is_exact_piecewise(self):
        d = dist([1.0, 2.0])
        # quantile is 1 on (0, 0.5], 2 on (0.5, 1]
        assert upper_quantile_integral(d, 0.0) == pytest.approx(1.5)
        assert upper_quantile_integral(d, 0.5) == pytest.approx(1.0)
        assert upper_quantile_integral(d, 0.75) == pytest.approx(0.5)


class TestStopLoss:
    def test_hand_values(self):
        d = dist([0.0, 2.0])
        assert stop_loss(d, 1.0) == pytest.approx(0.5)
        assert stop_loss(d, 2.0) == 0.0
        assert stop_loss(d, 5.0) == 0.0
        assert stop_loss(d, 0.0) == pytest.approx(1.0)  # mean of nonnegatives

    def test_convex_and_nonincreasing_on_a_grid(self, rng):
        d = dist(rng.exponential(1.0, 200))
        ts = np.linspace(-1.0, 6.0, 81)
        sl = stop_loss(d, ts)
        assert np.all(np.diff(sl) <= 1e-12)
        assert np.all(np.diff(sl, 2) >= -1e-12)


class TestIcxDominates:
    def test_hand_oracle_equal_mean_spread(self):
        # SL_A on {0,.5,1,1.5,2} = [1,.5,0,0,0]; SL_B = [1,.75,.5,.25,0]
        a, b = dist([1.0, 1.0]), dist([0.0, 2.0])
        grid = [0.0, 0.5, 1.0, 1.5, 2.0]
        np.testing.assert_allclose(stop_loss(a, np.array(grid)), [1, 0.5, 0, 0, 0])
        np.testing.assert_allclose(stop_loss(b, np.array(grid)), [1, 0.75, 0.5, 0.25, 0])
        ok, violation = icx_dominates(a, b, grid)
        assert ok
        assert violation == pytest.approx(0.0, abs=1e-12)

    def test_reflexive_with_zero_violation(self):
        a = dist([0.3, 1.2, 5.0])
        ok, violation = icx_dominates(a, a, pooled_value_grid(a, a))
        assert ok and violation == 0.0

    def test_hand_oracle_negative_case(self):
        # witness at t=2: stop_loss({0,3}, 2) = 0.5 > 0 = stop_loss({1,1}, 2);
        # the largest signed violation on this grid sits at t=1 (1.0 vs 0.0)
        a, b = dist([0.0, 3.0]), dist([1.0, 1.0])
        assert stop_loss(a, 2.0) == pytest.approx(0.5)
        assert stop_loss(b, 2.0) == 0.0
        ok, violation = icx_dominates(a, b, [0.0, 1.0, 2.0, 3.0])
        assert not ok
        assert violation == pytest.approx(1.0)

    def test_empty_grid_rejected(self):
        with pytest.raises(InvalidInputError):
            icx_dominates(dist([1.0]), dist([1.0]), [])

    def test_transitive_on_mean_preserving_contractions(self, rng):
        # contracting random pairs toward their midpoint lowers every
        # stop-loss value, so each stage is dominated by the previous one
        values = rng.exponential(1.0, 64)

        def contract(vals, seed):
            out = vals.copy()
            gen = np.random.default_rng(seed)
            for _ in range(10):
                i, j = gen.choice(len(out), size=2, replace=False)
                mid = 0.5 * (out[i] + out[j])
                out[i] = out[j] = mid
            return out

        a = dist(values)
        b = dist(contract(values, 1))
        c = dist(contract(contract(values, 1), 2))
        grid = pooled_value_grid(a, c)
        assert icx_dominates(b, a, grid, tol=1e-12)[0]
        assert icx_dominates(c, b, grid, tol=1e-12)[0]
        assert icx_dominates(c, a, grid, tol=1e-12)[0]


class TestCvar:
    def test_top_five_percent_of_one_to_hundred(self):
        assert cvar(dist(np.arange(1.0, 101.0)), 0.95) == pytest.approx(98.0)

    def test_level_zero_is_the_mean(self, rng):
        values = rng.exponential(2.0, 333)
        assert cvar(dist(values), 0.0) == pytest.approx(float(values.mean()))

    def test_constant_values(self):
        for alpha in (0.0, 0.3, 0.9):
            assert cvar(dist(np.full(7, 3.25)), alpha) == pytest.approx(3.25)

    def test_level_one_rejected(self):
        with pytest.raises(InvalidInputError):
            cvar(dist([1.0]), 1.0)

    def test_nondecreasing_in_alpha(self, rng):
        d = dist(rng.exponential(1.0, 500))
        values = [cvar(d, a) for a in np.linspace(0.0, 0.99, 34)]
        assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))

    def test_dual_form_agreement_on_awkward_sizes(self, rng):
        # the tail-average and Rockafellar-Uryasev forms are cross-checked
        # inside cvar(); exercise sizes where alpha*n is not an integer
        for n in (7, 23, 101):
            d = dist(rng.exponential(1.0, n))
            for alpha in (0.1, 1.0 / 3.0, 0.77):
                cvar(d, alpha)  # raises RuntimeError on disagreement


class TestCvarGap:
    def test_identical_sets_have_zero_gap(self, rng):
        d = dist(rng.exponential(1.0, 50))
        gap, bound, ok = cvar_gap_check(d, d, 0.9)
        assert gap == pytest.approx(0.0, abs=1e-12)
        assert ok

    def test_negative_control_flags_violation(self):
        # stop-loss ordered pair that group averaging cannot produce: the
        # bound fails, documenting that the check needs the full hypotheses
        gap, bound, ok = cvar_gap_check(dist([0.0, 2.0]), dist([1.0, 1.0]), 0.5)
        assert gap == pytest.approx(1.0)
        assert bound == pytest.approx(0.0)
        assert not ok

    def test_size_mismatch_rejected(self):
        with pytest.raises(InvalidInputError):
            cvar_gap_check(dist([1.0, 2.0]), dist([1.0]), 0.5)

    def test_pipeline_pair_ok_per_split_at_95(self, rr_pipeline):
        # the bound holds on each of five disjoint subsplits, not just pooled
        import numpy as np
        n = len(rr_pipeline["plain"])
        chunks = np.array_split(np.random.default_rng(0).permutation(n), 5)
        for chunk in chunks:
            plain = rr_pipeline["plain"][chunk]
            eqv = rr_pipeline["eqv"][chunk]
            upper = 1e-9 + 3.0 * paired_se(plain - eqv) / 0.05
            _, _, ok = cvar_gap_check(dist(plain), dist(eqv), 0.95,
                                      tol=1e-9, upper_tol=upper)
            assert ok

    def test_pipeline_pair_is_ok_at_high_levels(self, rr_pipeline):
        d_plain = dist(rr_pipeline["plain"])
        d_eqv = dist(rr_pipeline["eqv"])
        n = len(rr_pipeline["plain"])
        for alpha in (0.5, 0.9, 0.95):
            upper_tol = 3.0 * paired_se(rr_pipeline["plain"] - rr_pipeline["eqv"]) / (1 - alpha)
            gap, bound, ok = cvar_gap_check(d_plain, d_eqv, alpha,
                                            tol=1e-9, upper_tol=upper_tol)
            assert ok, (alpha, gap, bound)
            assert gap > 0.5  # strict contraction for the pose-biased base


class TestVarianceDecomposition:
    def test_hand_example(self):
        total, between, within = variance_decomposition([[0.0, 2.0], [1.0, 1.0]])
        assert total == pytest.approx(0.5)
        assert between == pytest.approx(0.0)
        assert within == pytest.approx(0.5)

    def test_constant_orbits_put_everything_between(self):
        total, between, within = variance_decomposition([[2.0, 2.0], [4.0, 4.0]])
        assert within == 0.0
        assert total == pytest.approx(between)

    def test_identity_on_random_groups(self, rng):
        groups = rng.exponential(1.0, (37, 6))
        total, between, within = variance_decomposition(groups)
        assert total == pytest.approx(between + within, abs=1e-12)

    def test_ragged_groups_rejected(self):
        with pytest.raises(InvalidInputError):
            variance_decomposition([[1.0, 2.0], [3.0]])
        with pytest.raises(InvalidInputError):
            variance_decomposition([])

    def test_double_sum_matches_brute_force(self, rng):
        groups = rng.exponential(1.0, (9, 4))
        expected = 0.0
        for orbit in groups:  # independent brute-force double loop
            acc = 0.0
            for zg in orbit:
                for zh in orbit:
                    acc += (zg - zh) ** 2
            expected += acc / (2.0 * len(orbit) ** 2)
        expected /= len(groups)
        assert within_orbit_double_sum(groups) == pytest.approx(expected, abs=1e-12)

    def test_double_sum_equals_mean_within_variance(self, rng):
        groups = rng.exponential(1.0, (11, 8))
        _, _, within = variance_decomposition(groups)
        assert within_orbit_double_sum(groups) == pytest.approx(within, abs=1e-9)


class TestLipschitzGap:
    def test_equivariant_base_has_zero_gap_and_bound(self, conv, rng):
        samples = (rng.normal(0, 3, (50, 8, 2)), rng.normal(0, 3, (50, 12, 2)))
        gap, bound, ok = lipschitz_gap_bound(ConstantVelocity(12),
                                             GroupSpec.cyclic(4), conv, samples)
        assert abs(gap) < 1e-12
        assert bound < 1e-12
        assert ok

    def test_orbit_pipeline_satisfies_the_bound_exactly(self, orbit_pipeline, conv):
        gap, bound, ok = lipschitz_gap_bound(
            orbit_pipeline["base"], GroupSpec.cyclic(8), conv,
            (orbit_pipeline["past"], orbit_pipeline["future"]), tol=1e-9)
        assert ok
        assert 0.0 < gap <= bound

    def test_bound_recomputed_by_per_sample_loop(self, conv, rng):
        # cross-check the vectorized orbit-spread term against an explicit loop
        base = PoseBiasedVelocity(12, bias=(0.5, 0.0))
        spec = GroupSpec.cyclic(4)
        past = rng.normal(0, 3, (20, 8, 2))
        future = rng.normal(0, 3, (20, 12, 2))
        _, bound, _ = lipschitz_gap_bound(base, spec, conv, (past, future))
        acc = []
        from symcp.groups import apply_input_action, rotate_points
        for x in past:
            anchor = x[-1]
            f_x = base.predict_one(x)
            for g in spec.angles():
                back = rotate_points(x, -g, anchor)
                term = rotate_points(base.predict_one(back), g, anchor)
                acc.append(float(((f_x - term) ** 2).sum()))
        assert bound == pytest.approx(0.5 * float(np.mean(acc)), abs=1e-12)


class TestStrongConvexity:
    def test_equivariant_base_attains_equality(self, conv, rng):
        samples = (rng.normal(0, 3, (30, 8, 2)), rng.normal(0, 3, (30, 12, 2)))
        lhs, rhs, ok = strong_convexity_lower_bound(ConstantVelocity(12),
                                                    GroupSpec.cyclic(4), conv, samples)
        assert ok
        assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_fixed_point_closed_form(self, origin_conv, rng):
        # one-step fixed point c about the origin: the orbit spread is
        # exactly ||c||^2 and the squared-L2 inequality is an equality
        c = np.array([0.7, -0.2])
        base = FixedPoint(horizon=1, point=c)
        past = rng.normal(0, 3, (40, 8, 2))
        future = rng.normal(0, 3, (40, 1, 2))
        lhs, rhs, ok = strong_convexity_lower_bound(base, GroupSpec.cyclic(4),
                                                    origin_conv, (past, future))
        assert ok
        assert lhs == pytest.approx(rhs, abs=1e-9)
        norms = (future ** 2).sum(axis=(1, 2))
        expected = float(np.mean(norms)) + float(c @ c)
        assert lhs == pytest.approx(expected, abs=1e-9)

    def test_pipeline_run_holds_per_sample(self, rr_pipeline, conv):
        lhs, rhs, ok = strong_convexity_lower_bound(
            rr_pipeline["base"], GroupSpec.cyclic(8), conv,
            (rr_pipeline["past"][:200], rr_pipeline["future"][:200]))
        assert ok


class TestCgf:
    def test_constant_values(self):
        assert empirical_cgf(dist(np.full(5, 2.0)), 1.5) == pytest.approx(3.0)

    def test_lambda_zero_is_zero(self, rng):
        assert empirical_cgf(dist(rng.exponential(1, 50)), 0.0) == 0.0

    def test_two_point_hand_value(self):
        # values {0, 1} at lam = ln 2: log((1 + 2) / 2) = ln 1.5
        got = empirical_cgf(dist([0.0, 1.0]), math.log(2.0))
        assert got == pytest.approx(math.log(1.5), abs=1e-12)

    def test_negative_lambda_rejected(self):
        with pytest.raises(InvalidInputError):
            empirical_cgf(dist([1.0]), -0.5)

    def test_overflow_safe_at_large_lambda(self):
        got = empirical_cgf(dist([100.0, 200.0]), 10.0)
        assert np.isfinite(got)
        assert got == pytest.approx(2000.0 + math.log(0.5 * (1 + math.exp(-1000.0))),
                                    abs=1e-9)


class TestChernoffAndRate:
    def test_threshold_below_mean_gives_trivial_bound(self, rng):
        d = dist(rng.exponential(1.0, 100))
        grid = default_lambda_grid(1.0)
        assert chernoff_bound(d, 0.5 * d.mean, grid) == pytest.approx(1.0)

    def test_constant_zero_values(self):
        grid = np.array([0.0, 1.0, 2.0, 4.0])
        assert chernoff_bound(dist(np.zeros(10)), 1.0, grid) == pytest.approx(math.exp(-4.0))

    def test_grid_must_include_zero(self):
        with pytest.raises(InvalidInputError):
            chernoff_bound(dist([1.0]), 1.0, [0.5, 1.0])
        with pytest.raises(InvalidInputError):
            rate_function(dist([1.0]), 1.0, [0.5, 1.0])

    def test_rate_function_zero_at_the_mean(self, rng):
        d = dist(rng.exponential(1.0, 200))
        grid = default_lambda_grid(float(np.std(d.sorted_values)))
        assert rate_function(d, d.mean, grid) == pytest.approx(0.0, abs=1e-12)

    def test_rate_function_constant_at_its_value(self):
        grid = np.array([0.0, 0.5, 1.0])
        assert rate_function(dist(np.full(4, 3.0)), 3.0, grid) == 0.0

    def test_cgf_grid_dominance_implies_chernoff_and_rate_chain(self, orbit_pipeline):
        # chained property: ordering of the grid CGFs forces ordering of the
        # grid Chernoff bounds and the grid rate functions at every threshold
        d_plain = dist(orbit_pipeline["plain"])
        d_eqv = dist(orbit_pipeline["eqv"])
        grid = default_lambda_grid(float(np.std(orbit_pipeline["plain"])))
        cgf_gap = empirical_cgf(d_eqv, grid) - empirical_cgf(d_plain, grid)
        assert np.all(cgf_gap <= 1e-9)
        for t in support_grid(d_eqv, d_plain, 16):
            assert chernoff_bound(d_eqv, t, grid) <= chernoff_bound(d_plain, t, grid) + 1e-9
            assert rate_function(d_eqv, t, grid) >= rate_function(d_plain, t, grid) - 1e-9


class TestConcentrationBounds:
    def test_hoeffding_hand_value(self):
        hoeffding, _, _ = concentration_bounds(100, 0.1, 1.0, 0.0)
        assert hoeffding.value == pytest.approx(2.0 * math.exp(-2.0), abs=1e-12)

    def test_cantelli_zero_variance(self):
        _, _, cantelli = concentration_bounds(10, 0.5, 1.0, 0.0)
        assert cantelli.value == 0.0

    def test_bernstein_monotone_in_variance_and_range(self):
        _, tight, _ = concentration_bounds(50, 0.2, 0.8, 0.1)
        _, loose, _ = concentration_bounds(50, 0.2, 1.0, 0.3)
        assert tight.value <= loose.value

    def test_invalid_inputs_rejected(self):
        for bad in [(0, 0.1, 1, 0.1), (10, 0.0, 1, 0.1), (10, 0.1, 0.0, 0.1),
                    (10, 0.1, 1, -0.1)]:
            with pytest.raises(InvalidInputError):
                concentration_bounds(*bad)


class TestVolume:
    def test_unit_disc_area(self):
        vol = VolumeSpec(dim=2, kappa=math.pi)
        assert set_volume(vol, 1.0) == pytest.approx(math.pi)

    def test_euclidean_constant_matches_closed_form(self):
        assert unit_ball_volume(2) == pytest.approx(math.pi)
        assert unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)
        assert VolumeSpec.euclidean(24).kappa == pytest.approx(
            math.pi ** 12 / math.gamma(13.0))

    def test_identical_distributions_have_zero_gap(self, rng):
        d = dist(rng.exponential(1.0, 300))
        dvol, bound, ok = volume_gap(d, d, 0.05, VolumeSpec.euclidean(4))
        assert dvol == pytest.approx(0.0, abs=1e-12)
        assert ok

    def test_pipeline_gap_is_inside_the_bound_at_dim_24(self, rr_pipeline):
        dvol, bound, ok = volume_gap(dist(rr_pipeline["plain"]),
                                     dist(rr_pipeline["eqv"]),
                                     0.05, VolumeSpec.euclidean(24))
        assert ok
        assert 0.0 < dvol <= bound
        assert np.isfinite(dvol) and np.isfinite(bound)

    def test_alpha_validation(self, rng):
        d = dist(rng.exponential(1.0, 10))
        with pytest.raises(InvalidInputError):
            volume_gap(d, d, 0.0, VolumeSpec.euclidean(2))


class TestMomentOrdering:
    def test_moments_contract_on_pipeline_pairs(self, rr_pipeline):
        plain, eqv = rr_pipeline["plain"], rr_pipeline["eqv"]
        for p in (1, 2, 3):
            slack = 3.0 * paired_se(plain ** p - eqv ** p)
            assert np.mean(eqv ** p) <= np.mean(plain ** p) + slack

    def test_quantile_integral_ordering_on_pipeline_pairs(self, rr_pipeline):
        d_plain = dist(rr_pipeline["plain"])
        d_eqv = dist(rr_pipeline["eqv"])
        n = len(rr_pipeline["plain"])
        plain, eqv = rr_pipeline["plain"], rr_pipeline["eqv"]
        for p in np.linspace(0.05, 0.95, 10):
            se = resampled_se(
                n, lambda idx: upper_quantile_integral(dist(eqv[idx]), p)
                - upper_quantile_integral(dist(plain[idx]), p), seed=3)
            assert (upper_quantile_integral(d_eqv, p)
                    <= upper_quantile_integral(d_plain, p) + 3.0 * se)


class TestStandardErrors:
    def test_paired_se_matches_formula(self, rng):
        diffs = rng.normal(0, 1, 400)
        assert paired_se(diffs) == pytest.approx(diffs.std(ddof=1) / 20.0)

    def test_resampled_se_tracks_the_mean_se(self, rng):
        values = rng.normal(0, 1, 3000)
        se = resampled_se(len(values), lambda idx: float(values[idx].mean()),
                          n_resamples=15, seed=0)
        assert 0.3 * paired_se(values) < se < 3.0 * paired_se(values)

    def test_resampled_se_needs_enough_samples(self):
        with pytest.raises(InvalidInputError):
            resampled_se(10, lambda idx: 0.0, n_resamples=15)
