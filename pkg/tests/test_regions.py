import numpy as np
import pytest

from seniority_cascades import regions, theory


class TestDuplexErLambdaMax:
    def test_matches_jacobian_trace(self):
        for mj, ms in [(2.0, 5.0), (5.0, 2.0), (1.0, 1.0), (9.0, 9.0)]:
            lam = float(regions.duplex_er_lambda_max(mj, ms, 0.18))
            jac = theory.jacobian_m_er_closed_form([mj, ms], 0.18)
            assert lam == pytest.approx(theory.lambda_max(jac), abs=1e-12)

    def test_threshold_at_least_one_gives_zero(self):
        assert float(regions.duplex_er_lambda_max(5.0, 5.0, 1.2)) == 0.0

    def test_vectorized(self):
        lam = regions.duplex_er_lambda_max(np.ones((3, 4)), np.ones((3, 4)), 0.18)
        assert lam.shape == (3, 4)


class TestScanRegion:
    def test_subcritical_grid_all_false(self):
        grid = regions.GridSpec((0.0, 0.4), (0.0, 0.4), 20, 20)
        scan = regions.scan_region(grid, 0.18)
        assert not scan.multiplex.any()
        assert not scan.junior_only.any()
        assert not scan.senior_only.any()

    def test_segment_total_degree_four_inside_region(self):
        for f in np.linspace(0.0, 1.0, 21):
            lam = float(regions.duplex_er_lambda_max(4 * f, 4 * (1 - f), 0.18))
            assert lam > 1.0

    def test_segment_total_degree_seven_split(self):
        def lam(f):
            return float(regions.duplex_er_lambda_max(7 * f, 7 * (1 - f), 0.18))
        # supercritical only when the junior share is very small or near one
        assert lam(0.02) > 1.0 and lam(0.98) > 1.0
        for f in (0.3, 0.5, 0.7):
            assert lam(f) < 1.0

    def test_containment_invariant(self):
        grid = regions.GridSpec((0.0, 12.0), (0.0, 12.0), 60, 60)
        scan = regions.scan_region(grid, 0.18)
        assert (scan.multiplex | ~scan.junior_only).all()
        assert (scan.multiplex | ~scan.senior_only).all()

    def test_axis_symmetry_breaking(self):
        a = float(regions.duplex_er_lambda_max(0.35, 6.65, 0.18))
        b = float(regions.duplex_er_lambda_max(6.65, 0.35, 0.18))
        assert (a > 1.0) != (b > 1.0)

    def test_csv_has_one_row_per_cell(self):
        grid = regions.GridSpec((0.0, 2.0), (0.0, 2.0), 4, 5)
        scan = regions.scan_region(grid, 0.18)
        lines = scan.to_csv().strip().splitlines()
        assert len(lines) == 1 + 4 * 5

    def test_only_poisson_family(self):
        grid = regions.GridSpec((0.0, 1.0), (0.0, 1.0), 2, 2)
        with pytest.raises(NotImplementedError):
            regions.scan_region(grid, 0.18, family="delta")


class TestCascadeWindow:
    def test_threshold_above_one_empty(self):
        win = regions.cascade_window(1.0, 1.5)
        assert win.measure == 0.0 and win.segments == ()

    def test_reference_ratio_beats_all_junior(self):
        w_star = regions.cascade_window(1.79, 0.18)
        w_zero = regions.cascade_window(0.0, 0.18)
        assert w_zero.measure > w_star.measure

    def test_additivity(self):
        win = regions.cascade_window(1.0, 0.18)
        assert win.measure == pytest.approx(
            sum(hi - lo for lo, hi in win.segments), abs=1e-4)

    def test_segments_sorted_disjoint(self):
        win = regions.cascade_window(1.5, 0.25, r_max=16.0)
        flat = [x for seg in win.segments for x in seg]
        assert flat == sorted(flat)

    def test_refinement_stability(self):
        coarse = regions.cascade_window(1.0, 0.18, dr=0.01)
        fine = regions.cascade_window(1.0, 0.18, dr=0.005)
        assert abs(coarse.measure - fine.measure) < 2 * 0.01

    def test_unclosed_region_rejected(self):
        with pytest.raises(ValueError):
            regions.cascade_window(1.0, 0.18, r_max=4.0)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            regions.cascade_window(-0.5, 0.18)
        with pytest.raises(ValueError):
            regions.cascade_window(1.0, 0.18, dr=0.0)


class TestOptimalSeniorityRatio:
    def test_reference_threshold(self):
        res = regions.optimal_seniority_ratio(0.18)
        assert not res.degenerate
        assert 1.70 <= res.sigma_star <= 1.88
        assert res.window_at_star.measure > 0

    def test_degenerate_split_region(self):
        res = regions.optimal_seniority_ratio(0.25, r_max=16.0)
        assert res.degenerate
        assert res.window_at_star is None

    def test_threshold_above_one_fully_degenerate(self):
        res = regions.optimal_seniority_ratio(1.2)
        assert res.degenerate
        assert all(m == 0.0 for _, m in res.window_curve)

    def test_requires_wide_sigma_grid(self):
        with pytest.raises(ValueError):
            regions.optimal_seniority_ratio(0.18, sigma_grid=[0.0, 1.0, 2.0])


class TestSweepThresholds:
    def test_single_element_equals_direct(self):
        sweep = regions.sweep_thresholds([0.18], r_max=12.0)
        direct = regions.optimal_seniority_ratio(0.18, r_max=12.0)
        assert sweep.results[0].sigma_star == pytest.approx(
            direct.sigma_star, abs=1e-9)
        assert sweep.jump_locations == []

    def test_jump_across_one_fifth(self):
        sweep = regions.sweep_thresholds([0.199, 0.21], r_max=12.0)
        stars = [r.sigma_star for r in sweep.results]
        assert abs(stars[1] - stars[0]) > 0.1
        assert len(sweep.jump_locations) == 1
        assert sweep.jump_locations[0] == pytest.approx(0.2045)

    def test_rejects_nonpositive_threshold(self):
        with pytest.raises(ValueError):
            regions.sweep_thresholds([0.18, -0.1])


class TestMLayerSplitRegions:
    def test_monotone_shrinking(self):
        res = regions.m_layer_split_regions(
            [1, 2, 3, 4], (0.05, 0.4), (0.0, 12.0), (60, 60))
        for m_lo, m_hi in zip([1, 2, 3], [2, 3, 4]):
            assert (res.membership[m_hi] <= res.membership[m_lo]).all()

    def test_region_eliminated_at_r1_03(self):
        res = regions.m_layer_split_regions(
            [1, 4], (0.05, 0.4), (0.0, 12.0), (200, 200))
        col = int(np.argmin(np.abs(res.r1_values - 0.3)))
        assert res.membership[1][:, col].any()
        assert not res.membership[4][:, col].any()

    def test_zero_density_row_outside(self):
        res = regions.m_layer_split_regions(
            [1, 2], (0.05, 0.4), (0.0, 12.0), (40, 40))
        for m in (1, 2):
            assert not res.membership[m][0].any()

    def test_m1_matches_closed_form(self):
        res = regions.m_layer_split_regions([1], (0.1, 0.3), (1.0, 6.0), (5, 5))
        for iz, z in enumerate(res.z_values):
            for ir, r1 in enumerate(res.r1_values):
                expected = theory.jacobian_m_er_closed_form([z], r1).trace
                assert res.traces[1][iz, ir] == pytest.approx(expected, abs=1e-12)

    def test_csv_shape(self):
        res = regions.m_layer_split_regions([2], (0.1, 0.3), (0.0, 4.0), (3, 4))
        lines = res.to_csv(2).strip().splitlines()
        assert len(lines) == 1 + 3 * 4

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            regions.m_layer_split_regions([0], (0.1, 0.3), (0.0, 4.0))
        with pytest.raises(ValueError):
            regions.m_layer_split_regions([1], (0.0, 0.3), (0.0, 4.0))


class TestJuniorFractionExperiment:
    def test_smoke_runs_and_shapes(self):
        res = regions.junior_fraction_experiment(
            gamma=2.83, z_values=[6.0, 8.5], fractions=[0.1, 0.5],
            r1=0.18, n=600, seed_count=5, replicas=2, master_seed=1)
        assert res.sim_junior.shape == (2, 2)
        assert (res.sim_junior >= res.sim_senior - 1e-12).all()
        assert res.theory_lambda.shape == (2, 2)
        assert res.boundary_height.shape == (2,)

    def test_theory_only_mode(self):
        res = regions.junior_fraction_experiment(
            gamma=2.83, z_values=[8.5], fractions=[0.3],
            r1=0.18, n=1200, master_seed=3,
            theory_fractions=np.linspace(0.05, 0.95, 10),
            theory_z_values=np.arange(2.0, 14.0, 1.0),
            run_simulation=False)
        assert res.sim_junior is None
        assert np.isfinite(res.optimal_fraction)
        # intermediate fractions close the region at lower densities than
        # the extremes
        h = res.boundary_height
        mid = h[4]
        assert mid < h[0] and mid < h[-1]

    def test_deterministic(self):
        kwargs = dict(gamma=2.83, z_values=[8.5], fractions=[0.3], r1=0.18,
                      n=400, seed_count=3, replicas=2, master_seed=11)
        a = regions.junior_fraction_experiment(**kwargs)
        b = regions.junior_fraction_experiment(**kwargs)
        assert np.array_equal(a.sim_junior, b.sim_junior)
        assert np.array_equal(a.theory_lambda, b.theory_lambda)
