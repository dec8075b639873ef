import numpy as np
import pytest
from scipy import stats as scipy_stats

from flowlenia.explore import (center_of_mass, init_patch, run_random_search,
                               sample_ruleset, slp_metrics, tightest_box_axis,
                               toroidal_travel, trajectory_stats)


def rng_(seed=0):
    return np.random.Generator(np.random.Philox(seed))


class TestSampler:
    def test_ranges_respected_over_many_samples(self):
        rng = rng_(0)
        lows = {"r": 1.0, "mu": 1.0, "sigma": 1.0, "h": 1.0}
        highs = {"r": 0.0, "mu": 0.0, "sigma": 0.0, "h": 0.0}
        for _ in range(500):
            rs = sample_ruleset(rng, 1, [[2]])
            assert 2 <= rs.R <= 25
            for k, g, h in zip(rs.kernels, rs.growths, rs.h):
                lows["r"] = min(lows["r"], k.r); highs["r"] = max(highs["r"], k.r)
                lows["mu"] = min(lows["mu"], g.mu); highs["mu"] = max(highs["mu"], g.mu)
                lows["sigma"] = min(lows["sigma"], g.sigma)
                highs["sigma"] = max(highs["sigma"], g.sigma)
                lows["h"] = min(lows["h"], h); highs["h"] = max(highs["h"], h)
                assert all(0.0 <= v <= 1.0 for v in k.a + k.b)
                assert all(0.01 <= v <= 0.5 for v in k.w)
        assert 0.2 <= lows["r"] and highs["r"] <= 1.0
        assert 0.05 <= lows["mu"] and highs["mu"] <= 0.5
        assert 0.001 <= lows["sigma"] and highs["sigma"] <= 0.2

    def test_fixed_seed_identical(self):
        assert sample_ruleset(rng_(5), 2, [[3, 2], [2, 3]]) == \
            sample_ruleset(rng_(5), 2, [[3, 2], [2, 3]])

    def test_wiring_multiplicities(self):
        rs = sample_ruleset(rng_(1), 2, [[3, 2], [2, 3]])
        assert len(rs.kernels) == 10
        pairs = [(k.source_channel, k.target_channel) for k in rs.kernels]
        assert pairs.count((0, 0)) == 3 and pairs.count((0, 1)) == 2
        assert pairs.count((1, 0)) == 2 and pairs.count((1, 1)) == 3

    def test_marginals_uniform_ks(self):
        rng = rng_(2)
        mus = []
        for _ in range(2000):
            rs = sample_ruleset(rng, 1, [[1]])
            mus.append((rs.growths[0].mu - 0.05) / 0.45)
        stat = scipy_stats.kstest(mus, "uniform").statistic
        assert stat < 0.05


class TestInitPatch:
    def test_default_side_40(self):
        A = init_patch(rng_(3), (64, 64))
        occupied = np.count_nonzero(A[0].sum(axis=0))
        assert occupied == 40

    def test_mass_expectation(self):
        A = init_patch(rng_(4), (64, 64), patch_side=40, C=1)
        assert abs(A.sum() - 800.0) / 800.0 < 0.05

    def test_outside_patch_zero(self):
        A = init_patch(rng_(5), (64, 64), patch_side=10, C=2)
        A[:, 27:37, 27:37] = 0.0
        assert np.count_nonzero(A) == 0


class TestCenterOfMass:
    def test_unit_mass_at_center(self):
        A = np.zeros((1, 32, 32))
        A[0, 16, 16] = 1.0
        np.testing.assert_allclose(center_of_mass(A), 0.0, atol=1e-12)

    def test_symmetric_blob_at_center(self):
        A = np.zeros((1, 33, 33))
        yy, xx = np.mgrid[0:33, 0:33]
        A[0] = np.exp(-((yy - 16.0) ** 2 + (xx - 16.0) ** 2) / 8.0)
        np.testing.assert_allclose(center_of_mass(A), 0.0, atol=1e-10)

    def test_two_point_circular_mean(self):
        w = 40
        A = np.zeros((1, w, w))
        A[0, 20, w // 4] = 1.0          # x = 0.25 w = cell 10
        A[0, 20, 14] = 1.0              # x = 0.35 w = cell 14
        com = center_of_mass(A)
        # circular mean of the two angles is at x = 0.30 w
        expected_x = (0.30 * w - w // 2) / w
        assert com[1] == pytest.approx(expected_x, abs=1e-6)

    def test_translation_equivariance_across_seam(self):
        A = np.zeros((1, 32, 32))
        A[0, 14:19, 14:19] = np.random.default_rng(6).random((5, 5))
        base = center_of_mass(A)
        shifted = center_of_mass(np.roll(A, (9, 25), axis=(-2, -1)))
        dy = (shifted - base) % 1.0
        assert dy[0] == pytest.approx(9 / 32, abs=1e-8)
        assert dy[1] == pytest.approx(25 / 32, abs=1e-8)

    def test_empty_world_is_nan(self):
        assert np.isnan(center_of_mass(np.zeros((1, 16, 16)))).all()


def test_toroidal_travel_wraps():
    a = np.array([0.45, 0.0])
    b = np.array([-0.45, 0.0])
    assert toroidal_travel(a, b) == pytest.approx(0.1)


class TestSlpMetrics:
    def test_localized_blob(self):
        A = np.zeros((1, 64, 64))
        A[0, 10:20, 40:50] = 1.0
        area, mass, flag = slp_metrics(A)
        assert flag
        assert mass >= 0.99
        assert area <= 0.25

    def test_uniform_field_not_localized(self):
        A = np.full((1, 64, 64), 0.3)
        area, mass, flag = slp_metrics(A)
        assert not flag
        assert area > 0.25

    def test_blob_across_the_seam(self):
        A = np.zeros((1, 64, 64))
        A[0, 60:64, 60:64] = 1.0
        A[0, 0:4, 0:4] = 1.0
        _, mass, flag = slp_metrics(np.roll(A, (2, 2), axis=(-2, -1)))
        assert flag and mass >= 0.99

    def test_empty_world_not_localized(self):
        assert slp_metrics(np.zeros((1, 16, 16)))[2] is False

    def test_tightest_box_axis_simple(self):
        marg = np.zeros(16)
        marg[3:6] = 1.0
        assert tightest_box_axis(marg, 1.0) == 3
        marg2 = np.zeros(16)
        marg2[15] = marg2[0] = 1.0   # wraps the seam
        assert tightest_box_axis(marg2, 1.0) == 2


class TestTrajectoryStats:
    def test_static_pattern_zero_speed(self):
        A = np.zeros((1, 32, 32))
        A[0, 10:14, 10:14] = 1.0
        com = np.tile(center_of_mass(A), (11, 1))
        stats = trajectory_stats(A, com, (32, 32))
        assert stats.mean_speed == pytest.approx(0.0, abs=1e-9)
        assert stats.localized

    def test_speed_in_cells_per_step(self):
        A = np.zeros((1, 32, 32))
        A[0, 0:4, 0:4] = 1.0
        com = np.stack([[0.0, i / 32.0] for i in range(5)])  # 1 cell/step in x
        stats = trajectory_stats(A, com, (32, 32))
        assert stats.mean_speed == pytest.approx(1.0, abs=1e-9)


class TestRandomSearch:
    def test_count_zero_empty(self):
        assert run_random_search(0, 0) == []

    def test_deterministic(self):
        a = run_random_search(3, 4, dims=(32, 32), steps=30, patch_side=16)
        b = run_random_search(3, 4, dims=(32, 32), steps=30, patch_side=16)
        for ra, rb in zip(a, b):
            assert ra.rules == rb.rules
            if ra.stats is not None:
                assert ra.stats.to_dict() == rb.stats.to_dict()

    def test_all_h_zero_rules_stay_put(self):
        # degenerate rules: no affinity, transport is pure diffusion; the
        # center of mass must not travel even though the patch spreads
        rules = sample_ruleset(rng_(7), 1, [[3]])
        for i in range(3):
            rules.h[i] = 0.0
        A0 = init_patch(rng_(8), (64, 64), patch_side=20, C=1)
        from flowlenia.explore import rollout_stats
        stats = rollout_stats(A0, rules, 200)
        assert stats.mean_speed < 0.05
        assert toroidal_travel(stats.com_trajectory[0],
                               stats.com_trajectory[-1]) < 0.02

    def test_records_have_stats_or_error(self):
        records = run_random_search(5, 3, dims=(32, 32), steps=10,
                                    patch_side=16)
        assert len(records) == 3
        for rec in records:
            assert (rec.stats is not None) != (rec.error is not None)
