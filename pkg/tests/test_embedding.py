import numpy as np
import pytest

from flowlenia.embedding import (embedded_affinity, mix_average, mix_softmax,
                                 mutate_zone, parameter_colors)
from flowlenia.engine import flow_field
from flowlenia.rules import CompiledRules, affinity_map

from test_rules import make_rules


def rng_(seed=0):
    return np.random.Generator(np.random.Philox(seed))


class TestEmbeddedAffinity:
    def test_constant_p_reduces_to_plain(self):
        rules = make_rules(3, h=0.6)
        A = np.random.default_rng(0).random((1, 16, 16))
        P = np.full((3, 16, 16), 0.6)
        got = embedded_affinity(A, P, rules)
        np.testing.assert_allclose(got, affinity_map(A, rules), atol=1e-12)

    def test_zero_p_zero_affinity(self):
        rules = make_rules(2)
        A = np.random.default_rng(1).random((1, 16, 16))
        np.testing.assert_allclose(
            embedded_affinity(A, np.zeros((2, 16, 16)), rules), 0.0, atol=1e-12)

    def test_half_plane_p_matches_constant_runs_away_from_boundary(self):
        rules = make_rules(2, R=3)
        A = np.zeros((1, 32, 32))
        A[0, 6:26, 6:10] = 0.5   # mass in left half
        A[0, 6:26, 22:26] = 0.5  # mass in right half
        P = np.empty((2, 32, 32))
        P[:, :, :16] = 0.3
        P[:, :, 16:] = 0.9
        U = embedded_affinity(A, P, rules)
        U_left = embedded_affinity(A, np.full_like(P, 0.3), rules)
        U_right = embedded_affinity(A, np.full_like(P, 0.9), rules)
        np.testing.assert_allclose(U[:, :, 2:12], U_left[:, :, 2:12], atol=1e-10)
        np.testing.assert_allclose(U[:, :, 20:30], U_right[:, :, 20:30], atol=1e-10)


def uniform_flow(dy, dx, C=1, dims=(8, 8), dt=0.2):
    F = np.zeros((C, 2) + dims)
    F[:, 0] = dy / dt
    F[:, 1] = dx / dt
    return F


class TestMixAverage:
    def test_uniform_p_unchanged(self):
        rng = rng_(2)
        A = rng.random((1, 8, 8))
        P = np.full((3, 8, 8), 0.4)
        F = rng.normal(0, 2, (1, 2, 8, 8))
        np.testing.assert_allclose(mix_average(P, A, F, s=0.65, dt=0.2), 0.4,
                                   atol=1e-12)

    def test_hand_computed_weighted_mean(self):
        # masses 3 and 1 land fully on their right neighbors (s=0.5, shift 1)
        A = np.zeros((1, 8, 8))
        A[0, 4, 2] = 3.0
        A[0, 2, 6] = 1.0
        P = np.zeros((1, 8, 8))
        P[0, 4, 2] = 0.0
        P[0, 2, 6] = 1.0
        F = uniform_flow(0.0, 1.0)
        out = mix_average(P, A, F, s=0.5, dt=0.2)
        assert out[0, 4, 3] == pytest.approx(0.0)
        assert out[0, 2, 7] == pytest.approx(1.0)
        # now merge both onto one cell: masses 3 (param 0) and 1 (param 1)
        A2 = np.zeros((1, 8, 8))
        A2[0, 4, 2] = 3.0
        A2[0, 4, 4] = 1.0
        P2 = np.zeros((1, 8, 8))
        P2[0, 4, 4] = 1.0
        F2 = np.zeros((1, 2, 8, 8))
        F2[0, 1, 4, 2] = 1.0 / 0.2   # moves to column 3
        F2[0, 1, 4, 4] = -1.0 / 0.2  # moves to column 3
        out2 = mix_average(P2, A2, F2, s=0.5, dt=0.2)
        assert out2[0, 4, 3] == pytest.approx(0.25)

    def test_no_inflow_keeps_previous(self):
        A = np.zeros((1, 8, 8))
        A[0, 0, 0] = 1.0
        P = np.full((1, 8, 8), 0.7)
        P[0, 5, 5] = 0.123
        out = mix_average(P, A, uniform_flow(0, 0), s=0.5, dt=0.2)
        assert out[0, 5, 5] == pytest.approx(0.123)

    def test_convex_hull(self):
        rng = rng_(3)
        A = rng.random((1, 16, 16))
        P = rng.random((4, 16, 16))
        F = rng.normal(0, 4, (1, 2, 16, 16))
        out = mix_average(P, A, F, s=0.65, dt=0.2)
        assert out.min() >= 0.0 and out.max() <= 1.0


class TestMixSoftmax:
    def test_single_source_chosen_with_probability_one(self):
        A = np.zeros((1, 8, 8))
        A[0, 4, 4] = 2.0
        P = np.zeros((1, 8, 8))
        P[0, 4, 4] = 0.9
        out = mix_softmax(P, A, uniform_flow(0, 1), s=0.5, dt=0.2, rng=rng_(4))
        assert out[0, 4, 5] == pytest.approx(0.9)

    def test_equal_masses_sampled_evenly(self):
        # two sources push equal mass onto the cell between them
        A = np.zeros((1, 8, 8))
        A[0, 4, 2] = 1.0
        A[0, 4, 4] = 1.0
        P = np.zeros((1, 8, 8))
        P[0, 4, 4] = 1.0
        F = np.zeros((1, 2, 8, 8))
        F[0, 1, 4, 2] = 1.0 / 0.2
        F[0, 1, 4, 4] = -1.0 / 0.2
        rng = rng_(5)
        hits = 0
        trials = 10_000
        for _ in range(trials):
            out = mix_softmax(P, A, F, s=0.5, dt=0.2, rng=rng)
            hits += out[0, 4, 3] == 1.0
        assert abs(hits / trials - 0.5) <= 0.02

    def test_no_inflow_keeps_previous(self):
        A = np.zeros((1, 8, 8))
        P = np.full((2, 8, 8), 0.3)
        out = mix_softmax(P, A, uniform_flow(0, 0), s=0.5, dt=0.2, rng=rng_(6))
        np.testing.assert_array_equal(out, P)

    def test_fixed_seed_reproducible_bitwise(self):
        rng = rng_(7)
        A = rng.random((1, 16, 16))
        P = rng.random((3, 16, 16))
        F = rng.normal(0, 2, (1, 2, 16, 16))
        a = mix_softmax(P, A, F, s=0.65, dt=0.2, rng=rng_(42))
        b = mix_softmax(P, A, F, s=0.65, dt=0.2, rng=rng_(42))
        np.testing.assert_array_equal(a, b)

    def test_output_values_come_from_the_incoming_set(self):
        rng = rng_(8)
        A = rng.random((1, 12, 12))
        P = rng.random((2, 12, 12))
        F = rng.normal(0, 3, (1, 2, 12, 12))
        out = mix_softmax(P, A, F, s=0.65, dt=0.2, rng=rng_(9))
        existing = set(np.round(P.ravel(), 12))
        assert set(np.round(out.ravel(), 12)) <= existing


class TestMutateZone:
    def test_zero_sigma_unchanged(self):
        P = np.random.default_rng(10).random((3, 16, 16))
        np.testing.assert_array_equal(mutate_zone(P, rng_(0), 5.0, 0.0), P)

    def test_zero_radius_unchanged(self):
        P = np.random.default_rng(11).random((3, 16, 16))
        np.testing.assert_array_equal(mutate_zone(P, rng_(1), 0.0, 0.5), P)

    def test_large_sigma_saturates_but_stays_in_bounds(self):
        P = np.full((2, 16, 16), 0.5)
        out = mutate_zone(P, rng_(2), zone_radius=100.0, noise_sigma=10.0)
        assert out.min() >= 0.0 and out.max() <= 1.0
        assert np.mean((out == 0.0) | (out == 1.0)) > 0.9

    def test_cells_outside_zone_untouched(self):
        P = np.full((1, 32, 32), 0.5)
        out = mutate_zone(P, rng_(3), zone_radius=3.0, noise_sigma=1.0)
        changed = np.count_nonzero(out != 0.5)
        assert 0 < changed <= 32  # pi * 3^2 ~ 28 cells, one channel


def test_parameter_colors_deterministic_and_in_range():
    P = np.random.default_rng(12).random((5, 8, 8))
    c1 = parameter_colors(P)
    c2 = parameter_colors(P)
    np.testing.assert_array_equal(c1, c2)
    assert c1.shape == (3, 8, 8)
    assert c1.min() >= 0.0 and c1.max() <= 1.0
