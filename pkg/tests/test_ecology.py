import numpy as np
import pytest

from flowlenia.ecology import (EcologyState, food_decay_update, make_chem_field,
                               sample_chem_center, sample_wall_discs, wall_flow)
from flowlenia.grids import total_mass


def rng_(seed=0):
    return np.random.Generator(np.random.Philox(seed))


class TestFoodDecay:
    def test_no_food_no_decay_is_identity(self):
        A = np.random.default_rng(0).random((2, 16, 16))
        eco = EcologyState(food=np.zeros((16, 16)), rho_decay=0.0, rho_digest=0.2)
        out, eco2 = food_decay_update(A, eco)
        np.testing.assert_array_equal(out, A)
        np.testing.assert_array_equal(eco2.food, 0.0)

    def test_matter_plus_food_conserved_without_decay(self):
        rng = np.random.default_rng(1)
        A = rng.random((2, 16, 16))
        food = rng.random((16, 16))
        eco = EcologyState(food=food.copy(), rho_decay=0.0, rho_digest=0.3)
        out, eco2 = food_decay_update(A, eco)
        before = total_mass(A).sum() + food.sum()
        after = total_mass(out).sum() + eco2.food.sum()
        assert abs(after - before) / before < 1e-10

    def test_digest_clipped_by_available_food(self):
        A = np.full((1, 8, 8), 1.0)
        food = np.full((8, 8), 0.1)  # A_sum * rho = 0.2 = 2x food
        eco = EcologyState(food=food.copy(), rho_decay=0.0, rho_digest=0.2)
        out, eco2 = food_decay_update(A, eco)
        np.testing.assert_allclose(eco2.food, 0.0, atol=1e-12)
        np.testing.assert_allclose(out, 1.1, atol=1e-12)

    def test_pure_decay_is_geometric(self):
        A = np.random.default_rng(2).random((1, 16, 16))
        m0 = total_mass(A)[0]
        eco = EcologyState(food=np.zeros((16, 16)), rho_decay=0.05,
                           rho_digest=0.0)
        cur = A
        for _ in range(10):
            cur, eco = food_decay_update(cur, eco)
        expected = m0 * (1 - 0.05) ** 10
        assert abs(total_mass(cur)[0] - expected) / expected < 1e-8

    def test_digest_credited_proportionally_to_channel_mass(self):
        A = np.zeros((2, 8, 8))
        A[0, 3, 3] = 0.3
        A[1, 3, 3] = 0.1
        food = np.zeros((8, 8))
        food[3, 3] = 1.0
        eco = EcologyState(food=food, rho_decay=0.0, rho_digest=0.5)
        out, _ = food_decay_update(A, eco)  # digest = 0.4 * 0.5 = 0.2
        assert out[0, 3, 3] == pytest.approx(0.3 + 0.2 * 0.75)
        assert out[1, 3, 3] == pytest.approx(0.1 + 0.2 * 0.25)


class TestWallFlow:
    def test_no_walls_zero_field(self):
        np.testing.assert_array_equal(wall_flow(np.zeros((16, 16))), 0.0)

    def test_disc_pushes_outward(self):
        walls = np.zeros((32, 32))
        yy, xx = np.mgrid[0:32, 0:32]
        disc = (yy - 16) ** 2 + (xx - 16) ** 2 <= 16
        walls[disc] = 1.0
        F = wall_flow(walls, strength=10.0)
        # on the rim, flow should point away from the disc center
        for y, x in [(16, 22), (16, 10), (22, 16), (10, 16)]:
            radial = np.array([y - 16, x - 16], dtype=float)
            assert F[:, y, x] @ radial > 0
        assert np.abs(F).max() > 0

    def test_strength_linearity(self):
        walls = np.zeros((16, 16))
        walls[6:10, 6:10] = 1.0
        np.testing.assert_allclose(wall_flow(walls, strength=20.0),
                                   2.0 * wall_flow(walls, strength=10.0),
                                   atol=1e-12)


class TestChemField:
    def test_peak_is_one(self):
        chem = make_chem_field((32, 32), (10.0, 20.0), sigma_gamma=5.0)
        assert chem[10, 20] == pytest.approx(1.0)
        assert chem.max() == pytest.approx(1.0)

    def test_value_at_one_sigma(self):
        chem = make_chem_field((64, 64), (32.0, 32.0), sigma_gamma=5.0)
        assert chem[32, 37] == pytest.approx(np.exp(-0.5))

    def test_reflection_symmetry(self):
        chem = make_chem_field((33, 33), (16.0, 16.0), sigma_gamma=4.0)
        np.testing.assert_allclose(chem, chem[::-1, :], atol=1e-12)
        np.testing.assert_allclose(chem, chem[:, ::-1], atol=1e-12)

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(ValueError):
            make_chem_field((16, 16), (8.0, 8.0), sigma_gamma=0.0)


def test_sample_wall_discs_geometry():
    walls = sample_wall_discs(rng_(0), (64, 64), n_discs=8, circle_radius=20.0,
                              disc_radius=3.0)
    assert walls.shape == (64, 64)
    assert walls.max() == 1.0
    assert walls.min() == 0.0


def test_sample_chem_center_on_circle():
    for seed in range(5):
        cy, cx = sample_chem_center(rng_(seed), (64, 64), circle_radius=20.0)
        dy = min(abs(cy - 32), 64 - abs(cy - 32))
        dx = min(abs(cx - 32), 64 - abs(cx - 32))
        assert np.hypot(dy, dx) == pytest.approx(20.0, abs=1e-6)
