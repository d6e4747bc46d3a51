"""Tests for the mutual-information lower bound and statistics network."""

import numpy as np
import pytest
import torch

from unmixlab import (
    ConfigError,
    DataError,
    MineStatistics,
    dv_bound,
    estimate_mutual_information,
)
from unmixlab.mine import mi_lower_bound, subpatch_pairs


class TestDvBound:
    def test_constant_scores_give_zero(self):
        t = torch.full((16,), 1.7)
        assert dv_bound(t, t).item() == pytest.approx(0.0, abs=1e-6)

    def test_hand_value(self):
        # E[joint] = 1, log mean exp(marginal) = log((e^0 + e^2)/2)
        joint = torch.tensor([1.0, 1.0])
        marginal = torch.tensor([0.0, 2.0])
        expected = 1.0 - np.log((1.0 + np.exp(2.0)) / 2.0)
        assert dv_bound(joint, marginal).item() == pytest.approx(expected, rel=1e-6)

    def test_higher_joint_scores_raise_bound(self):
        marginal = torch.zeros(8)
        low = dv_bound(torch.zeros(8), marginal)
        high = dv_bound(torch.ones(8), marginal)
        assert high.item() > low.item()

    def test_rejects_matrices(self):
        with pytest.raises(DataError):
            dv_bound(torch.zeros(4, 1), torch.zeros(4))

    def test_large_scores_stay_finite(self):
        bound = dv_bound(torch.full((4,), 80.0), torch.full((4,), 80.0))
        assert torch.isfinite(bound)


class TestMineStatistics:
    def test_output_shape(self):
        torch.manual_seed(0)
        net = MineStatistics(3, 2)
        out = net(torch.rand(5, 3), torch.rand(5, 2))
        assert out.shape == (5,)

    def test_dimension_validation(self):
        torch.manual_seed(0)
        net = MineStatistics(3, 2)
        with pytest.raises(DataError):
            net(torch.rand(5, 2), torch.rand(5, 2))
        with pytest.raises(DataError):
            net(torch.rand(4, 3), torch.rand(5, 2))

    def test_bad_dims_rejected(self):
        with pytest.raises(ConfigError):
            MineStatistics(0, 2)


class TestMiLowerBound:
    def test_default_permutation_is_roll(self):
        torch.manual_seed(0)
        net = MineStatistics(2, 2)
        x, y = torch.rand(6, 2), torch.rand(6, 2)
        roll = torch.roll(torch.arange(6), shifts=1)
        auto = mi_lower_bound(net, x, y)
        pinned = mi_lower_bound(net, x, y, permutation=roll)
        assert auto.item() == pytest.approx(pinned.item())


class TestSubpatchPairs:
    def test_matched_windows(self):
        torch.manual_seed(1)
        gen = torch.Generator().manual_seed(3)
        x = torch.arange(2 * 1 * 6 * 6, dtype=torch.float32).reshape(2, 1, 6, 6)
        x_flat, y_flat = subpatch_pairs(x, x.clone(), 3, gen)
        assert x_flat.shape == (2, 9)
        torch.testing.assert_close(x_flat, y_flat)

    def test_generator_pins_locations(self):
        x = torch.rand(4, 2, 8, 8)
        y = torch.rand(4, 2, 8, 8)
        a = subpatch_pairs(x, y, 4, torch.Generator().manual_seed(9))
        b = subpatch_pairs(x, y, 4, torch.Generator().manual_seed(9))
        torch.testing.assert_close(a[0], b[0])
        torch.testing.assert_close(a[1], b[1])

    def test_window_too_large(self):
        with pytest.raises(DataError):
            subpatch_pairs(torch.rand(1, 1, 4, 4), torch.rand(1, 1, 4, 4), 5)

    def test_batch_mismatch(self):
        with pytest.raises(DataError):
            subpatch_pairs(torch.rand(2, 1, 4, 4), torch.rand(3, 1, 4, 4), 2)


class TestEstimateMutualInformation:
    def test_dependent_beats_independent(self):
        rng = np.random.default_rng(10)
        x = rng.normal(size=2000)
        noise = rng.normal(size=2000)
        dependent = estimate_mutual_information(x, x + 0.3 * noise, steps=300, seed=1)
        independent = estimate_mutual_information(x, rng.normal(size=2000), steps=300, seed=1)
        assert dependent > independent + 0.3

    def test_independent_near_zero(self):
        rng = np.random.default_rng(11)
        estimate = estimate_mutual_information(
            rng.normal(size=1500), rng.normal(size=1500), steps=300, seed=2
        )
        assert abs(estimate) < 0.25

    def test_deterministic_per_seed(self):
        rng = np.random.default_rng(12)
        x = rng.normal(size=400)
        y = x + rng.normal(size=400)
        one = estimate_mutual_information(x, y, steps=50, seed=5)
        two = estimate_mutual_information(x, y, steps=50, seed=5)
        assert one == two

    def test_sample_count_mismatch(self):
        with pytest.raises(DataError):
            estimate_mutual_information(np.zeros(4), np.zeros(5), steps=1)
