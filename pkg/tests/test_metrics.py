"""Tests for the evaluation metrics: angular distances, divergence, RMSE."""

import json
import math

import numpy as np
import pytest

from unmixlab import (
    AbundanceMap,
    DataError,
    EvalReport,
    SpectralCube,
    aad,
    aid,
    align_endmembers,
    evaluate,
    permute_channels,
    re,
    sad,
)


def _amap(vectors):
    """Stack a list of R-vectors into a 1×N×R abundance map."""
    return AbundanceMap(np.asarray(vectors, dtype=np.float64)[np.newaxis, :, :])


class TestAbundanceAngleDistance:
    def test_identical_maps_give_zero(self):
        rng = np.random.default_rng(7)
        raw = rng.dirichlet((1.0, 1.0, 1.0), size=(6, 5))
        amap = AbundanceMap(raw)
        assert aad(amap, amap) == pytest.approx(0.0, abs=1e-7)

    def test_orthogonal_vectors_give_right_angle(self):
        a = _amap([[1.0, 0.0]])
        b = _amap([[0.0, 1.0]])
        assert aad(a, b) == pytest.approx(math.pi / 2, abs=1e-12)

    def test_hand_computed_two_channel_angle(self):
        # cos = 0.5 / (sqrt(0.5) * sqrt(0.68))
        a = _amap([[0.5, 0.5]])
        b = _amap([[0.8, 0.2]])
        expected = math.acos(0.5 / (math.sqrt(0.5) * math.sqrt(0.68)))
        assert expected == pytest.approx(0.5404, abs=5e-5)
        assert aad(a, b) == pytest.approx(expected, rel=1e-12)

    def test_mean_over_pixels(self):
        a = _amap([[1.0, 0.0], [0.5, 0.5]])
        b = _amap([[0.0, 1.0], [0.5, 0.5]])
        assert aad(a, b) == pytest.approx(math.pi / 4, rel=1e-7)

    def test_invariant_to_simultaneous_pixel_permutation(self):
        rng = np.random.default_rng(11)
        raw_a = rng.dirichlet((2.0, 1.0, 1.0), size=(4, 4))
        raw_b = rng.dirichlet((1.0, 1.0, 2.0), size=(4, 4))
        perm = rng.permutation(16)
        flat_a = raw_a.reshape(16, 3)[perm].reshape(4, 4, 3)
        flat_b = raw_b.reshape(16, 3)[perm].reshape(4, 4, 3)
        np.testing.assert_allclose(
            aad(AbundanceMap(raw_a), AbundanceMap(raw_b)),
            aad(AbundanceMap(flat_a), AbundanceMap(flat_b)),
            rtol=1e-12,
        )

    def test_accepts_plain_arrays(self):
        a = np.asarray([[[1.0, 0.0]]])
        b = np.asarray([[[0.0, 1.0]]])
        assert aad(a, b) == pytest.approx(math.pi / 2, abs=1e-12)

    def test_shape_mismatch_rejected(self):
        a = _amap([[0.5, 0.5]])
        b = AbundanceMap(np.full((1, 1, 3), 1.0 / 3.0))
        with pytest.raises(DataError):
            aad(a, b)


class TestAbundanceInformationDivergence:
    def test_identical_maps_give_zero(self):
        a = _amap([[0.3, 0.7]])
        assert aid(a, a) == pytest.approx(0.0, abs=1e-9)

    def test_symmetry(self):
        a = _amap([[0.2, 0.8]])
        b = _amap([[0.6, 0.4]])
        assert aid(a, b) == pytest.approx(aid(b, a), rel=1e-12)

    def test_hand_computed_symmetrized_divergence(self):
        # 0.4 * log(9) for (0.5, 0.5) against (0.9, 0.1)
        a = _amap([[0.5, 0.5]])
        b = _amap([[0.9, 0.1]])
        expected = 0.4 * math.log(9.0)
        assert expected == pytest.approx(0.8789, abs=5e-5)
        assert aid(a, b) == pytest.approx(expected, rel=1e-10)

    def test_zero_entries_are_floored_not_fatal(self):
        a = _amap([[1.0, 0.0]])
        b = _amap([[0.5, 0.5]])
        value = aid(a, b)
        assert np.isfinite(value) and value > 0


class TestSpectralAngleDistance:
    def test_identical_cubes_give_zero(self):
        rng = np.random.default_rng(3)
        cube = SpectralCube(rng.uniform(0.1, 0.9, size=(3, 4, 8)))
        assert sad(cube, cube) == pytest.approx(0.0, abs=1e-7)

    def test_scale_invariance(self):
        rng = np.random.default_rng(4)
        data = rng.uniform(0.1, 0.9, size=(3, 4, 8))
        assert sad(SpectralCube(data), SpectralCube(np.clip(2.0 * data, 0, None))) == pytest.approx(
            0.0, abs=1e-7
        )

    def test_orthogonal_two_band_spectra(self):
        y = SpectralCube(np.asarray([[[1.0, 0.0]]]))
        y_hat = SpectralCube(np.asarray([[[0.0, 1.0]]]))
        assert sad(y, y_hat) == pytest.approx(math.pi / 2, abs=1e-12)


class TestReconstructionError:
    def test_identical_cubes_give_zero(self):
        cube = SpectralCube(np.full((2, 2, 4), 0.5))
        assert re(cube, cube) == 0.0

    def test_constant_offset(self):
        y = SpectralCube(np.full((2, 2, 4), 0.4))
        y_hat = SpectralCube(np.full((2, 2, 4), 0.5))
        assert re(y, y_hat) == pytest.approx(0.1, rel=1e-12)

    def test_errors_on_half_the_entries(self):
        y = np.zeros((1, 2, 4))
        y_hat = np.zeros((1, 2, 4))
        y_hat[0, 0, :] = 1.0  # half of all entries off by exactly 1
        assert re(SpectralCube(y), SpectralCube(y_hat)) == pytest.approx(
            math.sqrt(0.5), rel=1e-12
        )

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DataError):
            re(SpectralCube(np.zeros((1, 1, 4))), SpectralCube(np.zeros((1, 1, 5))))


class TestEndmemberAlignment:
    def test_recovers_a_known_permutation(self):
        rng = np.random.default_rng(5)
        m = rng.uniform(0.1, 0.9, size=(12, 4))
        perm = (2, 0, 3, 1)
        shuffled = m[:, perm]
        recovered = align_endmembers(shuffled, m)
        np.testing.assert_array_equal(shuffled[:, recovered], m)

    def test_identity_when_already_aligned(self):
        rng = np.random.default_rng(6)
        m = rng.uniform(0.1, 0.9, size=(8, 3))
        assert align_endmembers(m, m) == (0, 1, 2)

    def test_permute_channels_round_trip(self):
        rng = np.random.default_rng(8)
        raw = rng.dirichlet((1.0, 1.0, 1.0, 1.0), size=(3, 3))
        amap = AbundanceMap(raw)
        perm = (3, 1, 0, 2)
        permuted = permute_channels(amap, perm)
        np.testing.assert_allclose(permuted.data[..., 0], raw[..., 3])
        inverse = tuple(int(i) for i in np.argsort(perm))
        restored = permute_channels(permuted, inverse)
        np.testing.assert_allclose(restored.data, raw)


class TestEvalReport:
    def test_json_round_trip(self):
        report = EvalReport(aad=0.12, aid=0.3, re=0.05, sad=0.2, label="fcls")
        clone = EvalReport.from_json(report.to_json())
        assert clone == report

    def test_csv_row_contains_all_metrics(self):
        report = EvalReport(aad=0.12, aid=0.3, re=0.05, sad=0.2, label="fcls")
        text = report.to_csv_row()
        header, row = text.strip().splitlines()
        assert "aad" in header and "fcls" in row and "0.12" in row

    def test_out_of_range_angle_rejected(self):
        with pytest.raises(DataError):
            EvalReport(aad=4.0, aid=0.1)
        with pytest.raises(DataError):
            EvalReport(aad=0.1, aid=-0.5)

    def test_evaluate_bundles_metrics(self):
        rng = np.random.default_rng(9)
        truth = AbundanceMap(rng.dirichlet((1.0, 1.0), size=(4, 4)))
        cube = SpectralCube(rng.uniform(0.1, 0.9, size=(4, 4, 6)))
        report = evaluate(truth, truth, cube=cube, reconstruction=cube, label="self")
        assert report.aad == pytest.approx(0.0, abs=1e-7)
        assert report.re == pytest.approx(0.0, abs=1e-12)

    def test_evaluate_requires_both_cubes_for_re(self):
        rng = np.random.default_rng(10)
        truth = AbundanceMap(rng.dirichlet((1.0, 1.0), size=(2, 2)))
        cube = SpectralCube(rng.uniform(0.1, 0.9, size=(2, 2, 6)))
        with pytest.raises(DataError):
            evaluate(truth, truth, cube=cube)
