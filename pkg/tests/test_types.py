"""Tests for the core data containers and their validation rules."""

import numpy as np
import pytest

from unmixlab import (
    AbundanceMap,
    DataError,
    EndmemberMatrix,
    MixingModelSpec,
    SpectralCube,
)


class TestEndmemberMatrix:
    def setup_method(self):
        rng = np.random.default_rng(0)
        self.signatures = rng.uniform(0.1, 0.9, size=(16, 3))

    def test_basic_construction(self):
        m = EndmemberMatrix(self.signatures, ("a", "b", "c"))
        assert m.num_bands == 16
        assert m.num_endmembers == 3
        assert m.names == ("a", "b", "c")
        assert m.wavelengths is None

    def test_coerces_names_to_strings(self):
        m = EndmemberMatrix(self.signatures, [1, 2, 3])
        assert m.names == ("1", "2", "3")

    def test_rejects_wrong_name_count(self):
        with pytest.raises(DataError):
            EndmemberMatrix(self.signatures, ("a", "b"))

    def test_rejects_duplicate_names(self):
        with pytest.raises(DataError):
            EndmemberMatrix(self.signatures, ("a", "a", "b"))

    def test_rejects_duplicate_signatures(self):
        sig = self.signatures.copy()
        sig[:, 2] = sig[:, 0]
        with pytest.raises(DataError):
            EndmemberMatrix(sig, ("a", "b", "c"))

    def test_rejects_out_of_range_reflectance(self):
        sig = self.signatures.copy()
        sig[0, 0] = 1.5
        with pytest.raises(DataError):
            EndmemberMatrix(sig, ("a", "b", "c"))

    def test_rejects_more_endmembers_than_bands(self):
        with pytest.raises(DataError):
            EndmemberMatrix(np.full((2, 3), 0.5) + np.arange(3) * 0.01, ("a", "b", "c"))

    def test_rejects_nonfinite(self):
        sig = self.signatures.copy()
        sig[3, 1] = np.nan
        with pytest.raises(DataError):
            EndmemberMatrix(sig, ("a", "b", "c"))

    def test_wavelength_length_checked(self):
        with pytest.raises(DataError):
            EndmemberMatrix(self.signatures, ("a", "b", "c"), wavelengths=np.arange(5.0))

    def test_select_reorders_columns(self):
        m = EndmemberMatrix(self.signatures, ("a", "b", "c"))
        sub = m.select(("c", "a"))
        assert sub.names == ("c", "a")
        np.testing.assert_array_equal(sub.signatures[:, 0], m.signatures[:, 2])
        np.testing.assert_array_equal(sub.signatures[:, 1], m.signatures[:, 0])

    def test_select_unknown_name(self):
        m = EndmemberMatrix(self.signatures, ("a", "b", "c"))
        with pytest.raises(DataError):
            m.select(("a", "nope"))


class TestSpectralCube:
    def test_basic_construction(self):
        cube = SpectralCube(np.zeros((4, 5, 6)))
        assert (cube.height, cube.width, cube.num_bands) == (4, 5, 6)
        assert cube.snr_db is None
        assert cube.provenance == ""

    def test_rejects_wrong_rank(self):
        with pytest.raises(DataError):
            SpectralCube(np.zeros((4, 5)))

    def test_rejects_nonfinite(self):
        data = np.zeros((2, 2, 3))
        data[1, 1, 1] = np.inf
        with pytest.raises(DataError):
            SpectralCube(data)

    def test_is_normalized(self):
        assert SpectralCube(np.full((2, 2, 3), 0.5)).is_normalized()
        assert not SpectralCube(np.full((2, 2, 3), 1.5)).is_normalized()
        assert not SpectralCube(np.full((2, 2, 3), -0.5)).is_normalized()

    def test_snr_coerced_to_float(self):
        cube = SpectralCube(np.zeros((2, 2, 3)), snr_db=20)
        assert isinstance(cube.snr_db, float)


class TestAbundanceMap:
    def test_valid_map(self):
        rng = np.random.default_rng(1)
        data = rng.dirichlet((1.0, 1.0, 1.0), size=(4, 4))
        amap = AbundanceMap(data)
        assert amap.num_endmembers == 3
        assert (amap.height, amap.width) == (4, 4)

    def test_rejects_negative(self):
        data = np.full((2, 2, 2), 0.5)
        data[0, 0] = (-0.2, 1.2)
        with pytest.raises(DataError):
            AbundanceMap(data)

    def test_rejects_sum_violation(self):
        with pytest.raises(DataError):
            AbundanceMap(np.full((2, 2, 2), 0.4))

    def test_tolerates_tiny_numerical_slack(self):
        data = np.full((2, 2, 2), 0.5)
        data[0, 0, 0] += 1e-9
        AbundanceMap(data)


class TestMixingModelSpec:
    def test_lmm_roundtrip_config(self):
        spec = MixingModelSpec(kind="lmm")
        again = MixingModelSpec.from_config(spec.to_config())
        assert again == spec

    def test_kind_uppercased_and_bmm_aliased(self):
        assert MixingModelSpec(kind="gbm").kind == "GBM"
        assert MixingModelSpec(kind="bmm").kind == "GBM"

    def test_unknown_kind(self):
        with pytest.raises(DataError):
            MixingModelSpec(kind="quadratic")

    def test_gamma_only_for_gbm(self):
        with pytest.raises(DataError):
            MixingModelSpec(kind="lmm", gamma=np.array([0.5]))

    def test_pnmm_requires_b(self):
        with pytest.raises(DataError):
            MixingModelSpec(kind="pnmm")

    def test_mlm_p_range(self):
        with pytest.raises(DataError):
            MixingModelSpec(kind="mlm", p=1.0, per_pixel=False)
        assert MixingModelSpec(kind="mlm", p=0.0, per_pixel=False).p == 0.0

    def test_explicit_and_per_pixel_exclusive(self):
        with pytest.raises(DataError):
            MixingModelSpec(kind="gbm", gamma=np.array([0.1, 0.2, 0.3]), per_pixel=True)
        with pytest.raises(DataError):
            MixingModelSpec(kind="mlm", p=0.3, per_pixel=True)

    def test_per_pixel_false_needs_explicit_values(self):
        with pytest.raises(DataError):
            MixingModelSpec(kind="gbm", per_pixel=False)
        with pytest.raises(DataError):
            MixingModelSpec(kind="mlm", per_pixel=False)

    def test_gbm_roundtrip_with_gamma(self):
        spec = MixingModelSpec(
            kind="gbm", gamma=np.array([0.1, 0.5, 0.9]), per_pixel=False, seed=3
        )
        again = MixingModelSpec.from_config(spec.to_config())
        np.testing.assert_array_equal(again.gamma, spec.gamma)
        assert again.seed == 3

    def test_from_config_rejects_unknown_keys(self):
        with pytest.raises(DataError):
            MixingModelSpec.from_config({"kind": "lmm", "bogus": 1})

    def test_from_config_requires_kind(self):
        with pytest.raises(DataError):
            MixingModelSpec.from_config({"per_pixel": True})
