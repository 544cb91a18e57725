import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcrf.core import EnergyParams, SuperpixelPartition, pairwise_energy
from qcrf.exceptions import InputError, UndefinedResultError
from qcrf.synthetic import make_instance
from qcrf.superpix import slic_partition
from qcrf.weights import (
    WeightTable,
    build_weights,
    external_weight,
    gaussian_pairwise_energy,
    internal_weight,
    relative_difference,
)


def singletons(image):
    image = np.asarray(image, dtype=float)
    return SuperpixelPartition.from_assignment(np.arange(image.size).reshape(image.shape), image)


class TestBuildWeights:
    def test_flat_superpixel_internal_weight_is_lambda1(self):
        p = SuperpixelPartition.from_assignment(np.zeros((2, 2), int), np.full((2, 2), 7.0))
        assert build_weights(p).w[0, 0] == 1.0

    def test_identical_superpixels_external_weight(self):
        p = SuperpixelPartition(np.array([[0, 1]]), [1, 1], [5.0, 5.0], [0.0, 0.0],
                                [[0.0, 0.0], [0.0, 0.0]])
        assert build_weights(p).w[0, 1] == 2.0

    def test_internal_weight_at_sigma_beta1(self):
        params = EnergyParams(beta1=3.0)
        w = internal_weight(np.array([9.0]), params)
        assert w[0] == pytest.approx(math.exp(-0.5), rel=1e-12)
        assert w[0] == pytest.approx(0.60653, abs=1e-5)

    def test_external_weight_formula(self):
        params = EnergyParams(lambda1=0.7, lambda2=1.3, beta2=4.0, beta3=2.0, smoothness=2.0)
        value = external_weight(3.0, 4.0, 1.0, params)
        expected = 2.0 * (0.7 * math.exp(-25 / 32) + 1.3 * math.exp(-1 / 8))
        assert value == pytest.approx(expected, rel=1e-14)

    def test_table_properties(self, rng):
        image = rng.uniform(0, 255, (12, 12))
        w = build_weights(slic_partition(image, 9)).w
        assert np.array_equal(w, w.T)
        assert np.all(np.isfinite(w)) and w.min() >= 0

    def test_monotone_in_sigma_and_distance(self):
        params = EnergyParams()
        sig = internal_weight(np.array([0.0, 1.0, 25.0, 400.0]), params)
        assert np.all(np.diff(sig) < 0)
        d = external_weight(np.array([0.0, 1.0, 5.0, 40.0]), 0.0, 3.0, params)
        mu = external_weight(2.0, 2.0, np.array([0.0, 1.0, 5.0, 40.0]), params)
        assert np.all(np.diff(d) <= 0) and np.all(np.diff(mu) <= 0)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), c=st.floats(0.0, 50.0))
    def test_smoothness_scales_linearly(self, seed, c):
        rng = np.random.default_rng(seed)
        image = rng.uniform(0, 255, (6, 6))
        p = slic_partition(image, 4)
        labels = rng.integers(0, 3, (6, 6))
        w1 = build_weights(p, EnergyParams(smoothness=1.0))
        wc = build_weights(p, EnergyParams(smoothness=c))
        np.testing.assert_allclose(wc.w, c * w1.w, rtol=1e-12, atol=0)
        assert pairwise_energy(labels, p, wc) == pytest.approx(
            c * pairwise_energy(labels, p, w1), rel=1e-12, abs=1e-12)


class TestWeightTable:
    def test_rejects_asymmetric(self):
        with pytest.raises(InputError):
            WeightTable([[0.0, 1.0], [2.0, 0.0]])

    def test_rejects_negative(self):
        with pytest.raises(InputError):
            WeightTable([[-1.0]])

    def test_csv_round_trip(self, tmp_path, rng):
        w = rng.uniform(0, 1, (4, 4))
        table = WeightTable(w + w.T)
        path = tmp_path / "w.csv"
        table.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "s,t,w" and len(lines) == 1 + 10
        np.testing.assert_array_equal(WeightTable.from_csv(path).w, table.w)

    def test_take(self):
        table = WeightTable([[1.0, 2.0], [2.0, 3.0]])
        np.testing.assert_array_equal(table.take([1, 1, 0]).w,
                                      [[3.0, 3.0, 2.0], [3.0, 3.0, 2.0], [2.0, 2.0, 1.0]])


class TestGaussian:
    def test_constant_labeling(self, rng):
        assert gaussian_pairwise_energy(rng.uniform(0, 255, (4, 4)), np.zeros((4, 4), int)) == 0.0

    def test_two_pixels(self):
        image = np.array([[10.0, 30.0]])
        params = EnergyParams()
        expected = math.exp(-1 / (2 * 50.0**2)) + math.exp(-400 / (2 * 13.0**2))
        assert gaussian_pairwise_energy(image, np.array([[0, 1]]), params) == pytest.approx(
            expected, rel=1e-14)

    def test_size_guard(self):
        with pytest.raises(InputError):
            gaussian_pairwise_energy(np.zeros((10, 10)), np.zeros((10, 10), int), max_pixels=99)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_singleton_partition_is_gaussian_limit(self, seed):
        rng = np.random.default_rng(seed)
        image = rng.uniform(0, 255, (4, 5))
        labels = rng.integers(0, 3, (4, 5))
        params = EnergyParams(lambda1=0.8, lambda2=1.4, beta2=3.0, beta3=40.0)
        quantized = pairwise_energy(labels, singletons(image), build_weights(singletons(image), params))
        assert quantized == pytest.approx(gaussian_pairwise_energy(image, labels, params), rel=1e-12)

    def test_slic_singletons_reach_the_limit(self):
        inst = make_instance(3, (8, 8))
        p = slic_partition(inst.image, 64)
        eq = pairwise_energy(inst.truth, p, build_weights(p))
        assert relative_difference(eq, gaussian_pairwise_energy(inst.image, inst.truth)) < 1e-10


class TestRelativeDifference:
    def test_values(self):
        assert relative_difference(5, 5) == 0
        assert relative_difference(6, 5) == pytest.approx(20)
        assert relative_difference(4, 5) == pytest.approx(20)

    def test_zero_reference(self):
        with pytest.raises(UndefinedResultError):
            relative_difference(1.0, 0.0)

    def test_trend_toward_gaussian(self):
        inst = make_instance(1, (24, 24))
        eg = gaussian_pairwise_energy(inst.image, inst.truth)
        diffs = []
        for count in (8, 36, 144, 576):
            p = slic_partition(inst.image, count)
            diffs.append(relative_difference(pairwise_energy(inst.truth, p, build_weights(p)), eg))
        inversions = sum(b > a for a, b in zip(diffs, diffs[1:]))
        assert inversions <= 1 and diffs[-1] < 1e-10
