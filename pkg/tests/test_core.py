import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import pair_energy, random_instance, random_partition
from qcrf.core import (
    EnergyParams,
    SolverConfig,
    SuperpixelPartition,
    count_labels,
    disagreement_counts,
    pairwise_energy,
    total_energy,
)
from qcrf.exceptions import InputError
from qcrf.weights import WeightTable


def two_block_partition():
    image = np.zeros((2, 2))
    return SuperpixelPartition.from_assignment(np.array([[0, 0], [1, 1]]), image)


class TestPartition:
    def test_statistics_are_population_moments(self):
        image = np.array([[0.0, 2.0, 10.0], [4.0, 6.0, 10.0]])
        assignment = np.array([[0, 0, 1], [0, 0, 1]])
        p = SuperpixelPartition.from_assignment(assignment, image)
        np.testing.assert_array_equal(p.sizes, [4, 2])
        np.testing.assert_allclose(p.means, [3.0, 10.0])
        np.testing.assert_allclose(p.variances, [5.0, 0.0])
        np.testing.assert_allclose(p.centroids, [[0.5, 0.5], [0.5, 2.0]])

    def test_arrays_are_read_only(self):
        p = two_block_partition()
        with pytest.raises(ValueError):
            p.assignment[0, 0] = 1

    def test_non_compact_indices_rejected(self):
        with pytest.raises(InputError, match="empty"):
            SuperpixelPartition.from_assignment(np.array([[0, 2]]), np.zeros((1, 2)))

    def test_shape_mismatch_rejected(self):
        with pytest.raises(InputError):
            SuperpixelPartition.from_assignment(np.zeros((2, 2), int), np.zeros((2, 3)))

    def test_negative_index_rejected(self):
        with pytest.raises(InputError):
            SuperpixelPartition.from_assignment(np.array([[0, -1]]), np.zeros((1, 2)))


class TestParams:
    @pytest.mark.parametrize("field", ["beta1", "beta2", "beta3"])
    def test_nonpositive_beta(self, field):
        with pytest.raises(InputError):
            EnergyParams(**{field: 0.0})

    def test_config_rejects_unknown_truncation(self):
        with pytest.raises(InputError):
            SolverConfig(truncation="nope")

    def test_config_rejects_zero_sweeps(self):
        with pytest.raises(InputError):
            SolverConfig(max_sweeps=0)


class TestCounts:
    def test_constant_labeling(self, rng):
        p = random_partition(rng, 3, 4, 5)
        counts = count_labels(np.zeros((3, 4), int), p, 3)
        np.testing.assert_array_equal(counts[:, 0], p.sizes)
        assert counts[:, 1:].sum() == 0

    def test_singletons_are_one_hot(self, rng):
        image = rng.uniform(0, 255, (2, 3))
        p = SuperpixelPartition.from_assignment(np.arange(6).reshape(2, 3), image)
        labels = rng.integers(0, 3, (2, 3))
        counts = count_labels(labels, p, 3)
        np.testing.assert_array_equal(counts, np.eye(3, dtype=int)[labels.ravel()])

    def test_matches_direct_tally(self, rng):
        p = random_partition(rng, 2, 5, 4)
        labels = rng.integers(0, 3, (2, 5))
        counts = count_labels(labels, p, 3)
        expected = np.zeros((4, 3), int)
        for s, l in zip(p.assignment.ravel(), labels.ravel()):
            expected[s, l] += 1
        np.testing.assert_array_equal(counts, expected)
        np.testing.assert_array_equal(counts.sum(axis=1), p.sizes)

    def test_disagreement_counts_by_enumeration(self, rng):
        p = random_partition(rng, 3, 3, 3)
        labels = rng.integers(0, 2, (3, 3))
        d = disagreement_counts(count_labels(labels, p, 2))
        sp, x = p.assignment.ravel(), labels.ravel()
        expected = np.zeros((3, 3))
        for a in range(9):
            for b in range(9):
                if a != b and x[a] != x[b]:
                    expected[sp[a], sp[b]] += 1
        # ordered pairs: cross pairs once per (s, t), internal pairs twice
        np.testing.assert_array_equal(d, expected)


class TestTotalEnergy:
    def test_constant_labeling_zero_unaries(self, rng):
        unary, p, w = random_instance(rng, 3, 3, 4, 2)
        assert total_energy(np.ones((3, 3), int), np.zeros_like(unary), p, w) == 0.0

    def test_two_blocks(self):
        p = two_block_partition()
        w = WeightTable([[0.0, 1.0], [1.0, 0.0]])
        labels = np.array([[0, 0], [1, 1]])
        assert total_energy(labels, np.zeros((2, 2, 2)), p, w) == 4.0

    def test_dimension_mismatch(self, rng):
        unary, p, w = random_instance(rng, 3, 3, 4, 2)
        with pytest.raises(InputError):
            total_energy(np.zeros((3, 4), int), unary, p, w)
        with pytest.raises(InputError):
            total_energy(np.zeros((3, 3), int), unary[:2], p, w)

    def test_pairwise_part(self, rng):
        unary, p, w = random_instance(rng, 2, 4, 3, 3)
        labels = rng.integers(0, 3, (2, 4))
        unary_part = np.take_along_axis(unary, labels[..., None], 2).sum()
        assert total_energy(labels, unary, p, w) == pytest.approx(
            unary_part + pairwise_energy(labels, p, w), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), h=st.integers(1, 3), w=st.integers(1, 4),
       m=st.integers(1, 5), k=st.integers(2, 4))
def test_matches_pair_enumeration(seed, h, w, m, k):
    rng = np.random.default_rng(seed)
    unary, p, weights = random_instance(rng, h, w, m, k)
    labels = rng.integers(0, k, (h, w))
    assert total_energy(labels, unary, p, weights) == pytest.approx(
        pair_energy(labels, unary, p, weights), rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_invariant_under_superpixel_renaming(seed):
    rng = np.random.default_rng(seed)
    unary, p, weights = random_instance(rng, 3, 4, 5, 3)
    labels = rng.integers(0, 3, (3, 4))
    perm = rng.permutation(p.n_superpixels)  # old index -> new index
    inv = np.argsort(perm)
    q = SuperpixelPartition(perm[p.assignment], p.sizes[inv], p.means[inv], p.variances[inv],
                            p.centroids[inv])
    wq = WeightTable(weights.w[np.ix_(inv, inv)])
    assert total_energy(labels, unary, q, wq) == pytest.approx(
        total_energy(labels, unary, p, weights), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(-100, 100))
def test_constant_shift_of_one_pixel(seed, c):
    rng = np.random.default_rng(seed)
    unary, p, weights = random_instance(rng, 2, 3, 3, 3)
    labels = rng.integers(0, 3, (2, 3))
    shifted = unary.copy()
    shifted[1, 2] += c
    assert total_energy(labels, shifted, p, weights) == pytest.approx(
        total_energy(labels, unary, p, weights) + c, rel=1e-12, abs=1e-9)
