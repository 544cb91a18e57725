import numpy as np
import pytest

from conftest import pair_energy, random_instance
from qcrf.binary_solver import solve_binary
from qcrf.core import SuperpixelPartition, total_energy
from qcrf.exceptions import InputError
from qcrf.oracle import enumerate_optimum, exact_binary, naive_energy, naive_message_passing
from qcrf.synthetic import make_instance
from qcrf.superpix import slic_partition
from qcrf.weights import WeightTable, build_weights


def recursive_minimum(unary, partition, weights):
    """Depth-first enumeration with incremental energies."""
    f = unary.reshape(-1, unary.shape[2])
    sp = partition.assignment.ravel()
    n, k = f.shape

    def go(i, x, energy):
        if i == n:
            return energy
        best = np.inf
        for a in range(k):
            extra = f[i, a] + sum(weights.w[sp[i], sp[j]] for j in range(i) if x[j] != a)
            best = min(best, go(i + 1, x + [a], energy + extra))
        return best

    return go(0, [], 0.0)


class TestEnumerate:
    def test_single_pixel(self):
        p = SuperpixelPartition.from_assignment(np.zeros((1, 1), int), np.zeros((1, 1)))
        labels, energy = enumerate_optimum(np.array([[[3.0, 1.0, 2.0]]]), p, WeightTable([[0.0]]))
        assert labels[0, 0] == 1 and energy == 1.0

    def test_huge_weight_gives_best_constant(self):
        p = SuperpixelPartition.from_assignment(np.zeros((1, 2), int), np.zeros((1, 2)))
        unary = np.array([[[0.0, 5.0, 3.0], [9.0, 0.0, 4.0]]])
        labels, energy = enumerate_optimum(unary, p, WeightTable([[1e6]]))
        # constants cost 9, 5 and 7
        np.testing.assert_array_equal(labels, [[1, 1]])
        assert energy == 5.0

    def test_matches_recursive_enumerator(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            unary, p, w = random_instance(rng, 2, 4, int(rng.integers(1, 5)), 3)
            labels, energy = enumerate_optimum(unary, p, w)
            ref = recursive_minimum(unary, p, w)
            assert energy == pytest.approx(ref, rel=1e-12)
            assert pair_energy(labels, unary, p, w) == pytest.approx(energy, rel=1e-12)

    def test_lexicographic_tie_break(self):
        p = SuperpixelPartition.from_assignment(np.array([[0, 1]]), np.zeros((1, 2)))
        labels, _ = enumerate_optimum(np.zeros((1, 2, 2)), p, WeightTable(np.zeros((2, 2))))
        np.testing.assert_array_equal(labels, [[0, 0]])

    def test_guard(self, rng):
        unary, p, w = random_instance(rng, 2, 3, 2, 3)
        with pytest.raises(InputError):
            enumerate_optimum(unary, p, w, max_states=100)


class TestExactBinary:
    def test_positive_costs(self, rng):
        unary, p, w = random_instance(rng, 4, 4, 3, 2)
        unary[..., 1] = unary[..., 0] + 1
        labels, _ = exact_binary(unary, p, w)
        np.testing.assert_array_equal(labels, 0)

    def test_matches_enumeration(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            h, w = rng.integers(1, 4), rng.integers(1, 5)
            unary, p, weights = random_instance(rng, h, w, int(rng.integers(1, 5)), 2, signed=True)
            _, e = exact_binary(unary, p, weights)
            _, ref = enumerate_optimum(unary, p, weights)
            assert e == pytest.approx(ref, rel=1e-9, abs=1e-9)

    def test_bounds_solver(self):
        inst = make_instance(2, (20, 20))
        p = slic_partition(inst.image, 10)
        w = build_weights(p)
        assert exact_binary(inst.unary, p, w)[1] <= solve_binary(inst.unary, p, w)[1] + 1e-9

    def test_guards(self, rng):
        unary, p, w = random_instance(rng, 3, 3, 2, 2)
        with pytest.raises(InputError):
            exact_binary(unary, p, w, max_pixels=8)
        with pytest.raises(InputError):
            exact_binary(np.zeros((3, 3, 3)), p, w)


class TestNaive:
    def test_energy(self, rng):
        unary, p, w = random_instance(rng, 3, 3, 4, 3)
        labels = rng.integers(0, 3, (3, 3))
        assert naive_energy(labels, unary, p, w) == pytest.approx(total_energy(labels, unary, p, w))

    def test_guards(self, rng):
        unary, p, w = random_instance(rng, 3, 3, 4, 3)
        with pytest.raises(InputError):
            naive_energy(np.zeros((3, 3), int), unary, p, w, max_pixels=5)
        with pytest.raises(InputError):
            naive_message_passing(np.zeros((9, 3)), p, w, max_pixels=5)
