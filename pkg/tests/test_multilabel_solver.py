import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import pair_energy, random_instance
from qcrf.core import SolverConfig, total_energy
from qcrf.exceptions import InputError
from qcrf.maxflow import INF_THRESHOLD
from qcrf.multilabel_solver import apply_move, build_expansion_energy, expansion_move, solve_multilabel
from qcrf.oracle import enumerate_optimum


def binary_energy(z, d, split, v):
    """Direct evaluation of the converted binary energy over pixel pairs."""
    z = np.asarray(z).ravel()
    sp = split.assignment.ravel()
    flat = d.reshape(-1, 2)
    total = flat[np.arange(len(z)), z].sum()
    for p, q in itertools.combinations(range(len(z)), 2):
        if z[p] != z[q]:
            total += v.w[sp[p], sp[q]]
    return total


class TestBuildExpansionEnergy:
    def test_constant_labeling_other_than_alpha(self, rng):
        unary, p, w = random_instance(rng, 3, 3, 4, 3)
        current = np.full((3, 3), 2)
        d, split, v, offset = build_expansion_energy(current, 0, unary, p, w)
        np.testing.assert_array_equal(split.assignment, p.assignment)
        np.testing.assert_array_equal(v.w, w.w)
        np.testing.assert_array_equal(d[..., 0], unary[..., 2])
        np.testing.assert_array_equal(d[..., 1], unary[..., 0])
        assert offset == 0.0

    def test_constant_labeling_alpha(self, rng):
        unary, p, w = random_instance(rng, 3, 3, 4, 3)
        current = np.full((3, 3), 1)
        d, *_ = build_expansion_energy(current, 1, unary, p, w)
        assert np.all(d[..., 1] >= INF_THRESHOLD)
        z = expansion_move(current, 1, unary, p, w)
        np.testing.assert_array_equal(z, 0)

    def test_alpha_out_of_range(self, rng):
        unary, p, w = random_instance(rng, 2, 2, 2, 3)
        with pytest.raises(InputError):
            build_expansion_energy(np.zeros((2, 2), int), 3, unary, p, w)

    def test_same_parent_children_use_half_weight(self):
        rng = np.random.default_rng(0)
        unary, p, w = random_instance(rng, 1, 3, 1, 3)
        d, split, v, _ = build_expansion_energy(np.array([[0, 1, 1]]), 2, unary, p, w)
        assert split.n_superpixels == 2
        assert v.w[0, 1] == w.w[0, 0] / 2


@settings(max_examples=120, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), h=st.integers(1, 3), w=st.integers(1, 4),
       m=st.integers(1, 4), k=st.integers(2, 4), data=st.data())
def test_converted_energy_equals_move_energy(seed, h, w, m, k, data):
    rng = np.random.default_rng(seed)
    unary, p, weights = random_instance(rng, h, w, m, k)
    current = rng.integers(0, k, (h, w))
    alpha = data.draw(st.integers(0, k - 1))
    d, split, v, offset = build_expansion_energy(current, alpha, unary, p, weights)
    free = (current != alpha).ravel()
    for bits in itertools.product((0, 1), repeat=int(free.sum())):
        z = np.zeros(h * w, dtype=np.int64)
        z[free] = bits
        moved = apply_move(current, alpha, z.reshape(h, w))
        assert binary_energy(z, d, split, v) + offset == pytest.approx(
            pair_energy(moved, unary, p, weights), rel=1e-9, abs=1e-9)


class TestSolveMultilabel:
    def test_no_coupling_gives_argmin(self, rng):
        unary, p, w = random_instance(rng, 4, 4, 3, 4)
        unary[np.arange(4)[:, None], np.arange(4)[None], rng.integers(0, 4, (4, 4))] -= 10
        labels, energy, _ = solve_multilabel(unary, p, type(w)(np.zeros_like(w.w)))
        np.testing.assert_array_equal(labels, np.argmin(unary, axis=2))
        assert energy == pytest.approx(unary.min(axis=2).sum(), rel=1e-12)

    def test_dimension_mismatch(self, rng):
        unary, p, w = random_instance(rng, 3, 3, 3, 3)
        with pytest.raises(InputError):
            solve_multilabel(unary[:2], p, w)

    def test_small_instances_against_enumeration(self):
        rng = np.random.default_rng(2)
        equal = 0
        for _ in range(200):
            n = int(rng.integers(2, 11))
            h = 2 if n % 2 == 0 else 1
            unary, p, w = random_instance(rng, h, n // h, int(rng.integers(1, 5)), 3)
            _, energy, _ = solve_multilabel(unary, p, w)
            _, best = enumerate_optimum(unary, p, w)
            assert energy >= best - 1e-9 * max(1.0, best)
            if best > 0:
                assert energy <= 2 * best
            equal += energy <= best + 1e-9 * max(1.0, best)
        assert equal >= 180

    def test_trace_moves_and_idempotence(self):
        rng = np.random.default_rng(5)
        for _ in range(15):
            unary, p, w = random_instance(rng, 5, 5, 5, 3, weight_scale=0.3)
            start = np.argmin(unary, axis=2)
            labels, energy, trace = solve_multilabel(unary, p, w)
            assert all(b < a for a, b in zip(trace, trace[1:]))
            assert trace[0] == pytest.approx(total_energy(start, unary, p, w))
            assert energy == trace[-1]
            # converged: no alpha move improves
            for alpha in range(3):
                z = expansion_move(labels, alpha, unary, p, w)
                moved = apply_move(labels, alpha, z)
                assert total_energy(moved, unary, p, w) >= energy - 1e-9 * abs(energy)

    def test_single_outer_sweep_is_valid(self, rng):
        unary, p, w = random_instance(rng, 4, 4, 4, 3, weight_scale=0.3)
        labels, energy, trace = solve_multilabel(unary, p, w, SolverConfig(max_outer_sweeps=1))
        assert len(trace) <= 4 and energy <= trace[0]


def test_apply_move():
    np.testing.assert_array_equal(apply_move([[0, 1, 2]], 1, [[1, 0, 1]]), [[1, 1, 1]])
