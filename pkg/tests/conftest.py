"""Shared fixtures: random small instances and brute-force references.

The references here are deliberately written from scratch (itertools and
explicit pixel-pair loops) so they share no code with the package.
"""

import itertools

import numpy as np
import pytest

from qcrf.core import SuperpixelPartition
from qcrf.weights import WeightTable


def random_partition(rng, h, w, m):
    """Random partition of an ``h x w`` grid into ``m`` nonempty superpixels."""
    n = h * w
    m = min(m, n)
    assignment = np.concatenate([np.arange(m), rng.integers(0, m, n - m)])
    rng.shuffle(assignment)
    image = rng.uniform(0, 255, (h, w))
    return SuperpixelPartition.from_assignment(assignment.reshape(h, w), image)


def random_weights(rng, m, scale=1.0):
    w = rng.uniform(0, scale, (m, m))
    return WeightTable((w + w.T) / 2)


def random_instance(rng, h, w, m, k, unary_scale=2.0, weight_scale=1.0, signed=False):
    partition = random_partition(rng, h, w, m)
    weights = random_weights(rng, partition.n_superpixels, weight_scale)
    lo = -unary_scale if signed else 0.0
    unary = rng.uniform(lo, unary_scale, (h, w, k))
    return unary, partition, weights


def pair_energy(labels, unary, partition, weights):
    """Energy by looping over every unordered pixel pair."""
    x = np.asarray(labels).ravel()
    f = np.asarray(unary).reshape(len(x), -1)
    sp = partition.assignment.ravel()
    total = sum(f[p, x[p]] for p in range(len(x)))
    for p, q in itertools.combinations(range(len(x)), 2):
        if x[p] != x[q]:
            total += weights.w[sp[p], sp[q]]
    return float(total)


def brute_minimum(unary, partition, weights):
    """Lowest energy over all labelings, by itertools.product."""
    h, w, k = np.shape(unary)
    best = np.inf
    for x in itertools.product(range(k), repeat=h * w):
        best = min(best, pair_energy(np.array(x), unary, partition, weights))
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = {}


def report(number, passed, detail):
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
