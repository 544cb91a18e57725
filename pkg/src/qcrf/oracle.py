"""Reference solvers and evaluators for testing.

Everything here works at the pixel level, ignoring the superpixel
aggregation the production code relies on, and refuses inputs too large for
its quadratic or exponential cost.
"""

import numpy as np

from .core import total_energy
from .exceptions import InputError
from .maxflow import cut_dense_potts
from .validation import check_labeling, check_same_grid, check_unary, check_weights

EXACT_MAX_PIXELS = 6000
ENUMERATION_MAX_STATES = 2 ** 24
NAIVE_MAX_PIXELS = 2000


def exact_binary(unary, partition, weights, max_pixels=EXACT_MAX_PIXELS):
    """Global optimum of a two-label energy by one min-cut over all pixel pairs.

    Returns
    -------
    labels : ndarray of int64, shape (height, width)
    energy : float
    """
    unary = check_unary(unary, partition.shape, 2)
    check_weights(partition, weights)
    n = partition.n_pixels
    if n > max_pixels:
        raise InputError(f"exact_binary builds n^2 edges; refusing {n} > {max_pixels} pixels")
    x = cut_dense_potts(unary[..., 0].ravel(), unary[..., 1].ravel(),
                        partition.assignment.ravel(), weights.w)
    labels = x.astype(np.int64).reshape(partition.shape)
    return labels, total_energy(labels, unary, partition, weights)


def _pair_table(partition, weights):
    sp = partition.assignment.ravel()
    p, q = np.triu_indices(len(sp), 1)
    return p, q, weights.w[sp[p], sp[q]]


def enumerate_optimum(unary, partition, weights, max_states=ENUMERATION_MAX_STATES, chunk=1 << 15):
    """Exhaustive minimum over all ``k^n`` labelings.

    Labelings are visited in lexicographic order of the row-major pixel
    sequence; among energies equal up to rounding the first one wins.
    """
    unary = check_unary(unary, partition.shape)
    check_weights(partition, weights)
    n = partition.n_pixels
    k = unary.shape[2]
    if k ** n > max_states:
        raise InputError(f"{k}^{n} labelings exceed the enumeration limit {max_states}")
    f = unary.reshape(n, k)
    p, q, w = _pair_table(partition, weights)
    powers = k ** np.arange(n - 1, -1, -1)
    total = k ** n
    energies = np.empty(total)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        lab = (idx[:, None] // powers[None, :]) % k
        e = f[np.arange(n)[None, :], lab].sum(axis=1)
        if len(w):
            e += (lab[:, p] != lab[:, q]) @ w
        energies[start : start + len(idx)] = e
    lo = energies.min()
    tol = 1e-12 * max(1.0, np.abs(energies).max())
    best = int(np.flatnonzero(energies <= lo + tol)[0])
    labels = ((best // powers) % k).reshape(partition.shape)
    return labels, total_energy(labels, unary, partition, weights)


def naive_energy(labels, unary, partition, weights, max_pixels=NAIVE_MAX_PIXELS):
    """Energy by explicit enumeration of every unordered pixel pair."""
    unary = check_unary(unary, partition.shape)
    labels = check_labeling(labels, partition.shape, unary.shape[2])
    check_weights(partition, weights)
    check_same_grid(partition, unary, labels)
    n = partition.n_pixels
    if n > max_pixels:
        raise InputError(f"naive_energy is O(n^2); refusing {n} > {max_pixels} pixels")
    x = labels.ravel()
    f = unary.reshape(n, -1)
    sp = partition.assignment.ravel()
    total = 0.0
    for a in range(n):
        total += f[a, x[a]]
        for b in range(a + 1, n):
            if x[a] != x[b]:
                total += weights.w[sp[a], sp[b]]
    return total


def naive_message_passing(q, partition, weights, max_pixels=NAIVE_MAX_PIXELS):
    """``Q~_p(l) = sum_{q != p} w_pq Q_q(l)`` by a double loop over pixels."""
    q = np.asarray(q, dtype=np.float64)
    n = partition.n_pixels
    if n > max_pixels:
        raise InputError(f"naive_message_passing is O(n^2); refusing {n} > {max_pixels} pixels")
    sp = partition.assignment.ravel()
    out = np.zeros_like(q)
    for a in range(n):
        for b in range(n):
            if a != b:
                out[a] += weights.w[sp[a], sp[b]] * q[b]
    return out
