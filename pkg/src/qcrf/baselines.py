"""ICM and mean-field inference for quantized-edge CRFs.

All three methods replace sums over pixel pairs by sums over superpixels of
per-label counts (ICM) or per-label belief mass (mean field), which costs
O(m k) per pixel instead of O(n k).
"""

from dataclasses import dataclass

import numba
import numpy as np

from .core import SolverConfig, count_labels, total_energy
from .validation import check_labeling, check_same_grid, check_unary, check_weights


def _prepare(unary, partition, weights, init=None):
    unary = check_unary(unary, partition.shape)
    check_weights(partition, weights)
    k = unary.shape[2]
    if init is None:
        init = np.argmin(unary, axis=2)
    init = check_labeling(init, partition.shape, k)
    return unary, init


def icm_pixel(unary, partition, weights, init=None, config=None, return_moves=False):
    """Iterated conditional modes over single pixels.

    Pixels are visited in raster order; each switches to the label with the
    most negative energy change (ties to the lower label).  Passes repeat
    until one makes no switch or ``config.max_iters`` passes have run.

    Parameters
    ----------
    unary : array-like, shape (height, width, k)
    partition : SuperpixelPartition
    weights : WeightTable
    init : array-like of int, shape (height, width), optional
        Starting labeling; per-pixel unary argmin by default.
    config : SolverConfig, optional
    return_moves : bool
        Also return the accepted moves as an array of rows
        ``(pixel, old_label, new_label, delta)``.

    Returns
    -------
    labels : ndarray of int64
    energy : float
    moves : ndarray, shape (n_moves, 4)
        Only when ``return_moves`` is true.
    """
    config = SolverConfig() if config is None else config
    unary, labels = _prepare(unary, partition, weights, init)
    k = unary.shape[2]
    counts = count_labels(labels, partition, k).astype(np.float64)
    flat = labels.ravel().copy()
    moves = _icm_pixel_passes(
        unary.reshape(-1, k), partition.assignment.ravel(), weights.w, counts, flat, config.max_iters
    )
    labels = flat.reshape(partition.shape)
    energy = total_energy(labels, unary, partition, weights)
    return (labels, energy, moves) if return_moves else (labels, energy)


@numba.njit(cache=True)
def _icm_pixel_passes(f, sp, w, counts, x, max_iters):
    n, k = f.shape
    m = counts.shape[0]
    log = np.empty((16, 4))
    n_moves = 0
    r = np.empty(k)
    for _ in range(max_iters):
        changed = False
        for p in range(n):
            s = sp[p]
            cur = x[p]
            for a in range(k):
                acc = 0.0
                for t in range(m):
                    acc += w[s, t] * counts[t, a]
                r[a] = acc
            best = cur
            best_delta = 0.0
            for a in range(k):
                if a == cur:
                    continue
                # f_p(a) - f_p(l) + sum_t w_st (n_t^l - n_t^a) - w_ss
                delta = f[p, a] - f[p, cur] + r[cur] - r[a] - w[s, s]
                if delta < best_delta:
                    best_delta = delta
                    best = a
            if best != cur:
                counts[s, cur] -= 1.0
                counts[s, best] += 1.0
                x[p] = best
                changed = True
                if n_moves == log.shape[0]:
                    grown = np.empty((2 * n_moves, 4))
                    grown[:n_moves] = log
                    log = grown
                log[n_moves, 0] = p
                log[n_moves, 1] = cur
                log[n_moves, 2] = best
                log[n_moves, 3] = best_delta
                n_moves += 1
        if not changed:
            break
    return log[:n_moves].copy()


def superpixel_deltas(unary_sums, current_unary, counts, w, s):
    """Energy change of relabeling every pixel of superpixel ``s`` to each label.

    Valid whatever the current content of ``s`` and of the other superpixels.

    Parameters
    ----------
    unary_sums : ndarray, shape (m, k)
        ``sum_{p in s} f_p(a)``.
    current_unary : float
        ``sum_{p in s} f_p(x_p)`` under the current labeling.
    counts : ndarray, shape (m, k)
        Current label histogram.
    w : ndarray, shape (m, m)
    s : int

    Returns
    -------
    ndarray, shape (k,)
    """
    c_s = counts[s]
    n_s = c_s.sum()
    wss = w[s, s]
    r = w[s] @ counts - wss * c_s  # sum_{t != s} w_st n_t^a
    cross_now = c_s @ r  # agreeing cross pairs, weighted
    internal_now = wss * (n_s * n_s - c_s @ c_s) / 2.0
    # new cross cost n_s (n_t - n_t^a) minus old n_s n_t - c_s . c_t
    return unary_sums[s] - current_unary + cross_now - n_s * r - internal_now


def icm_superpixel(unary, partition, weights, init=None, config=None, return_moves=False):
    """Iterated conditional modes with whole-superpixel moves.

    A move sets every pixel of one superpixel to the same label.  Superpixels
    are visited in ascending index order; the most negative change is taken
    (ties to the lower label).

    Parameters and returns are as for :func:`icm_pixel`; move rows are
    ``(superpixel, new_label, delta)``.
    """
    config = SolverConfig() if config is None else config
    unary, labels = _prepare(unary, partition, weights, init)
    k = unary.shape[2]
    m = partition.n_superpixels
    sp = partition.assignment.ravel()
    f = unary.reshape(-1, k)
    unary_sums = np.stack([np.bincount(sp, weights=f[:, a], minlength=m) for a in range(k)], axis=1)
    flat = labels.ravel().copy()
    counts = count_labels(labels, partition, k).astype(np.float64)
    current = np.bincount(sp, weights=f[np.arange(len(flat)), flat], minlength=m)
    members = np.split(np.argsort(sp, kind="stable"), np.cumsum(partition.sizes)[:-1])
    w = weights.w
    moves = []
    for _ in range(config.max_iters):
        changed = False
        for s in range(m):
            delta = superpixel_deltas(unary_sums, current[s], counts, w, s)
            a = int(np.argmin(delta))
            if delta[a] < 0:
                flat[members[s]] = a
                counts[s] = 0.0
                counts[s, a] = partition.sizes[s]
                current[s] = unary_sums[s, a]
                moves.append((s, a, float(delta[a])))
                changed = True
        if not changed:
            break
    labels = flat.reshape(partition.shape)
    energy = total_energy(labels, unary, partition, weights)
    moves = np.array(moves, dtype=np.float64).reshape(-1, 3)
    return (labels, energy, moves) if return_moves else (labels, energy)


@dataclass
class MeanFieldState:
    """Mean-field beliefs.

    Attributes
    ----------
    q : ndarray, shape (n, k)
        ``Q_p(l)`` per pixel (row-major) and label; rows sum to one.
    iteration : int
        Number of completed updates.
    """

    q: np.ndarray
    iteration: int = 0

    def labels(self, shape):
        return np.argmax(self.q, axis=1).reshape(shape)


def _softmax_neg(cost):
    z = -cost
    z -= z.max(axis=1, keepdims=True)
    np.exp(z, out=z)
    z /= z.sum(axis=1, keepdims=True)
    return z


def message_passing(q, partition, weights):
    """``Q~_p(l) = sum_{q != p} w_pq Q_q(l)`` through superpixel belief sums.

    Parameters
    ----------
    q : ndarray, shape (n, k)
    partition : SuperpixelPartition
    weights : WeightTable

    Returns
    -------
    ndarray, shape (n, k)
    """
    sp = partition.assignment.ravel()
    m = partition.n_superpixels
    q = np.asarray(q, dtype=np.float64)
    mass = np.zeros((m, q.shape[1]))
    np.add.at(mass, sp, q)
    w = weights.w
    # row s holds sum_e(s, .) + sum_i(s, .): every pixel of s shares it
    shared = w @ mass
    return shared[sp] - np.diag(w)[sp, None] * q


def mean_field(unary, partition, weights, config=None, callback=None):
    """Synchronous mean-field inference for the Potts Full-CRF.

    Parameters
    ----------
    unary : array-like, shape (height, width, k)
    partition : SuperpixelPartition
    weights : WeightTable
    config : SolverConfig, optional
        ``max_iters`` and ``tol`` (max-norm change of Q) control stopping.
    callback : callable, optional
        Called with the :class:`MeanFieldState` after every update.

    Returns
    -------
    state : MeanFieldState
    labels : ndarray of int64
        Per-pixel argmax of Q (ties to the lower label).
    energy : float
    """
    config = SolverConfig() if config is None else config
    unary = check_unary(unary, partition.shape)
    check_weights(partition, weights)
    check_same_grid(partition, unary)
    k = unary.shape[2]
    f = unary.reshape(-1, k)
    state = MeanFieldState(_softmax_neg(f.copy()))
    for _ in range(config.max_iters):
        incoming = message_passing(state.q, partition, weights)
        # Potts compatibility: a label pays for the mass on every other label
        penalty = incoming.sum(axis=1, keepdims=True) - incoming
        q_new = _softmax_neg(f + penalty)
        change = np.abs(q_new - state.q).max()
        state.q = q_new
        state.iteration += 1
        if callback is not None:
            callback(state)
        if change < config.tol:
            break
    labels = state.labels(partition.shape)
    return state, labels, total_energy(labels, unary, partition, weights)
