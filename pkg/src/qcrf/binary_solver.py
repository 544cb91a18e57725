"""Binary quantized-edge CRFs solved in the superpixel domain.

Inside a superpixel every pixel pair has the same weight, so once we know how
many pixels ``y_s`` of superpixel ``s`` take label 1, the cheapest choice is
the ``y_s`` pixels with the smallest ``f_p(1)``.  The pixel problem therefore
reduces to one integer variable per superpixel:

    g(y) = sum_s G_s(y_s) + sum_{s<t} V_st(y_s, y_t)
    G_s(y)       = w_ss y (n_s - y) + (sum of the y smallest f_p(1) in s)
    V_st(a, b)   = w_st (a (n_t - b) + b (n_s - a))

with ``f_p(0)`` normalized to zero.  ``g`` is minimized with expansion moves
over the label set ``{0, ..., max n_s}``, each move being a min-cut over the m
superpixels.
"""

import math
from dataclasses import dataclass

import numba
import numpy as np

from .core import SolverConfig, total_energy
from .exceptions import InfeasibleError, InputError
from .maxflow import INF, INF_THRESHOLD, _dense_csr, _push_relabel
from .validation import check_same_grid, check_unary, check_weights

#: Relative margin a move must clear to count as an improvement.
IMPROVEMENT_RTOL = 1e-12
TRUNCATION_MODES = ("current", "switch", "target")  # index passed to numba


def normalize_unaries(unary):
    """Shift costs so that ``f_p(0) = 0``.

    Returns
    -------
    normalized : ndarray, shape (height, width, 2)
        ``(0, f_p(1) - f_p(0))`` per pixel.
    offset : float
        ``sum_p f_p(0)``; the original energy is the normalized energy plus
        ``offset`` for every labeling.
    """
    unary = check_unary(unary, n_labels=2)
    out = np.zeros_like(unary)
    out[..., 1] = unary[..., 1] - unary[..., 0]
    return out, math.fsum(unary[..., 0].ravel().tolist())


@dataclass(frozen=True, eq=False)
class SuperpixelProblem:
    """Superpixel-domain form of a binary quantized-edge energy.

    Pixels may be forced to one label (cost ``>= INF_THRESHOLD`` on the
    other).  Superpixel ``s`` then admits ``y_s`` in ``[lower[s], upper[s]]``
    only: forced-one pixels are sorted first and forced-zero pixels last.

    Attributes
    ----------
    shape : tuple of int
    sizes : ndarray of int64, shape (m,)
    lower, upper : ndarray of int64, shape (m,)
    order : ndarray of int64, shape (n,)
        Flat pixel indices grouped by superpixel (``starts`` delimits the
        groups), ascending ``f_p(1)`` within each group, ties by pixel index.
    starts : ndarray of int64, shape (m + 1,)
    table : ndarray, shape (m, max_s n_s + 1)
        ``G_s(y)`` for feasible ``y``; ``INF`` elsewhere.
    prefix : ndarray, shape (m, max_s n_s + 1)
        Sums of the ``y`` smallest normalized ``f_p(1)`` (forced-one pixels
        count as 0, their cost lives in ``offset``).
    w : ndarray, shape (m, m)
    offset : float
    """

    shape: tuple
    sizes: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    order: np.ndarray
    starts: np.ndarray
    table: np.ndarray
    prefix: np.ndarray
    w: np.ndarray
    offset: float

    @classmethod
    def from_unary(cls, unary, partition, weights):
        """Build from finite two-label costs of shape (height, width, 2)."""
        unary = check_unary(unary, partition.shape, 2)
        check_weights(partition, weights)
        return cls.from_costs(unary[..., 0], unary[..., 1], partition, weights)

    @classmethod
    def from_costs(cls, cost0, cost1, partition, weights):
        """Build from per-pixel label costs, which may contain ``INF``."""
        c0 = np.asarray(cost0, dtype=np.float64).ravel()
        c1 = np.asarray(cost1, dtype=np.float64).ravel()
        forced1 = c0 >= INF_THRESHOLD
        forced0 = c1 >= INF_THRESHOLD
        if np.any(forced0 & forced1):
            raise InfeasibleError("a pixel forbids both labels")
        offset = math.fsum(np.where(forced1, c1, c0).tolist())
        value = np.where(forced1 | forced0, 0.0, c1 - c0)
        key = np.where(forced1, -np.inf, np.where(forced0, np.inf, value))

        flat = partition.assignment.ravel()
        m = partition.n_superpixels
        sizes = partition.sizes.astype(np.int64)
        order = np.lexsort((key, flat))
        starts = np.zeros(m + 1, dtype=np.int64)
        np.cumsum(sizes, out=starts[1:])
        lower = np.bincount(flat, weights=forced1, minlength=m).astype(np.int64)
        upper = sizes - np.bincount(flat, weights=forced0, minlength=m).astype(np.int64)

        nmax = int(sizes.max())
        prefix = np.zeros((m, nmax + 1))
        ranks = np.arange(len(flat)) - starts[flat[order]]
        prefix[flat[order], ranks + 1] = value[order]
        np.cumsum(prefix, axis=1, out=prefix)

        w = weights.w
        y = np.arange(nmax + 1)
        table = np.diag(w)[:, None] * y[None, :] * (sizes[:, None] - y[None, :]) + prefix
        feasible = (y[None, :] >= lower[:, None]) & (y[None, :] <= upper[:, None])
        table = np.where(feasible, table, INF)
        for arr in (sizes, lower, upper, order, starts, table, prefix):
            arr.setflags(write=False)
        return cls(partition.shape, sizes, lower, upper, order, starts, table, prefix,
                   np.array(w), offset)

    @property
    def n_superpixels(self):
        return len(self.sizes)

    @property
    def label_sets(self):
        """Admissible ``y_s`` values per superpixel."""
        return [range(lo, hi + 1) for lo, hi in zip(self.lower.tolist(), self.upper.tolist())]

    @property
    def sorted_orders(self):
        return [self.order[a:b] for a, b in zip(self.starts[:-1], self.starts[1:])]

    @property
    def prefix_sums(self):
        return [self.prefix[s, : n + 1] for s, n in enumerate(self.sizes.tolist())]

    def initial_labels(self):
        """Per-superpixel count of pixels whose label-1 cost is negative."""
        y = np.empty(self.n_superpixels, dtype=np.int64)
        for s, (a, b) in enumerate(zip(self.starts[:-1], self.starts[1:])):
            # forced-one pixels come first and carry value 0
            col = np.diff(self.prefix[s, : b - a + 1])[self.lower[s]:]
            y[s] = self.lower[s] + np.count_nonzero(col < 0)
        return y

    def check_labels(self, y):
        y = np.asarray(y, dtype=np.int64)
        if y.shape != self.sizes.shape:
            raise InputError(f"expected {self.n_superpixels} superpixel labels, got shape {y.shape}")
        if np.any(y < self.lower) or np.any(y > self.upper):
            raise InputError("superpixel label out of range")
        return y


def g_unary(problem, s, y_s):
    """``G_s(y_s) = w_ss y_s (n_s - y_s) + (sum of the y_s smallest f_p(1))``."""
    if not problem.lower[s] <= y_s <= problem.upper[s]:
        raise InputError(f"y_s={y_s} outside [{problem.lower[s]}, {problem.upper[s]}]")
    n = int(problem.sizes[s])
    return float(problem.w[s, s] * y_s * (n - y_s) + problem.prefix[s, y_s])


def v_pairwise(problem, s, t, y_s, y_t):
    """``w_st (y_s (n_t - y_t) + y_t (n_s - y_s))``: disagreeing cross pairs."""
    if s == t:
        raise InputError("v_pairwise needs two distinct superpixels")
    n_s, n_t = int(problem.sizes[s]), int(problem.sizes[t])
    if not (0 <= y_s <= n_s and 0 <= y_t <= n_t):
        raise InputError("superpixel label out of range")
    return float(problem.w[s, t] * (y_s * (n_t - y_t) + y_t * (n_s - y_s)))


def g_energy(problem, y):
    """Superpixel-domain energy ``g(y)``, excluding ``problem.offset``."""
    y = problem.check_labels(y)
    return float(_g(problem.table, problem.w, problem.sizes, y))


def reconstruct(problem, y):
    """Pixel labeling with label 1 on the ``y_s`` cheapest pixels of each ``s``."""
    y = problem.check_labels(y)
    flat = np.zeros(int(np.prod(problem.shape)), dtype=np.int64)
    rank = np.arange(len(problem.order)) - np.repeat(problem.starts[:-1], problem.sizes)
    flat[problem.order] = rank < np.repeat(y, problem.sizes)
    return flat.reshape(problem.shape)


@numba.njit(cache=True)
def _g(table, w, n, y):
    m = len(n)
    total = 0.0
    for s in range(m):
        total += table[s, y[s]]
    for s in range(m):
        acc = 0.0
        for t in range(m):
            if t != s:
                acc += w[s, t] * (n[t] - y[t])
        total += y[s] * acc
    return total


@numba.njit(cache=True)
def _pair_cost(w, ns, nt, a, b):
    return w * (a * (nt - b) + b * (ns - a))


@numba.njit(cache=True)
def _expansion_cut(table, w, n, y, target, feasible, mode):
    # Binary variable z_s: 0 keeps y_s, 1 moves to target[s].
    m = len(n)
    cost0 = np.empty(m)
    cost1 = np.empty(m)
    for s in range(m):
        cost0[s] = table[s, y[s]]
        cost1[s] = table[s, target[s]] if feasible[s] else INF
    cap = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            wij = w[i, j]
            if wij == 0.0:
                continue
            a = _pair_cost(wij, n[i], n[j], y[i], y[j])
            b = _pair_cost(wij, n[i], n[j], y[i], target[j]) if feasible[j] else a
            if feasible[i]:
                c = _pair_cost(wij, n[i], n[j], target[i], y[j])
                d = _pair_cost(wij, n[i], n[j], target[i], target[j]) if feasible[j] else c
            else:
                c = a
                d = b
            excess = a + d - b - c
            if excess > 0.0:
                if mode == 0:
                    a -= excess
                elif mode == 1:
                    b += 0.5 * excess
                    c += 0.5 * excess
                else:
                    d -= excess
            # theta = a + (c - a) z_i + (d - c) z_j + (b + c - a - d)(1 - z_i) z_j
            cost1[i] += c - a
            cost1[j] += d - c
            cap[i, j] = max(b + c - a - d, 0.0)
    tr = np.empty(m)
    for s in range(m):
        tr[s] = INF if not feasible[s] else cost1[s] - cost0[s]
    first, head, sister, rcap = _dense_csr(cap)
    return _push_relabel(first, head, sister, rcap, tr)


def _improves(new, old):
    return new < old - IMPROVEMENT_RTOL * max(1.0, abs(old))


def expansion(problem, config=None, init=None, reverse_first=False):
    """Minimize ``g`` by forward and reverse expansion sweeps.

    Parameters
    ----------
    problem : SuperpixelProblem
    config : SolverConfig, optional
    init : sequence of array-like, optional
        Starting labelings.  Sweeps run from each one and the lowest final
        energy wins (earliest start on ties).  Defaults to
        :meth:`SuperpixelProblem.initial_labels` alone.
    reverse_first : bool or sequence of bool
        Per start, run the reverse pass before the forward pass in each
        sweep.  Useful for starts near ``upper``, where a forward move to 0
        would otherwise undo everything before reverse moves can refine it.

    Returns
    -------
    y : ndarray of int64
    energy : float
        ``g(y)``, excluding the offset.
    trace : list of float
        ``g`` at the winning start and after each of its accepted moves.
    """
    config = SolverConfig() if config is None else config
    starts = [problem.initial_labels()] if init is None else [problem.check_labels(c) for c in init]
    flags = np.broadcast_to(np.asarray(reverse_first, dtype=bool), (len(starts),))
    best = None
    for y0, flag in zip(starts, flags):
        run = _sweeps(problem, config, y0, (True, False) if flag else (False, True))
        if best is None or _improves(run[1], best[1]):
            best = run
    return best


def _sweeps(problem, config, y, order):
    mode = TRUNCATION_MODES.index(config.truncation)
    table, w, n = problem.table, problem.w, problem.sizes
    y = y.copy()
    energy = _g(table, w, n, y)
    trace = [energy]
    labels = np.arange(int(problem.upper.max()) + 1)
    for _ in range(config.max_sweeps):
        improved = False
        for reverse in order:
            for alpha in labels:
                target = n - alpha if reverse else np.full_like(n, alpha)
                feasible = (target >= problem.lower) & (target <= problem.upper)
                if not feasible.any():
                    continue
                target = np.where(feasible, target, 0)
                z = _expansion_cut(table, w, n, y, target, feasible, mode)
                if not z.any():
                    continue
                proposal = np.where(z, target, y)
                value = _g(table, w, n, proposal)
                if _improves(value, energy):
                    y, energy = proposal, value
                    trace.append(energy)
                    improved = True
        if not improved:
            break
    return y, float(energy), trace


def solve_binary(unary, partition, weights, config=None):
    """Approximate MAP labeling of a two-label quantized-edge CRF.

    Parameters
    ----------
    unary : array-like, shape (height, width, 2)
    partition : SuperpixelPartition
    weights : WeightTable
    config : SolverConfig, optional

    Returns
    -------
    labels : ndarray of int64, shape (height, width)
    energy : float
        Pixel-domain energy of ``labels``.
    trace : list of float
        Energy at the start and after every accepted move; non-increasing.
    """
    unary = check_unary(unary, n_labels=2)
    check_same_grid(partition, unary)
    check_weights(partition, weights)
    problem = SuperpixelProblem.from_unary(unary, partition, weights)
    y, _, trace = expansion(problem, config)
    labels = reconstruct(problem, y)
    return labels, total_energy(labels, unary, partition, weights), [t + problem.offset for t in trace]
