"""Multi-label inference by nested expansion.

An outer alpha-expansion loop runs over the label set.  Each move is a
binary problem on pixels (``z_p = 1``: switch to alpha), which is rewritten
as a binary quantized-edge CRF and handed to the superpixel-domain solver of
:mod:`qcrf.binary_solver`.

The rewrite needs the pairwise cost of a pixel pair to depend only on
whether ``z_p`` and ``z_q`` differ.  Superpixels are first split so that each
child is label-homogeneous.  Then, for pixels currently labeled ``l_p``:

* ``l_p = l_q``: the pair pays ``w`` iff ``z_p != z_q``  ->  weight ``w``.
* ``l_p != l_q``, neither alpha: pays ``w`` unless both switch.  Charge
  ``w / 2`` to each pixel's ``z = 0`` cost and use weight ``w / 2``.
* ``l_p = alpha``: ``p`` cannot change, so the pair pays ``w`` iff ``q``
  stays.  That is a unary term on ``q``: add ``w`` to ``d_q(0)``, weight 0.

With pixels already at alpha pinned to ``z = 0``, the binary energy equals
the energy of the moved labeling for every admissible ``z``.
"""

import numpy as np

from .binary_solver import SuperpixelProblem, expansion, reconstruct
from .core import SolverConfig, total_energy
from .exceptions import InputError
from .maxflow import INF
from .superpix import child_labels, split_by_labeling
from .validation import check_labeling, check_same_grid, check_unary, check_weights
from .weights import WeightTable

#: Relative margin an outer move must clear to be accepted.
IMPROVEMENT_RTOL = 1e-12


def apply_move(current, alpha, z):
    """Labeling after switching the pixels with ``z = 1`` to ``alpha``."""
    current = np.asarray(current)
    return np.where(np.asarray(z, dtype=bool), alpha, current).astype(np.int64)


def build_expansion_energy(current, alpha, unary, partition, weights):
    """Binary quantized-edge energy of the alpha-expansion move from ``current``.

    Parameters
    ----------
    current : array-like of int, shape (height, width)
    alpha : int
    unary : array-like, shape (height, width, k)
    partition : SuperpixelPartition
    weights : WeightTable

    Returns
    -------
    d : ndarray, shape (height, width, 2)
        ``d[..., 0]`` is the cost of keeping the current label (including the
        charged pairwise share), ``d[..., 1]`` of switching; ``INF`` forbids
        switching pixels already labeled ``alpha``.
    split : SuperpixelPartition
        ``partition`` refined by the current labeling.
    split_weights : WeightTable
        Pairwise weights ``v`` over ``split``.
    offset : float
        Constant making ``d(z) + offset`` the energy of the moved labeling;
        always 0 for this construction.
    """
    unary = check_unary(unary, partition.shape)
    k = unary.shape[2]
    current = check_labeling(current, partition.shape, k)
    check_weights(partition, weights)
    if not 0 <= alpha < k:
        raise InputError(f"alpha={alpha} out of range for {k} labels")

    split = split_by_labeling(partition, current)
    label = child_labels(split, current)
    origin = np.empty(split.n_superpixels, dtype=np.int64)
    origin[split.assignment.ravel()] = partition.assignment.ravel()
    w = weights.w[np.ix_(origin, origin)]

    same = label[:, None] == label[None, :]
    at_alpha = label == alpha
    touches_alpha = at_alpha[:, None] | at_alpha[None, :]
    v = np.where(same, w, np.where(touches_alpha, 0.0, 0.5 * w))

    sizes = split.sizes.astype(np.float64)
    half = (np.where(same | touches_alpha, 0.0, w) @ sizes) * 0.5
    full = (w * at_alpha[None, :]) @ sizes
    charge = np.where(at_alpha, 0.0, half + full)

    d = np.empty(current.shape + (2,))
    d[..., 0] = np.take_along_axis(unary, current[..., None], axis=2)[..., 0]
    d[..., 0] += charge[split.assignment]
    d[..., 1] = np.where(current == alpha, INF, unary[..., alpha])
    return d, split, WeightTable(v), 0.0


def expansion_move(current, alpha, unary, partition, weights, config=None):
    """Best alpha-expansion found by the superpixel-domain binary solver.

    Returns
    -------
    z : ndarray of int64, shape (height, width)
        1 where the pixel switches to ``alpha``.
    """
    d, split, v, _ = build_expansion_energy(current, alpha, unary, partition, weights)
    problem = SuperpixelProblem.from_costs(d[..., 0], d[..., 1], split, v)
    # keep everything, switch everything allowed, per-pixel choice
    starts = [problem.lower, problem.upper, problem.initial_labels()]
    y, _, _ = expansion(problem, config, init=starts, reverse_first=[False, True, False])
    return reconstruct(problem, y)


def solve_multilabel(unary, partition, weights, config=None):
    """Approximate MAP labeling of a multi-label quantized-edge CRF.

    Starts from the per-pixel unary argmin (ties to the lower label) and
    sweeps alpha over the labels in ascending order, accepting a move only
    if it lowers the energy.  Stops after a sweep without improvement or
    ``config.max_outer_sweeps`` sweeps.

    Parameters
    ----------
    unary : array-like, shape (height, width, k)
    partition : SuperpixelPartition
    weights : WeightTable
    config : SolverConfig, optional

    Returns
    -------
    labels : ndarray of int64, shape (height, width)
    energy : float
    trace : list of float
        Energy at the start and after every accepted move.
    """
    config = SolverConfig() if config is None else config
    unary = check_unary(unary, partition.shape)
    check_weights(partition, weights)
    check_same_grid(partition, unary)
    k = unary.shape[2]
    labels = np.argmin(unary, axis=2).astype(np.int64)
    energy = total_energy(labels, unary, partition, weights)
    trace = [energy]
    for _ in range(config.max_outer_sweeps):
        improved = False
        for alpha in range(k):
            z = expansion_move(labels, alpha, unary, partition, weights, config)
            if not z.any():
                continue
            proposal = apply_move(labels, alpha, z)
            value = total_energy(proposal, unary, partition, weights)
            if value < energy - IMPROVEMENT_RTOL * max(1.0, abs(energy)):
                labels, energy = proposal, value
                trace.append(energy)
                improved = True
        if not improved:
            break
    return labels, energy, trace
