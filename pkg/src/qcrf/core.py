"""Domain types and the aggregated energy evaluator.

Images, unary costs and labelings are plain numpy arrays (see
:mod:`qcrf.validation`).  A labeling's energy is

    sum_p f_p(x_p) + sum_{p<q} w_pq [x_p != x_q]

where ``w_pq`` depends only on the superpixels containing ``p`` and ``q``.
Because of that, the pairwise part collapses onto per-superpixel label
histograms and never touches individual pixel pairs.
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InputError
from .validation import check_image, check_labeling, check_same_grid, check_unary, check_weights


def _frozen(arr, dtype):
    arr = np.array(arr, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SuperpixelPartition:
    """Pixel-to-superpixel map with per-superpixel statistics.

    Attributes
    ----------
    assignment : ndarray of int64, shape (height, width)
        Superpixel index of every pixel, in ``[0, m)``.
    sizes : ndarray of int64, shape (m,)
    means : ndarray of float64, shape (m,)
        Intensity mean of each superpixel.
    variances : ndarray of float64, shape (m,)
        Population intensity variance (divisor ``n_s``).
    centroids : ndarray of float64, shape (m, 2)
        (row, column) center of each superpixel, in pixel units.
    parent : ndarray of int64, shape (m,), optional
        For partitions produced by :func:`qcrf.superpix.split_by_labeling`,
        the index of the originating superpixel.  Children carry the parent's
        mean, variance and centroid so edge weights survive the split.
    """

    assignment: np.ndarray
    sizes: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    centroids: np.ndarray
    parent: np.ndarray = None

    def __post_init__(self):
        a = np.asarray(self.assignment)
        if a.ndim != 2:
            raise InputError("assignment must be 2-D")
        m = len(self.sizes)
        object.__setattr__(self, "assignment", _frozen(a, np.int64))
        object.__setattr__(self, "sizes", _frozen(self.sizes, np.int64))
        object.__setattr__(self, "means", _frozen(self.means, np.float64))
        object.__setattr__(self, "variances", _frozen(self.variances, np.float64))
        object.__setattr__(self, "centroids", _frozen(self.centroids, np.float64).reshape(m, 2))
        if self.parent is not None:
            object.__setattr__(self, "parent", _frozen(self.parent, np.int64))
        if self.assignment.size and (self.assignment.min() < 0 or self.assignment.max() >= m):
            raise InputError("superpixel index out of range")
        counts = np.bincount(self.assignment.ravel(), minlength=m)
        if not np.array_equal(counts, self.sizes):
            raise InputError("sizes do not match the assignment")
        if m and self.sizes.min() < 1:
            raise InputError("every superpixel must contain at least one pixel")

    @classmethod
    def from_assignment(cls, assignment, image):
        """Build a partition and its statistics from a superpixel index map.

        Indices must already be compact: every value in ``[0, m)`` used.
        """
        image = check_image(image)
        assignment = np.asarray(assignment)
        if assignment.shape != image.shape:
            raise InputError(f"assignment shape {assignment.shape} does not match image {image.shape}")
        if not np.issubdtype(assignment.dtype, np.integer):
            raise InputError("superpixel indices must be integers")
        flat = assignment.ravel().astype(np.int64)
        if flat.min() < 0:
            raise InputError("superpixel indices must be nonnegative")
        m = int(flat.max()) + 1
        sizes = np.bincount(flat, minlength=m)
        if sizes.min() < 1:
            missing = int(np.flatnonzero(sizes == 0)[0])
            raise InputError(f"superpixel {missing} is empty; indices must be compact")
        means, variances, centroids = _statistics(flat, image, sizes)
        return cls(assignment.astype(np.int64), sizes, means, variances, centroids)

    @property
    def shape(self):
        return self.assignment.shape

    @property
    def n_superpixels(self):
        return len(self.sizes)

    @property
    def n_pixels(self):
        return self.assignment.size


def _statistics(flat, image, sizes):
    m = len(sizes)
    h, w = image.shape
    vals = image.ravel()
    rows, cols = np.divmod(np.arange(h * w), w)
    means = np.bincount(flat, weights=vals, minlength=m) / sizes
    dev = vals - means[flat]
    variances = np.bincount(flat, weights=dev * dev, minlength=m) / sizes
    centroids = np.column_stack([
        np.bincount(flat, weights=rows, minlength=m) / sizes,
        np.bincount(flat, weights=cols, minlength=m) / sizes,
    ])
    return means, variances, centroids


@dataclass(frozen=True)
class EnergyParams:
    """Edge-weight parameters.

    ``lambda1`` scales the internal weight and the spatial part of the
    external weight, ``lambda2`` the intensity part.  ``beta1``..``beta3`` are
    the Gaussian widths for intensity variance, centroid distance and mean
    difference.  ``smoothness`` multiplies every pairwise weight and is the
    knob swept in benchmarks.  The defaults are placeholders; real values
    come from training data.
    """

    lambda1: float = 1.0
    lambda2: float = 1.0
    beta1: float = 10.0
    beta2: float = 50.0
    beta3: float = 13.0
    smoothness: float = 1.0

    def __post_init__(self):
        for name in ("beta1", "beta2", "beta3"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InputError(f"{name} must be positive, got {value}")
        for name in ("lambda1", "lambda2", "smoothness"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise InputError(f"{name} must be nonnegative, got {value}")


@dataclass(frozen=True)
class SolverConfig:
    """Iteration limits and tolerances for every solver.

    Attributes
    ----------
    max_sweeps : int
        Forward+reverse expansion sweeps of the binary superpixel solver.
    max_outer_sweeps : int
        Sweeps over the label set in the multi-label solver.
    max_iters : int
        Iteration cap of ICM and mean field.
    tol : float
        Mean-field stopping threshold on ``max |Q_new - Q_old|``.
    truncation : {"target", "current", "switch"}
        How a non-submodular expansion term is made submodular by lowering
        or raising one table entry by the violation: ``"target"`` lowers
        the move-move entry, ``"current"`` the keep-keep entry, and
        ``"switch"`` raises the two mixed entries (an upper bound that is
        tight at the current state).  Moves are accepted only if the true
        energy drops, so every mode is safe; ``"target"`` finds markedly
        better optima.
    """

    max_sweeps: int = 4
    max_outer_sweeps: int = 5
    max_iters: int = 100
    tol: float = 1e-5
    truncation: str = "target"

    def __post_init__(self):
        if self.truncation not in ("target", "current", "switch"):
            raise InputError(f"unknown truncation mode {self.truncation!r}")
        for name in ("max_sweeps", "max_outer_sweeps", "max_iters"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be at least 1")
        if not self.tol > 0:
            raise InputError("tol must be positive")


def count_labels(labels, partition, n_labels=None):
    """Histogram of labels per superpixel.

    Returns
    -------
    counts : ndarray of int64, shape (m, k)
        ``counts[s, l]`` is the number of pixels of superpixel ``s`` with
        label ``l``.  ``k`` defaults to ``labels.max() + 1``.
    """
    labels = check_labeling(labels, partition.shape, n_labels)
    k = int(labels.max()) + 1 if n_labels is None else n_labels
    m = partition.n_superpixels
    flat = partition.assignment.ravel() * k + labels.ravel()
    return np.bincount(flat, minlength=m * k).reshape(m, k).astype(np.int64)


def disagreement_counts(counts):
    """Number of disagreeing pixel pairs for every superpixel pair.

    Off-diagonal entries count cross pairs ``n_s n_t - sum_l n_s^l n_t^l``;
    the diagonal holds ``n_s^2 - sum_l (n_s^l)^2``, which is twice the number
    of disagreeing internal pairs.
    """
    sizes = counts.sum(axis=1)
    return np.outer(sizes, sizes) - counts @ counts.T


def pairwise_energy(labels, partition, weights, n_labels=None):
    """Pairwise part of the energy, via label histograms."""
    counts = count_labels(labels, partition, n_labels)
    disagree = disagreement_counts(counts)
    mask = disagree != 0
    # Summing the full symmetric matrix counts every unordered pair twice;
    # fsum keeps the result independent of summation order.
    return 0.5 * math.fsum((weights.w[mask] * disagree[mask]).tolist())


def total_energy(labels, unary, partition, weights):
    """Energy of a labeling under the quantized-edge model.

    Cost is O(n k + m^2 k); pixel pairs are never enumerated.

    Parameters
    ----------
    labels : array-like of int, shape (height, width)
    unary : array-like, shape (height, width, k)
    partition : SuperpixelPartition
    weights : WeightTable

    Returns
    -------
    float
    """
    unary = check_unary(unary, partition.shape)
    k = unary.shape[2]
    labels = check_labeling(labels, partition.shape, k)
    check_weights(partition, weights)
    check_same_grid(partition, unary, labels)
    picked = np.take_along_axis(unary, labels[..., None], axis=2)
    return math.fsum(picked.ravel().tolist()) + pairwise_energy(labels, partition, weights, k)
