"""Quantized edge weights and the pixel-level Gaussian reference energy."""

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import EnergyParams
from .exceptions import InputError, UndefinedResultError
from .validation import check_image, check_labeling

GAUSSIAN_MAX_PIXELS = 10_000


@dataclass(frozen=True, eq=False)
class WeightTable:
    """Symmetric m x m table of pixel-pair weights.

    ``w[s, s]`` is shared by every pixel pair inside superpixel ``s`` and
    ``w[s, t]`` by every pair straddling ``s`` and ``t``.
    """

    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InputError(f"weight table must be square, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or (w.size and w.min() < 0):
            raise InputError("weights must be finite and nonnegative")
        if not np.array_equal(w, w.T):
            raise InputError("weight table must be symmetric")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def n_superpixels(self):
        return self.w.shape[0]

    def take(self, index):
        """Table over superpixels ``index[i]``, e.g. split children -> parents."""
        index = np.asarray(index, dtype=np.int64)
        return WeightTable(self.w[np.ix_(index, index)])

    def to_csv(self, path):
        """Write rows ``s,t,w`` for every ordered pair ``s <= t``."""
        s, t = np.triu_indices(self.n_superpixels)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["s", "t", "w"])
            for a, b, v in zip(s.tolist(), t.tolist(), self.w[s, t].tolist()):
                writer.writerow([a, b, repr(v)])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["s", "t", "w"]:
                raise InputError(f"{path}: expected header s,t,w, got {header}")
            rows = [(int(a), int(b), float(v)) for a, b, v in reader]
        m = 1 + max(max(a, b) for a, b, _ in rows) if rows else 0
        w = np.zeros((m, m))
        for a, b, v in rows:
            w[a, b] = w[b, a] = v
        return cls(w)


def external_weight(dr, dc, dmu, params):
    """Weight between pixels of distinct cells from coordinate/intensity gaps.

    Shared by the quantized table and the pixel-level reference so that both
    produce bit-identical weights when every superpixel is a single pixel.
    """
    spatial = np.exp(-(dr * dr + dc * dc) / (2.0 * params.beta2 ** 2))
    color = np.exp(-(dmu * dmu) / (2.0 * params.beta3 ** 2))
    return params.smoothness * (params.lambda1 * spatial + params.lambda2 * color)


def internal_weight(variances, params):
    variances = np.asarray(variances, dtype=np.float64)
    return params.smoothness * params.lambda1 * np.exp(-variances / (2.0 * params.beta1 ** 2))


def build_weights(partition, params=None):
    """Edge-weight table for a partition.

    Parameters
    ----------
    partition : SuperpixelPartition
    params : EnergyParams, optional

    Returns
    -------
    WeightTable
    """
    params = EnergyParams() if params is None else params
    c = partition.centroids
    mu = partition.means
    w = external_weight(
        c[:, None, 0] - c[None, :, 0],
        c[:, None, 1] - c[None, :, 1],
        mu[:, None] - mu[None, :],
        params,
    )
    np.fill_diagonal(w, internal_weight(partition.variances, params))
    # exp of an exactly negated argument is bitwise equal, but enforce symmetry
    # explicitly rather than rely on it.
    w = np.triu(w) + np.triu(w, 1).T
    return WeightTable(w)


def gaussian_pairwise_energy(image, labels, params=None, max_pixels=GAUSSIAN_MAX_PIXELS):
    """Pairwise energy with per-pixel Gaussian edges, by explicit pair sums.

    Each pixel acts as its own superpixel: its position and intensity take the
    place of the centroid and mean.  This is an O(n^2) reference used to
    measure how far the quantized model is from the Gaussian one.
    """
    params = EnergyParams() if params is None else params
    image = check_image(image)
    labels = check_labeling(labels, image.shape)
    n = image.size
    if n > max_pixels:
        raise InputError(f"gaussian_pairwise_energy is O(n^2); refusing {n} > {max_pixels} pixels")
    h, w = image.shape
    rows, cols = np.divmod(np.arange(n, dtype=np.float64), w)
    vals = image.ravel()
    lab = labels.ravel()
    chunk = max(1, 2_000_000 // max(n, 1))
    pieces = []
    for start in range(0, n, chunk):
        p = np.arange(start, min(start + chunk, n))
        dr = rows[p, None] - rows[None, :]
        dc = cols[p, None] - cols[None, :]
        dmu = vals[p, None] - vals[None, :]
        mask = (np.arange(n)[None, :] > p[:, None]) & (lab[p, None] != lab[None, :])
        pieces.append(external_weight(dr[mask], dc[mask], dmu[mask], params).tolist())
    return math.fsum(itertools.chain.from_iterable(pieces))


def relative_difference(e_quant, e_gauss):
    """Percent deviation ``100 |e_quant - e_gauss| / e_gauss``."""
    if e_gauss == 0:
        raise UndefinedResultError("relative difference undefined for zero reference energy")
    return 100.0 * abs(e_quant - e_gauss) / e_gauss
