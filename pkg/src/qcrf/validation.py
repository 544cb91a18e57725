"""Input validation helpers.

Images, unary cost tensors and labelings travel through the library as plain
numpy arrays; these helpers coerce them to canonical dtypes and enforce the
shape and range contracts, raising :class:`~qcrf.exceptions.InputError` on
violation.
"""

import numpy as np

from .exceptions import InputError


def check_image(image):
    """Return ``image`` as a float64 array of shape (height, width).

    Intensities must be finite and lie in [0, 255].
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 2:
        raise InputError(f"image must be 2-D (height, width), got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InputError("image has zero area")
    if not np.all(np.isfinite(arr)):
        raise InputError("image contains non-finite intensities")
    if arr.min() < 0 or arr.max() > 255:
        raise InputError("image intensities must lie in [0, 255]")
    return arr


def check_unary(unary, shape=None, n_labels=None):
    """Return unary costs as a float64 array of shape (height, width, k).

    Parameters
    ----------
    unary : array-like
        Per-pixel, per-label costs; all entries must be finite.
    shape : tuple of int, optional
        Required (height, width).
    n_labels : int, optional
        Required number of labels.
    """
    arr = np.asarray(unary, dtype=np.float64)
    if arr.ndim != 3:
        raise InputError(f"unary costs must be 3-D (height, width, labels), got shape {arr.shape}")
    if arr.shape[2] < 2:
        raise InputError("unary costs need at least two labels")
    if shape is not None and arr.shape[:2] != tuple(shape):
        raise InputError(f"unary spatial shape {arr.shape[:2]} does not match {tuple(shape)}")
    if n_labels is not None and arr.shape[2] != n_labels:
        raise InputError(f"expected {n_labels} labels, unary costs have {arr.shape[2]}")
    if not np.all(np.isfinite(arr)):
        raise InputError("unary costs must be finite")
    return arr


def check_labeling(labels, shape=None, n_labels=None):
    """Return a labeling as an int64 array of shape (height, width)."""
    arr = np.asarray(labels)
    if arr.ndim != 2:
        raise InputError(f"labeling must be 2-D, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise InputError("labeling must contain integers")
    arr = arr.astype(np.int64)
    if shape is not None and arr.shape != tuple(shape):
        raise InputError(f"labeling shape {arr.shape} does not match {tuple(shape)}")
    if arr.size and arr.min() < 0:
        raise InputError("labels must be nonnegative")
    if n_labels is not None and arr.size and arr.max() >= n_labels:
        raise InputError(f"label {arr.max()} out of range for {n_labels} labels")
    return arr


def check_same_grid(partition, *arrays):
    """Ensure every array's leading two dimensions match the partition grid."""
    for arr in arrays:
        if arr is not None and tuple(arr.shape[:2]) != partition.shape:
            raise InputError(
                f"array of shape {arr.shape[:2]} does not match partition grid {partition.shape}"
            )


def check_weights(partition, weights):
    if weights.w.shape != (partition.n_superpixels, partition.n_superpixels):
        raise InputError(
            f"weight table is {weights.w.shape[0]}x{weights.w.shape[1]} "
            f"but partition has {partition.n_superpixels} superpixels"
        )
