"""Superpixel generation, file I/O and label-driven splitting."""

import struct

import numpy as np
from scipy import ndimage

from .core import SuperpixelPartition
from .exceptions import FormatError, InputError
from .validation import check_image, check_labeling

SPIX_MAGIC = b"QCRFSPIX"
SLIC_ITERATIONS = 10


def _grid_shape(h, w, target):
    gy = int(np.clip(round(np.sqrt(target * h / w)), 1, h))
    gx = int(np.clip(round(target / gy), 1, w))
    return gy, gx


def slic_partition(image, target_count, compactness=20.0, n_iter=SLIC_ITERATIONS):
    """SLIC superpixels on a single-channel image.

    Cluster centers start on a regular grid (no gradient perturbation), run
    ``n_iter`` localized k-means rounds over (row, col, intensity), then every
    cluster keeps only its largest 4-connected piece; the remaining pieces are
    merged into their largest adjacent superpixel.

    Parameters
    ----------
    image : array-like, shape (height, width)
        Intensities in [0, 255].
    target_count : int
        Desired number of superpixels.
    compactness : float
        Intensity units that weigh as much as one grid step of distance.

    Returns
    -------
    SuperpixelPartition
    """
    image = check_image(image)
    h, w = image.shape
    n = h * w
    if not 1 <= target_count <= n:
        raise InputError(f"target_count must be in [1, {n}], got {target_count}")
    if not compactness > 0:
        raise InputError("compactness must be positive")

    gy, gx = _grid_shape(h, w, target_count)
    step_r, step_c = h / gy, w / gx
    cr = (np.arange(gy) + 0.5) * step_r - 0.5
    cc = (np.arange(gx) + 0.5) * step_c - 0.5
    centers = np.array([(r, c, 0.0) for r in cr for c in cc])
    centers[:, 2] = image[np.rint(centers[:, 0]).astype(int), np.rint(centers[:, 1]).astype(int)]

    step2 = step_r * step_c
    rad_r, rad_c = int(np.ceil(step_r)), int(np.ceil(step_c))
    rows = np.arange(h, dtype=np.float64)
    cols = np.arange(w, dtype=np.float64)
    label = np.zeros((h, w), dtype=np.int64)
    for _ in range(n_iter):
        dist = np.full((h, w), np.inf)
        for k, (r, c, v) in enumerate(centers):
            r0, r1 = max(0, int(r) - rad_r), min(h, int(r) + rad_r + 2)
            c0, c1 = max(0, int(c) - rad_c), min(w, int(c) + rad_c + 2)
            dr = rows[r0:r1, None] - r
            dc = cols[None, c0:c1] - c
            dv = image[r0:r1, c0:c1] - v
            d = (dv / compactness) ** 2 + (dr * dr + dc * dc) / step2
            win = dist[r0:r1, c0:c1]
            better = d < win
            win[better] = d[better]
            label[r0:r1, c0:c1][better] = k
        flat = label.ravel()
        counts = np.bincount(flat, minlength=len(centers))
        used = counts > 0
        grid_r, grid_c = np.divmod(np.arange(n), w)
        for col, src in enumerate((grid_r, grid_c, image.ravel())):
            sums = np.bincount(flat, weights=src, minlength=len(centers))
            centers[used, col] = sums[used] / counts[used]

    assignment = _enforce_connectivity(label)
    return SuperpixelPartition.from_assignment(assignment, image)


def _enforce_connectivity(label):
    h, w = label.shape
    out = np.full((h, w), -1, dtype=np.int64)
    slices = ndimage.find_objects(label + 1)
    for k, sl in enumerate(slices):
        if sl is None:
            continue
        mask = label[sl] == k
        comps, ncomp = ndimage.label(mask)
        sizes = np.bincount(comps.ravel(), minlength=ncomp + 1)
        sizes[0] = 0
        keep = int(np.argmax(sizes))
        out[sl][comps == keep] = k

    orphans, norph = ndimage.label(out < 0)
    if norph:
        seg_sizes = np.bincount(out[out >= 0], minlength=label.max() + 1)
        pending = list(range(1, norph + 1))
        orphan_slices = ndimage.find_objects(orphans)
        while pending:
            still = []
            for j in pending:
                sl = orphan_slices[j - 1]
                grown = tuple(slice(max(0, s.start - 1), s.stop + 1) for s in sl)
                region = orphans[grown] == j
                ring = ndimage.binary_dilation(region) & ~region
                neighbours = out[grown][ring]
                neighbours = neighbours[neighbours >= 0]
                if neighbours.size == 0:
                    still.append(j)
                    continue
                cand = np.unique(neighbours)
                # largest adjacent segment; np.argmax picks the lowest index on ties
                target = int(cand[np.argmax(seg_sizes[cand])])
                out[grown][region] = target
                seg_sizes[target] += int(region.sum())
            if len(still) == len(pending):
                raise InputError("connectivity enforcement failed to place orphan pixels")
            pending = still

    _, compact = np.unique(out, return_inverse=True)
    return compact.reshape(h, w)


def split_by_labeling(partition, labels):
    """Refine a partition so that every superpixel is label-homogeneous.

    Each nonempty (superpixel, label) class becomes a new superpixel; new
    indices follow lexicographic (old index, label) order.  Children keep the
    mean, variance and centroid of their original superpixel (only ``sizes``
    change), so any weight table indexed through ``parent`` gives every pixel
    pair the same weight as before the split.
    """
    labels = check_labeling(labels, partition.shape)
    k = int(labels.max()) + 1
    key = partition.assignment * k + labels
    uniq, inverse = np.unique(key.ravel(), return_inverse=True)
    old = uniq // k
    root = old if partition.parent is None else partition.parent[old]
    sizes = np.bincount(inverse, minlength=len(uniq))
    return SuperpixelPartition(
        assignment=inverse.reshape(partition.shape),
        sizes=sizes,
        means=partition.means[old],
        variances=partition.variances[old],
        centroids=partition.centroids[old],
        parent=root,
    )


def child_labels(split, labels):
    """Label shared by all pixels of each superpixel of a split partition."""
    labels = np.asarray(labels)
    out = np.empty(split.n_superpixels, dtype=np.int64)
    out[split.assignment.ravel()] = labels.ravel()
    return out


def write_superpixel_map(path, assignment):
    """Write ``QCRFSPIX`` + u32 height + u32 width + u32 indices, little-endian."""
    assignment = np.asarray(assignment)
    if assignment.ndim != 2:
        raise InputError("superpixel map must be 2-D")
    h, w = assignment.shape
    with open(path, "wb") as fh:
        fh.write(SPIX_MAGIC)
        fh.write(struct.pack("<II", h, w))
        fh.write(np.ascontiguousarray(assignment, dtype="<u4").tobytes())


def read_superpixel_map(path):
    """Read a superpixel map written by :func:`write_superpixel_map`."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != SPIX_MAGIC:
        raise FormatError("bad superpixel map magic", 0)
    if len(data) < 16:
        raise FormatError("truncated superpixel map header", len(data))
    h, w = struct.unpack_from("<II", data, 8)
    expected = 16 + 4 * h * w
    if h == 0 or w == 0 or h * w > 2 ** 31:
        raise FormatError(f"invalid map dimensions {h}x{w}", 8)
    if len(data) < expected:
        raise FormatError("truncated superpixel map", len(data))
    if len(data) > expected:
        raise FormatError("trailing bytes after superpixel map", expected)
    arr = np.frombuffer(data, dtype="<u4", count=h * w, offset=16)
    return arr.reshape(h, w).astype(np.int64)
