"""Seeded synthetic labeling problems.

A ground-truth label map is planted as a Voronoi diagram of random seeds.
The image is a per-label gray level plus Gaussian noise, and the unary cost
of label ``l`` is ``scale * ([l != truth] + noise)``, clipped at zero.  Noise on
the unaries makes the argmin labeling wrong on a fraction of pixels, which the
pairwise terms then have to clean up.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InputError


@dataclass(frozen=True, eq=False)
class SyntheticInstance:
    """Image, unary costs and planted ground truth of one problem."""

    image: np.ndarray
    unary: np.ndarray
    truth: np.ndarray
    seed: int


def make_instance(seed, shape=(48, 48), n_labels=2, n_regions=6, image_noise=12.0,
                  unary_noise=0.6, unary_scale=None):
    """Generate one instance.

    Parameters
    ----------
    seed : int
    shape : tuple of int
        (height, width).
    n_labels : int
    n_regions : int
        Voronoi cells; each takes a random label (every label used when
        ``n_regions >= n_labels``).
    image_noise : float
        Standard deviation of the intensity noise.
    unary_noise : float
        Standard deviation of the unary noise, in units of ``unary_scale``.
    unary_scale : float, optional
        Cost of a wrong label before noise.  Defaults to ``0.2 * n`` so that
        unary and pairwise terms stay comparable as the image grows (the sum
        of a pixel's pairwise weights grows linearly with ``n``).

    Returns
    -------
    SyntheticInstance
    """
    h, w = shape
    if h < 1 or w < 1 or n_labels < 2 or n_regions < 1:
        raise InputError("need a nonempty image, n_labels >= 2 and n_regions >= 1")
    rng = np.random.default_rng(seed)
    n = h * w
    scale = 0.2 * n if unary_scale is None else float(unary_scale)

    seeds = rng.uniform([0, 0], [h, w], size=(n_regions, 2))
    region_label = rng.permutation(np.resize(np.arange(n_labels), n_regions))
    rows, cols = np.mgrid[0:h, 0:w]
    d2 = (rows[..., None] - seeds[:, 0]) ** 2 + (cols[..., None] - seeds[:, 1]) ** 2
    truth = region_label[np.argmin(d2, axis=2)]

    levels = np.linspace(40.0, 215.0, n_labels)
    image = np.clip(levels[truth] + rng.normal(0.0, image_noise, shape), 0.0, 255.0)

    wrong = (np.arange(n_labels)[None, None, :] != truth[..., None]).astype(np.float64)
    noise = rng.normal(0.0, unary_noise, (h, w, n_labels))
    unary = np.maximum(scale * (wrong + noise), 0.0)
    return SyntheticInstance(image, unary, truth.astype(np.int64), int(seed))
