"""scikit-learn style wrappers.

Inference here is transductive: ``fit`` runs the solver on one image and
stores the result, ``predict`` is ``fit`` followed by reading ``labels_``.
Hyper-parameters follow the usual conventions, so ``get_params`` /
``set_params`` and ``sklearn.base.clone`` work.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .bench import METHODS, run_method
from .core import EnergyParams, SolverConfig, SuperpixelPartition, total_energy
from .exceptions import InputError
from .superpix import slic_partition
from .validation import check_image, check_unary
from .weights import build_weights


class SLICSuperpixels(TransformerMixin, BaseEstimator):
    """SLIC superpixels as a transformer from image to superpixel index map.

    Parameters
    ----------
    n_segments : int
    compactness : float
    n_iter : int
    """

    def __init__(self, n_segments=200, compactness=20.0, n_iter=10):
        self.n_segments = n_segments
        self.compactness = compactness
        self.n_iter = n_iter

    def fit(self, X, y=None):
        X = check_image(X)
        self.partition_ = slic_partition(X, min(self.n_segments, X.size), self.compactness, self.n_iter)
        self.n_superpixels_ = self.partition_.n_superpixels
        return self

    def transform(self, X):
        check_is_fitted(self, "partition_")
        if np.shape(X) != self.partition_.shape:
            raise InputError("transform expects the image the transformer was fitted on")
        return np.array(self.partition_.assignment)


class QuantizedCRF(BaseEstimator):
    """MAP labeling under a quantized-edge Full-CRF.

    Parameters
    ----------
    method : {"expansion", "meanfield", "icm", "spicm", "exact"}
    n_superpixels : int
        SLIC target when no superpixel map is passed to ``fit``.
    compactness : float
    lambda1, lambda2, beta1, beta2, beta3, smoothness : float
        Edge-weight parameters, see :class:`qcrf.core.EnergyParams`.
    max_sweeps, max_outer_sweeps, max_iters, tol, truncation
        Solver settings, see :class:`qcrf.core.SolverConfig`.

    Attributes
    ----------
    labels_ : ndarray of int64, shape (height, width)
    energy_ : float
    partition_ : SuperpixelPartition
    weights_ : WeightTable
    """

    def __init__(self, method="expansion", n_superpixels=200, compactness=20.0,
                 lambda1=1.0, lambda2=1.0, beta1=10.0, beta2=50.0, beta3=13.0, smoothness=1.0,
                 max_sweeps=4, max_outer_sweeps=5, max_iters=100, tol=1e-5, truncation="target"):
        self.method = method
        self.n_superpixels = n_superpixels
        self.compactness = compactness
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.beta1 = beta1
        self.beta2 = beta2
        self.beta3 = beta3
        self.smoothness = smoothness
        self.max_sweeps = max_sweeps
        self.max_outer_sweeps = max_outer_sweeps
        self.max_iters = max_iters
        self.tol = tol
        self.truncation = truncation

    def _energy_params(self):
        return EnergyParams(self.lambda1, self.lambda2, self.beta1, self.beta2, self.beta3,
                            self.smoothness)

    def _solver_config(self):
        return SolverConfig(self.max_sweeps, self.max_outer_sweeps, self.max_iters, self.tol,
                            self.truncation)

    def _setup(self, X, unary, superpixels):
        X = check_image(X)
        unary = check_unary(unary, X.shape)
        if superpixels is None:
            partition = slic_partition(X, min(self.n_superpixels, X.size), self.compactness)
        elif isinstance(superpixels, SuperpixelPartition):
            partition = superpixels
        else:
            partition = SuperpixelPartition.from_assignment(superpixels, X)
        return unary, partition, build_weights(partition, self._energy_params())

    def fit(self, X, unary, superpixels=None):
        """Run inference.

        Parameters
        ----------
        X : array-like, shape (height, width)
            Gray image in [0, 255]; drives superpixels and edge weights.
        unary : array-like, shape (height, width, k)
        superpixels : array-like of int or SuperpixelPartition, optional
            Superpixel index map; SLIC is run when omitted.
        """
        if self.method not in METHODS:
            raise InputError(f"method must be one of {', '.join(METHODS)}")
        unary, self.partition_, self.weights_ = self._setup(X, unary, superpixels)
        self.labels_, self.energy_ = run_method(self.method, unary, self.partition_, self.weights_,
                                                self._solver_config())
        self.n_labels_ = unary.shape[2]
        return self

    def predict(self, X, unary, superpixels=None):
        return self.fit(X, unary, superpixels).labels_

    def fit_predict(self, X, unary, superpixels=None):
        return self.predict(X, unary, superpixels)

    def score(self, X, unary, labels=None, superpixels=None):
        """Negative energy of ``labels`` (default: the fitted labeling)."""
        check_is_fitted(self, "labels_")
        labels = self.labels_ if labels is None else labels
        if superpixels is None:
            partition, weights = self.partition_, self.weights_
        else:
            unary, partition, weights = self._setup(X, unary, superpixels)
        return -total_energy(labels, unary, partition, weights)
