"""MAP inference for fully connected CRFs with superpixel-quantized edge weights.

Every pixel pair is connected, but the Potts weight of a pair depends only on
the superpixels the two pixels fall in.  Energies, ICM, mean field and
expansion moves then work on per-superpixel aggregates instead of pixel pairs.
"""

__version__ = "0.1.0"

from .baselines import MeanFieldState, icm_pixel, icm_superpixel, mean_field, message_passing
from .binary_solver import (
    SuperpixelProblem,
    g_energy,
    g_unary,
    normalize_unaries,
    reconstruct,
    solve_binary,
    v_pairwise,
)
from .core import (
    EnergyParams,
    SolverConfig,
    SuperpixelPartition,
    count_labels,
    pairwise_energy,
    total_energy,
)
from .estimators import QuantizedCRF, SLICSuperpixels
from .exceptions import (
    FormatError,
    InfeasibleError,
    InputError,
    InvariantError,
    UndefinedResultError,
)
from .maxflow import BinaryPairwiseProblem, min_cut
from .multilabel_solver import build_expansion_energy, solve_multilabel
from .oracle import enumerate_optimum, exact_binary
from .superpix import slic_partition, split_by_labeling
from .weights import WeightTable, build_weights, gaussian_pairwise_energy, relative_difference

__all__ = [
    "BinaryPairwiseProblem",
    "EnergyParams",
    "FormatError",
    "InfeasibleError",
    "InputError",
    "InvariantError",
    "MeanFieldState",
    "QuantizedCRF",
    "SLICSuperpixels",
    "SolverConfig",
    "SuperpixelPartition",
    "SuperpixelProblem",
    "UndefinedResultError",
    "WeightTable",
    "build_expansion_energy",
    "build_weights",
    "count_labels",
    "enumerate_optimum",
    "exact_binary",
    "g_energy",
    "g_unary",
    "gaussian_pairwise_energy",
    "icm_pixel",
    "icm_superpixel",
    "mean_field",
    "message_passing",
    "min_cut",
    "normalize_unaries",
    "pairwise_energy",
    "reconstruct",
    "relative_difference",
    "slic_partition",
    "solve_binary",
    "solve_multilabel",
    "split_by_labeling",
    "total_energy",
    "v_pairwise",
]
