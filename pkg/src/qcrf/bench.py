"""Benchmark sweeps over the smoothness weight, and IOU evaluation."""

import csv
import time
from dataclasses import dataclass

import numpy as np

from .baselines import icm_pixel, icm_superpixel, mean_field
from .binary_solver import solve_binary
from .core import EnergyParams, SolverConfig, SuperpixelPartition
from .exceptions import InputError
from .multilabel_solver import solve_multilabel
from .oracle import exact_binary
from .superpix import slic_partition
from .validation import check_labeling, check_unary
from .weights import build_weights

METHODS = ("expansion", "meanfield", "icm", "spicm", "exact")
CSV_COLUMNS = ("instance", "method", "lambda", "energy", "gap", "wall_time_seconds")
ERROR_MARKER = "error"


@dataclass(frozen=True, eq=False)
class Instance:
    """Named problem: gray image, unary costs and optional superpixel map."""

    name: str
    image: np.ndarray
    unary: np.ndarray
    assignment: np.ndarray = None


def run_method(method, unary, partition, weights, config=None):
    """Run one inference method and return ``(labels, energy)``."""
    config = SolverConfig() if config is None else config
    k = unary.shape[2]
    if method == "expansion":
        solve = solve_binary if k == 2 else solve_multilabel
        labels, energy, _ = solve(unary, partition, weights, config)
    elif method == "meanfield":
        _, labels, energy = mean_field(unary, partition, weights, config)
    elif method == "icm":
        labels, energy = icm_pixel(unary, partition, weights, config=config)
    elif method == "spicm":
        labels, energy = icm_superpixel(unary, partition, weights, config=config)
    elif method == "exact":
        if k != 2:
            raise InputError("exact inference is only available for two labels")
        labels, energy = exact_binary(unary, partition, weights)
    else:
        raise InputError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    return labels, energy


def relative_gap(energy, reference):
    """``(E - E*) / E*``; 0 when both are zero, ``inf`` when only ``E*`` is."""
    if reference == 0:
        return 0.0 if energy == 0 else float("inf")
    return (energy - reference) / reference


def bench_sweep(instances, lambdas, methods=METHODS, params=None, config=None,
                superpixel_count=200, compactness=20.0, timing=True):
    """Run every method at every smoothness value on every instance.

    The reference energy ``E*`` is the exact optimum for two-label instances
    when ``"exact"`` is among the methods, otherwise the lowest energy any
    method found in that cell.  A failing method yields a row whose energy
    and gap hold :data:`ERROR_MARKER`; the sweep continues.

    Parameters
    ----------
    instances : iterable of Instance
    lambdas : sequence of float
        Values of ``EnergyParams.smoothness``.
    methods : sequence of str
    params : EnergyParams, optional
        All other weight parameters.
    config : SolverConfig, optional
    superpixel_count, compactness : SLIC settings for instances without a map.
    timing : bool
        Record wall time; when false the column is left empty so reports are
        byte-reproducible.

    Returns
    -------
    list of dict
        One row per (instance, lambda, method), keyed by :data:`CSV_COLUMNS`.
    """
    params = EnergyParams() if params is None else params
    config = SolverConfig() if config is None else config
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise InputError(f"unknown methods {unknown}; choose from {', '.join(METHODS)}")
    rows = []
    for inst in instances:
        unary = check_unary(inst.unary)
        if inst.assignment is None:
            partition = slic_partition(inst.image, superpixel_count, compactness)
        else:
            partition = SuperpixelPartition.from_assignment(inst.assignment, inst.image)
        for lam in lambdas:
            p = EnergyParams(params.lambda1, params.lambda2, params.beta1, params.beta2,
                             params.beta3, smoothness=float(lam))
            weights = build_weights(partition, p)
            results = {}
            for method in methods:
                start = time.perf_counter()
                try:
                    _, energy = run_method(method, unary, partition, weights, config)
                except Exception as exc:  # recorded per row, sweep continues
                    results[method] = (None, repr(exc))
                    continue
                results[method] = (energy, time.perf_counter() - start)
            found = [e for e, _ in results.values() if e is not None]
            exact = results.get("exact", (None, None))[0]
            reference = exact if (exact is not None and unary.shape[2] == 2) else min(found, default=None)
            for method in methods:
                energy, elapsed = results[method]
                row = {"instance": inst.name, "method": method, "lambda": repr(float(lam))}
                if energy is None:
                    row.update(energy=ERROR_MARKER, gap=ERROR_MARKER, wall_time_seconds="")
                else:
                    row.update(energy=repr(energy), gap=repr(relative_gap(energy, reference)),
                               wall_time_seconds=repr(elapsed) if timing else "")
                rows.append(row)
    return rows


def write_report(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def eval_iou(prediction, truth, n_labels, ignore_label=255):
    """Per-class intersection over union.

    Pixels whose ground truth equals ``ignore_label`` count toward neither
    intersection nor union.

    Returns
    -------
    per_class : ndarray, shape (n_labels,)
        ``nan`` for classes absent from both prediction and truth.
    mean : float
        Mean over the classes that are present; ``nan`` if none is.
    """
    prediction = check_labeling(prediction)
    truth = check_labeling(truth)
    if prediction.shape != truth.shape:
        raise InputError(f"prediction shape {prediction.shape} != ground truth shape {truth.shape}")
    keep = truth != ignore_label
    pred, gt = prediction[keep], truth[keep]
    per_class = np.full(n_labels, np.nan)
    for label in range(n_labels):
        p, g = pred == label, gt == label
        union = np.count_nonzero(p | g)
        if union:
            per_class[label] = np.count_nonzero(p & g) / union
    present = per_class[~np.isnan(per_class)]
    return per_class, float(present.mean()) if present.size else float("nan")
