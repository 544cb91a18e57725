"""Command-line interface.

Subcommands: ``superpix``, ``weights``, ``solve``, ``bench``, ``eval`` and
``synth``.  Settings come from an optional JSON file (``--config``) whose keys
are :class:`RunConfig` fields; command-line flags override it.  Exit status is
0 on success, 1 on bad input and 2 on an internal invariant violation.
"""

import argparse
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .baselines import mean_field
from .bench import METHODS, Instance, bench_sweep, eval_iou, run_method, write_report
from .core import EnergyParams, SolverConfig, SuperpixelPartition
from .exceptions import InputError, InvariantError
from .io import read_image, read_labeling, read_unary, write_image, write_labeling, write_unary
from .superpix import read_superpixel_map, slic_partition, write_superpixel_map
from .synthetic import make_instance
from .weights import build_weights

log = logging.getLogger("qcrf")

_PARAM_FIELDS = [f.name for f in dataclasses.fields(EnergyParams)]


@dataclasses.dataclass
class RunConfig:
    """Everything a CLI run depends on."""

    method: str = "expansion"
    params: EnergyParams = dataclasses.field(default_factory=EnergyParams)
    superpixel_count: int = 200
    compactness: float = 20.0
    seed: int = 0
    max_sweeps: int = 4
    max_outer_sweeps: int = 5
    max_iters: int = 100
    tol: float = 1e-5
    truncation: str = "target"
    image: str = None
    unary: str = None
    superpixels: str = None
    output: str = None
    # bench
    lambdas: list = dataclasses.field(default_factory=lambda: [0.1, 0.3, 0.5, 1.0, 2.0])
    methods: list = dataclasses.field(default_factory=lambda: ["expansion", "meanfield", "spicm", "exact"])
    instances: int = 10
    height: int = 48
    width: int = 48
    n_labels: int = 2
    timing: bool = True

    def __post_init__(self):
        if isinstance(self.params, dict):
            unknown = set(self.params) - set(_PARAM_FIELDS)
            if unknown:
                raise InputError(f"unknown energy parameters {sorted(unknown)}")
            self.params = EnergyParams(**self.params)
        if self.method not in METHODS:
            raise InputError(f"method must be one of {', '.join(METHODS)}, got {self.method!r}")
        self.solver_config()  # validate early

    def solver_config(self):
        return SolverConfig(self.max_sweeps, self.max_outer_sweeps, self.max_iters, self.tol,
                            self.truncation)

    @classmethod
    def from_sources(cls, path=None, overrides=None):
        """Merge a JSON file and flag overrides (flags win)."""
        values = {}
        if path is not None:
            with open(path) as fh:
                try:
                    values = json.load(fh)
                except json.JSONDecodeError as exc:
                    raise InputError(f"{path}: invalid JSON: {exc}") from None
            if not isinstance(values, dict):
                raise InputError(f"{path}: config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise InputError(f"unknown config keys {sorted(unknown)}")
        params = dict(values.pop("params", {}) or {})
        for key, value in (overrides or {}).items():
            if value is None:
                continue
            if key in _PARAM_FIELDS:
                params[key] = value
            else:
                values[key] = value
        return cls(params=params, **values)


def _require(cfg, *names):
    for name in names:
        if not getattr(cfg, name):
            raise InputError(f"--{name.replace('_', '-')} is required")


def _partition(cfg, image):
    if cfg.superpixels:
        assignment = read_superpixel_map(cfg.superpixels)
        return SuperpixelPartition.from_assignment(assignment, image)
    return slic_partition(image, cfg.superpixel_count, cfg.compactness)


def cmd_superpix(cfg):
    _require(cfg, "image", "output")
    partition = slic_partition(read_image(cfg.image), cfg.superpixel_count, cfg.compactness)
    write_superpixel_map(cfg.output, partition.assignment)
    return {"superpixels": partition.n_superpixels}


def cmd_weights(cfg):
    _require(cfg, "image", "output")
    image = read_image(cfg.image)
    weights = build_weights(_partition(cfg, image), cfg.params)
    weights.to_csv(cfg.output)
    return {"superpixels": weights.n_superpixels}


def cmd_solve(cfg, q_output=None):
    _require(cfg, "image", "unary")
    image = read_image(cfg.image)
    unary = read_unary(cfg.unary).astype(np.float64)
    partition = _partition(cfg, image)
    weights = build_weights(partition, cfg.params)
    config = cfg.solver_config()
    if q_output:
        state, labels, energy = mean_field(unary, partition, weights, config)
        write_unary(q_output, state.q.reshape(unary.shape).astype(np.float32))
    else:
        labels, energy = run_method(cfg.method, unary, partition, weights, config)
    if cfg.output:
        write_labeling(cfg.output, labels, unary.shape[2])
    return {"method": "meanfield" if q_output else cfg.method, "energy": energy,
            "superpixels": partition.n_superpixels}


def synthetic_instances(cfg):
    for i in range(cfg.instances):
        seed = cfg.seed + i
        inst = make_instance(seed, (cfg.height, cfg.width), cfg.n_labels)
        yield Instance(f"synthetic-{seed}", inst.image, inst.unary)


def cmd_bench(cfg):
    _require(cfg, "output")
    methods = list(cfg.methods)
    if cfg.n_labels != 2 and "exact" in methods:
        methods.remove("exact")
    rows = bench_sweep(synthetic_instances(cfg), cfg.lambdas, methods, cfg.params,
                       cfg.solver_config(), cfg.superpixel_count, cfg.compactness,
                       timing=cfg.timing)
    write_report(cfg.output, rows)
    return {"rows": len(rows)}


def cmd_eval(prediction, truth, n_labels, ignore_label):
    per_class, mean = eval_iou(read_labeling(prediction), read_labeling(truth), n_labels, ignore_label)
    clean = [None if np.isnan(v) else float(v) for v in per_class]
    return {"per_class_iou": clean, "mean_iou": None if np.isnan(mean) else mean}


def cmd_synth(cfg, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    inst = make_instance(cfg.seed, (cfg.height, cfg.width), cfg.n_labels)
    write_image(os.path.join(out_dir, "image.pgm"), inst.image)
    write_unary(os.path.join(out_dir, "unary.bin"), inst.unary.astype(np.float32))
    write_labeling(os.path.join(out_dir, "truth.pgm"), inst.truth, cfg.n_labels)
    return {"directory": out_dir}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors are input errors
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(p, inputs=True):
    p.add_argument("--config", help="JSON file with RunConfig fields")
    if inputs:
        p.add_argument("--image", help="gray image (PGM/PPM/.npy)")
    p.add_argument("--output", "-o", help="output path")
    p.add_argument("--superpixel-count", type=int, dest="superpixel_count")
    p.add_argument("--compactness", type=float)
    for name in _PARAM_FIELDS:
        p.add_argument(f"--{name}", type=float)


def _add_solver(p):
    p.add_argument("--max-sweeps", type=int, dest="max_sweeps")
    p.add_argument("--max-outer-sweeps", type=int, dest="max_outer_sweeps")
    p.add_argument("--max-iters", type=int, dest="max_iters")
    p.add_argument("--tol", type=float)
    p.add_argument("--truncation", choices=("target", "current", "switch"))


def build_parser():
    parser = _Parser(prog="qcrf", description="Inference for quantized-edge fully connected CRFs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("superpix", help="compute SLIC superpixels and write a map file")
    _add_common(p)

    p = sub.add_parser("weights", help="write the superpixel edge-weight table as CSV")
    _add_common(p)
    p.add_argument("--superpixels", help="superpixel map (default: run SLIC)")

    p = sub.add_parser("solve", help="run inference and write the labeling as PGM")
    _add_common(p)
    _add_solver(p)
    p.add_argument("--unary", help="unary tensor file")
    p.add_argument("--superpixels", help="superpixel map (default: run SLIC)")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--q-output", help="run mean field and dump Q in the unary tensor format")

    p = sub.add_parser("bench", help="sweep the smoothness weight on synthetic instances")
    _add_common(p, inputs=False)
    _add_solver(p)
    p.add_argument("--lambdas", type=lambda s: [float(v) for v in s.split(",")],
                   help="comma-separated smoothness values")
    p.add_argument("--methods", type=lambda s: s.split(","), help="comma-separated methods")
    p.add_argument("--instances", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--n-labels", type=int, dest="n_labels")
    p.add_argument("--no-timing", dest="timing", action="store_const", const=False,
                   help="leave wall_time_seconds empty for reproducible reports")

    p = sub.add_parser("eval", help="per-class and mean IOU of a predicted labeling")
    p.add_argument("--prediction", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--n-labels", type=int, required=True, dest="n_labels")
    p.add_argument("--ignore-label", type=int, default=255, dest="ignore_label")

    p = sub.add_parser("synth", help="write a synthetic image, unary tensor and ground truth")
    p.add_argument("--config")
    p.add_argument("--output", "-o", required=True, help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--n-labels", type=int, dest="n_labels")
    return parser


_NOT_CONFIG = {"command", "verbose", "config", "q_output", "prediction", "truth", "ignore_label"}


def run(args):
    if args.command == "eval":
        return cmd_eval(args.prediction, args.truth, args.n_labels, args.ignore_label)
    overrides = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG}
    cfg = RunConfig.from_sources(args.config, overrides)
    if args.command == "synth":
        return cmd_synth(cfg, cfg.output)
    if args.command == "solve":
        return cmd_solve(cfg, args.q_output)
    return {"superpix": cmd_superpix, "weights": cmd_weights, "bench": cmd_bench}[args.command](cfg)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        result = run(args)
    except (InputError, OSError) as exc:
        log.error("%s", exc)
        return 1
    except (InvariantError, AssertionError) as exc:
        log.error("internal error: %s", exc)
        return 2
    print(json.dumps(result, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
