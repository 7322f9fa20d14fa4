"""Command-line experiment runner.

Subcommands:

* ``find``: search a frame for one configuration and write a JSON report
  plus a one-line CSV row next to it;
* ``sweep``: run ``find`` over several ambient dimensions and seeds and
  write one CSV table;
* ``verify-map``: check the zero set of the equivariant map;
* ``approx``: polynomial approximation of a norm on R^k without any frame.

Exit codes: 0 success, 2 infeasible or invalid input, 3 not converged or a
failed verification, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import barvinok
from .errors import (CapacityError, ConditioningError, ConvergenceError,
                     DegenerateCloudError, InfeasibleInstanceError,
                     InvalidParameterError, ResourceError)
from .equivariant_map import (EquivariantMapSpec, MaxSplit, parity_representation,
                              split_by_max, verify_map)
from .multiindex import enumerate_multiindices, odd_parity_pairs
from .norms import NormSpec, restrict_norm
from .sphere import sign_vectors
from .stiefel import (SolverOptions, bound_eps_shape, choose_degree, feasibility,
                      solve_frame, theory_epsilon, zero_exists)

log = logging.getLogger("dvoretzky_frames")

EXIT_OK, EXIT_INFEASIBLE, EXIT_NOT_CONVERGED, EXIT_NUMERICAL = 0, 2, 3, 4

SWEEP_COLUMNS = ["n", "seed", "k", "d", "theory_eps", "achieved_eps", "bound_eps_shape",
                 "objective", "converged", "error"]
FIND_COLUMNS = ["n", "k", "d", "seed", "theory_eps", "achieved_eps", "bound_eps_shape",
                "objective", "converged"]


@dataclass
class ExperimentConfig:
    norm: dict
    n: int
    k: int
    d: object = "auto"
    sampling: dict = field(default_factory=lambda: {"dual_sphere": None, "verify_sphere": 4096})
    solver: dict = field(default_factory=lambda: {"restarts": 16, "max_iters": 50,
                                                  "tol_g": 1e-8, "fd_step": 1e-5})
    seed: int = 0
    output_path: str = "report.json"

    def __post_init__(self):
        if self.d != "auto" and (not isinstance(self.d, int) or self.d < 1 or self.d % 2 == 0):
            raise InvalidParameterError(f"d must be 'auto' or a positive odd integer, got {self.d!r}")
        unknown = set(self.solver) - {"restarts", "max_iters", "tol_g", "fd_step"}
        if unknown:
            raise InvalidParameterError(f"unknown solver options {sorted(unknown)}")
        unknown = set(self.sampling) - {"dual_sphere", "verify_sphere"}
        if unknown:
            raise InvalidParameterError(f"unknown sampling options {sorted(unknown)}")

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_json(text):
        data = json.loads(text)
        try:
            return ExperimentConfig(**data)
        except TypeError as exc:
            raise InvalidParameterError(f"bad config: {exc}") from None

    @staticmethod
    def load(path):
        with open(path) as fh:
            return ExperimentConfig.from_json(fh.read())

    def build_norm(self):
        spec = NormSpec.from_dict(self.norm)
        if spec.dim != self.n:
            raise InvalidParameterError(f"norm lives in R^{spec.dim} but n={self.n}")
        return spec

    def resolve_degree(self):
        """Returns ``(d, source)``; raises if the instance is infeasible."""
        if self.k < 2:
            raise InvalidParameterError("frame searches need k >= 2")
        if self.d == "auto":
            return choose_degree(self.n, self.k), "auto"
        if not zero_exists(self.n, self.k, self.d):
            raise InfeasibleInstanceError(
                f"|E_d| = {len(odd_parity_pairs(self.k, self.d))} exceeds n - k = {self.n - self.k}")
        return self.d, "given"

    def solver_options(self, threads=1):
        s = self.solver
        return SolverOptions(restarts=s.get("restarts", 16), max_iters=s.get("max_iters", 50),
                             tol_g=s.get("tol_g", 1e-8), fd_step=s.get("fd_step", 1e-5),
                             seed=self.seed, threads=threads,
                             dual_samples=self.sampling.get("dual_sphere"),
                             verify_samples=self.sampling.get("verify_sphere", 4096))


def norm_for_dimension(norm, n):
    """Re-target a norm description to R^n (used by sweeps)."""
    norm = copy.deepcopy(norm)
    kind = norm.get("kind")
    if kind == "rotated":
        if "q" in norm:
            raise InvalidParameterError("rotated norms with an explicit q cannot be resized")
        norm["base"] = norm_for_dimension(norm["base"], n)
    elif kind == "smooth_random":
        norm["n"] = n
        norm["count"] = 2 * n
    elif "n" in norm:
        norm["n"] = n
    else:
        raise InvalidParameterError(f"norm kind {kind!r} has no dimension parameter to sweep")
    return norm


def _float(x):
    return None if x is None else float(x)


def run_find(config: ExperimentConfig, threads=1, timing=True):
    """Search a frame and collect the report fields."""
    t0 = time.perf_counter()
    d, d_source = config.resolve_degree()
    spec = config.build_norm()
    n, k = config.n, config.k
    res = solve_frame(spec, n, k, d, config.solver_options(threads))
    restricted = restrict_norm(spec, res.frame)
    samples = config.sampling.get("dual_sphere")
    A, E, _ = barvinok.norm_quadform(restricted, d, samples, config.seed)
    verify = config.sampling.get("verify_sphere", 4096)
    lo, hi = barvinok.sandwich_check(A, restricted, verify, config.seed)
    equiv = max(barvinok.equivariance_residual(restricted, g, d, samples, config.seed)
                for g in sign_vectors(k)[1:])
    return {
        "config": json.loads(config.to_json()),
        "d": d,
        "d_source": d_source,
        "index_set_size": len(enumerate_multiindices(k, d)),
        "parity_pairs": len(odd_parity_pairs(k, d)),
        "dimension_budget_ok": feasibility(n, k, d),
        "theory_eps": theory_epsilon(k, d),
        "bound_eps_shape": bound_eps_shape(n, k),
        "achieved_eps": float(res.achieved_eps),
        "objective": float(res.objective_value),
        "converged": bool(res.converged),
        "iterations": res.iterations,
        "restarts_used": res.restarts_used,
        "restarts_converged": sum(r.converged for r in res.restarts),
        "sandwich": {"lo": lo, "hi": hi},
        "ellipsoid_gap": float(E.gap),
        "equivariance_residual": equiv,
        "frame": res.frame.tolist(),
        "wall_time_s": time.perf_counter() - t0 if timing else None,
    }


def find_csv_row(report):
    row = {"n": report["config"]["n"], "k": report["config"]["k"], "d": report["d"],
           "seed": report["config"]["seed"]}
    for key in FIND_COLUMNS[4:]:
        row[key] = report[key]
    return row


def _write_csv(path, columns, rows):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    text = buf.getvalue()
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def _dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def run_sweep(base: ExperimentConfig, n_values, seeds, threads=1):
    """One row per ``(n, seed)``; failing rows carry the error message."""
    rows = []
    for n in n_values:
        for seed in seeds:
            row = {"n": n, "seed": seed, "k": base.k}
            try:
                cfg = copy.deepcopy(base)
                cfg.n, cfg.seed, cfg.d = n, seed, "auto"
                cfg.norm = norm_for_dimension(base.norm, n)
                rep = run_find(cfg, threads, timing=False)
                row.update(d=rep["d"], theory_eps=rep["theory_eps"],
                           achieved_eps=rep["achieved_eps"],
                           bound_eps_shape=rep["bound_eps_shape"],
                           objective=rep["objective"], converged=rep["converged"], error="")
            except Exception as exc:  # noqa: BLE001 - recorded in the row
                log.warning("sweep row n=%s seed=%s failed: %s", n, seed, exc)
                row.update(error=f"{type(exc).__name__}: {exc}")
            rows.append(row)
    return rows


def parse_split(text, k):
    """``[[subset, ...], ...]`` as JSON, one list of 1-based subsets per part."""
    parts = json.loads(text)
    if len(parts) != k:
        raise InvalidParameterError(f"split needs {k} parts, got {len(parts)}")
    return MaxSplit.from_parts(parts)


def run_verify_map(n, k, split=None, from_parity=None, restarts=None, seed=0):
    if (split is None) == (from_parity is None):
        raise InvalidParameterError("give exactly one of a split or from_parity")
    if split is None:
        split = split_by_max(parity_representation(odd_parity_pairs(k, from_parity)), n, k)
    report = verify_map(EquivariantMapSpec(n, k, split), restarts=restarts, seed=seed)
    report["source"] = "split" if from_parity is None else f"parity d={from_parity}"
    return report


def run_approx(config: ExperimentConfig, timing=True):
    """Ellipsoid pipeline on the configured norm, which must live in R^k."""
    t0 = time.perf_counter()
    spec = NormSpec.from_dict(config.norm)
    if spec.dim != config.k:
        raise InvalidParameterError(f"approx needs a norm on R^k, got R^{spec.dim} with k={config.k}")
    if config.d == "auto":
        raise InvalidParameterError("approx needs an explicit odd d")
    d = config.d
    samples = config.sampling.get("dual_sphere")
    A, E, cloud, used = barvinok.stable_quadform(spec, d, samples, config.seed)
    verify = config.sampling.get("verify_sphere", 4096)
    lo, hi = barvinok.sandwich_check(A, spec, verify, config.seed)
    equiv = max((barvinok.equivariance_residual(spec, g, d, used, config.seed)
                 for g in sign_vectors(spec.dim)[1:]), default=0.0)
    mset = A.index_set
    return {
        "config": json.loads(config.to_json()),
        "d": d,
        "index_set_size": len(mset),
        "multi_indices": mset.labels(),
        "dual_samples": used,
        "ellipsoid_gap": float(E.gap),
        "sandwich": {"lo": lo, "hi": hi, "upper_limit": float(len(mset))},
        "equivariance_residual": equiv,
        "A": A.entries.tolist(),
        "M": E.shape.tolist(),
        "wall_time_s": time.perf_counter() - t0 if timing else None,
    }, A, E


def _build_parser():
    p = argparse.ArgumentParser(prog="dvoretzky-frames", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="JSON experiment config")
        sp.add_argument("--seed", type=int, help="overrides the config seed")
        sp.add_argument("--out", help="output path (overrides output_path)")
        sp.add_argument("--threads", type=int, default=1, help="parallel restarts")
        sp.add_argument("--no-timing", action="store_true",
                        help="omit wall time so reports are reproducible byte for byte")

    common(sub.add_parser("find", help="search a frame for one configuration"))
    sp = sub.add_parser("sweep", help="find over several n and seeds, CSV output")
    common(sp)
    sp.add_argument("--n-values", type=int, nargs="*", default=[])
    sp.add_argument("--seeds", type=int, nargs="*", default=[0])
    sp = sub.add_parser("verify-map", help="check the equivariant map's zero set")
    common(sp, config_required=False)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--split", help="JSON list of parts, e.g. '[[], [[1,2],[2]]]'")
    group.add_argument("--from-parity", type=int, metavar="D",
                       help="use the parity representation of degree D")
    sp.add_argument("--restarts", type=int)
    sp = sub.add_parser("approx", help="polynomial approximation of a norm on R^k")
    common(sp)
    sp.add_argument("--csv-prefix", help="also write PREFIX_A.csv and PREFIX_M.csv")
    return p


def _load_config(args):
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out:
        cfg.output_path = args.out
    return cfg


def _write_text(path, text):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _dispatch(args):
    timing = not args.no_timing
    if args.command == "find":
        cfg = _load_config(args)
        report = run_find(cfg, args.threads, timing)
        _write_text(cfg.output_path, _dump_json(report))
        if cfg.output_path != "-":
            stem = cfg.output_path[:-5] if cfg.output_path.endswith(".json") else cfg.output_path
            _write_csv(stem + ".csv", FIND_COLUMNS, [find_csv_row(report)])
        return EXIT_OK if report["converged"] else EXIT_NOT_CONVERGED
    if args.command == "sweep":
        cfg = _load_config(args)
        rows = run_sweep(cfg, args.n_values, args.seeds, args.threads)
        _write_csv(args.out or cfg.output_path, SWEEP_COLUMNS, rows)
        bad = any(r.get("error") or not r.get("converged") for r in rows)
        return EXIT_NOT_CONVERGED if bad else EXIT_OK
    if args.command == "verify-map":
        split = parse_split(args.split, args.k) if args.split else None
        report = run_verify_map(args.n, args.k, split, args.from_parity, args.restarts,
                                args.seed or 0)
        _write_text(args.out or "-", _dump_json(report))
        return EXIT_OK if report["passed"] else EXIT_NOT_CONVERGED
    if args.command == "approx":
        cfg = _load_config(args)
        report, A, E = run_approx(cfg, timing)
        _write_text(cfg.output_path, _dump_json(report))
        if args.csv_prefix:
            barvinok.dump_matrix_csv(args.csv_prefix + "_A.csv", A.entries, A.index_set)
            barvinok.dump_matrix_csv(args.csv_prefix + "_M.csv", E.shape, A.index_set)
        return EXIT_OK
    raise AssertionError(args.command)


def main(argv=None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except (InfeasibleInstanceError, CapacityError, InvalidParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DegenerateCloudError, ConditioningError, ConvergenceError, ResourceError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
