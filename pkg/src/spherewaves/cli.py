"""Command line entry point: ``spherewaves <subcommand> ...``.

Exit codes: 0 pass, 1 tolerance failure, 2 config or runtime error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from contextlib import contextmanager

import numpy as np

from . import chaos, nodal, quadrature, runner, specfun, stats
from .rng import RngStream
from .runner import fmt
from .sphere_field import evaluate_on_grid, sample_coefficients

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


@contextmanager
def _sink(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _write(path, header, rows):
    with _sink(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def _streams(seed: int, experiment: str, reps: int):
    return (RngStream.for_replication(seed, experiment, i) for i in range(reps))


def cmd_coeffs(args):
    table = specfun.chaos_coefficients(args.max_order)
    rows = [("beta", 2 * k, "", b) for k, b in enumerate(table.beta)]
    half = args.max_order // 2
    rows += [("alpha", 2 * n, 2 * m, table.alpha[n, m]) for n in range(half + 1) for m in range(half + 1 - n)]
    _write(args.out, ["kind", "index1", "index2", "value"], rows)


def cmd_field(args):
    coeffs = sample_coefficients(args.ell, RngStream.for_replication(args.seed, "field", 0))
    grid = quadrature.build_grid(args.grid_degree or 2 * args.ell)
    f = evaluate_on_grid(coeffs, grid, want_gradients=True)
    th, ph = np.meshgrid(grid.theta, grid.phi, indexing="ij")
    cols = [a.ravel() for a in (th, ph, f.values, f.grad1, f.grad2)]
    _write(args.out, ["theta", "phi", "value", "grad1", "grad2"], zip(*cols))


def cmd_nodal(args):
    region = nodal.FULL_SPHERE if args.cap is None else nodal.cap(args.cap)
    rows = []
    for i, s in enumerate(_streams(args.seed, "nodal", args.reps)):
        r = nodal.nodal_length_replicate(args.ell, args.rho, region, s)
        rows.append((i, r.length, r.n_segments))
    _write(args.out, ["rep_index", "length", "n_segments"], rows)


def cmd_trispectrum(args):
    grid = chaos.trispectrum_grid(args.ell, args.cap)
    rows = []
    for i, s in enumerate(_streams(args.seed, "trispectrum", args.reps)):
        f = evaluate_on_grid(sample_coefficients(args.ell, s), grid)
        rows.append((i, chaos.sample_trispectrum(f).value))
    _write(args.out, ["rep_index", "m"], rows)


def cmd_chaos_proj(args):
    if args.order % 2 or not 2 <= args.order <= 6:
        raise ValueError("--order must be 2, 4 or 6")
    q = args.order // 2
    grid = chaos.trispectrum_grid(args.ell, args.cap, order=2 * q)
    rows = []
    for i, s in enumerate(_streams(args.seed, "chaos-proj", args.reps)):
        f = evaluate_on_grid(sample_coefficients(args.ell, s), grid, want_gradients=True)
        rows.append((i, chaos.chaos_projection(f, q).value))
    _write(args.out, ["rep_index", f"l{args.order}"], rows)


def _read_column(path: str, column: str | None) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        names = reader.fieldnames or []
        if column is None:
            candidates = [n for n in names if n not in ("rep_index", "index", "ell", "radius", "rep", "stream_id", "n_segments")]
            if not candidates:
                raise ValueError(f"{path}: no data column")
            column = candidates[0]
        if column not in names:
            raise ValueError(f"{path}: no column {column!r}")
        x = np.array([float(r[column]) for r in reader])
    return x


def _load_samples(args) -> np.ndarray:
    x = _read_column(args.input, args.column)
    if args.standardize:
        x = (x - x.mean()) / x.std(ddof=1)
    return x


def cmd_mdp(args):
    curve = stats.mdp_rate(_load_samples(args), args.a, _floats(args.x))
    _write(args.out, ["x", "estimate", "ci_lo", "ci_hi", "reference"], curve.rows())


def cmd_tails(args):
    td = stats.tail_log_ratio(_load_samples(args), _floats(args.x))
    _write(args.out, ["x", "estimate", "ci_lo", "ci_hi", "reference"], td.rows())


def cmd_calibrate(args):
    stream = RngStream.for_replication(args.seed, "calibrate-iid", 0)
    curve = stats.iid_mdp_calibration(args.n, args.a, args.distribution, _floats(args.x), args.reps, stream)
    _write(args.out, ["x", "estimate", "ci_lo", "ci_hi", "reference"], curve.rows())


def _print_report(report) -> int:
    for c in report["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {report['experiment_id']}: {c['name']}")
    return EXIT_PASS if report["passed"] else EXIT_FAIL


def cmd_run(args):
    cfg = runner.load_config(args.config, workers=args.workers, output_dir=args.output)
    manifest = runner.run_experiment(cfg, force=args.force)
    print(manifest)
    return _print_report(runner.emit_report(manifest, force=args.force))


def cmd_report(args):
    return _print_report(runner.emit_report(args.manifest, force=args.force))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spherewaves", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, **kw):
        sp = sub.add_parser(name, **kw)
        sp.set_defaults(fn=fn)
        sp.add_argument("--out", default=None, help="output CSV (default stdout)")
        return sp

    sp = add("coeffs", cmd_coeffs, help="chaos coefficient tables")
    sp.add_argument("--max-order", type=int, required=True)

    sp = add("field", cmd_field, help="dump one field realization on a grid")
    sp.add_argument("--ell", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--grid-degree", type=int, default=None)

    sp = add("nodal", cmd_nodal, help="nodal length replications")
    sp.add_argument("--ell", type=int, required=True)
    sp.add_argument("--reps", type=int, default=100)
    sp.add_argument("--rho", type=float, default=8.0)
    sp.add_argument("--cap", type=float, default=None)
    sp.add_argument("--seed", type=int, default=0)

    for name, fn in (("trispectrum", cmd_trispectrum), ("chaos-proj", cmd_chaos_proj)):
        sp = add(name, fn)
        sp.add_argument("--ell", type=int, required=True)
        sp.add_argument("--reps", type=int, default=100)
        sp.add_argument("--cap", type=float, default=None)
        sp.add_argument("--seed", type=int, default=0)
        if name == "chaos-proj":
            sp.add_argument("--order", type=int, required=True, help="chaos order 2q")

    for name, fn, xs in (("mdp", cmd_mdp, "0 0.25 0.5 0.75 1"), ("tails", cmd_tails, "1 1.5 2")):
        sp = add(name, fn)
        sp.add_argument("--in", dest="input", required=True)
        sp.add_argument("--column", default=None)
        sp.add_argument("--standardize", action="store_true", help="z-score with the sample mean and sd")
        sp.add_argument("--x", default=xs)
        if name == "mdp":
            sp.add_argument("--a", type=float, required=True)

    sp = add("calibrate-iid", cmd_calibrate, help="i.i.d. mean MDP calibration")
    sp.add_argument("--n", type=int, default=10_000)
    sp.add_argument("--a", type=float, default=2.0)
    sp.add_argument("--distribution", choices=("rademacher", "gaussian"), default="rademacher")
    sp.add_argument("--reps", type=int, default=100_000)
    sp.add_argument("--x", default="0 0.5 1 1.5")
    sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("run", help="run or resume an experiment config")
    sp.set_defaults(fn=cmd_run)
    sp.add_argument("--config", required=True)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--output", default=None, help=f"output root (default ${runner.OUTPUT_ENV} or ./runs)")
    sp.add_argument("--force", action="store_true", help="merge records from a different build")

    sp = sub.add_parser("report", help="summarize a finished run")
    sp.set_defaults(fn=cmd_report)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--force", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        code = args.fn(args)
    except (runner.ConfigError, runner.IncompleteRun, ValueError, OSError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_PASS if code is None else code


if __name__ == "__main__":
    sys.exit(main())
