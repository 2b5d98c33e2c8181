"""Command line entry point: ``rank1-ldp <rate|spherical|sample|experiment> ...``."""

from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import experiments as ex
from .ensemble import EnsembleConfig, sample_spectra
from .measures import SemicircleLaw, SpectralMeasure, read_spectrum_values
from .ratefn import RateParams, rate_branch, rate_F, rate_K
from .spherical import (
    SphericalParams,
    i_limit,
    limit_branch,
    log_spherical_finite_n,
    mc_oracle,
    shifted_root,
    solve_fixed_point,
)


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _grid(text: str) -> list[float]:
    try:
        start, stop, step = (float(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("grid must be start:stop:step") from None
    if step <= 0:
        raise argparse.ArgumentTypeError("grid step must be positive")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + k * step for k in range(max(count, 0))]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


# ---------------------------------------------------------------------------


def cmd_rate(args) -> int:
    params = RateParams(args.beta, args.theta)
    xs = args.x_grid if args.x_grid is not None else [args.x]
    fh, close = _open_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "F", "K", "branch"])
        for x in xs:
            w.writerow([_fmt(float(x)), _fmt(rate_F(params, x)), _fmt(rate_K(params, x)),
                        rate_branch(params, x)])
    finally:
        if close:
            fh.close()
    return 0


def cmd_spherical(args) -> int:
    p = SphericalParams(theta=args.theta, beta=args.beta)
    record: dict[str, object] = {"mode": args.mode}
    if args.mode == "limit":
        if args.spectrum:
            locs, weights = read_spectrum_values(args.spectrum)
            mu = SpectralMeasure(locs, None if weights is None else weights / weights.sum())
        else:
            mu = SemicircleLaw(args.beta)
        x = args.x if args.x is not None else mu.max
        branch = limit_branch(mu, x, p)
        w = shifted_root(mu, x, p, branch)
        record.update(value=i_limit(mu, x, p), std_err=None, v=w - p.c, w=w, residual=None,
                      x=x, branch=branch)
    else:
        if not args.spectrum:
            print("error: --spectrum is required for finite and oracle modes", file=sys.stderr)
            return 2
        locs, weights = read_spectrum_values(args.spectrum)
        if weights is not None and not np.allclose(weights, weights[0]):
            print("error: finite/oracle modes need an unweighted eigenvalue list", file=sys.stderr)
            return 2
        sol = solve_fixed_point(locs, p)
        if args.mode == "finite":
            record.update(value=log_spherical_finite_n(locs, p), std_err=None)
        else:
            mean, se = mc_oracle(locs, p, args.samples, args.seed, threads=args.threads)
            record.update(value=mean, std_err=se)
        record.update(v=sol.v, w=sol.w, residual=sol.residual)
    for k, v in record.items():
        print(f"{k}={_fmt(v)}")
    return 0


def cmd_sample(args) -> int:
    cfg = EnsembleConfig(args.n, args.beta, args.theta, args.seed)
    spectra = sample_spectra(cfg, args.replicas, args.threads)
    fh, close = _open_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["replica", "top_eigenvalue", "second_eigenvalue", "bulk_edge_estimate"])
        for r, s in enumerate(spectra):
            bulk = s.eigenvalues[:-1]
            # semicircle edge is twice the standard deviation of the law
            edge = 2.0 * math.sqrt(float(np.mean((bulk - bulk.mean()) ** 2)))
            w.writerow([r, _fmt(s.top), _fmt(s.second), _fmt(edge)])
    finally:
        if close:
            fh.close()
    return 0


def cmd_experiment(args) -> int:
    kind = args.kind
    try:
        if kind == "aslimit":
            report = ex.run_as_limit(args.beta, args.thetas, args.ns, args.replicas, args.seed,
                                     threads=args.threads)
        elif kind == "ldpslope":
            x = args.x_threshold
            if x is None:
                x = ex.threshold_for_rate(args.beta, args.theta, args.target_rate)
            t0 = time.perf_counter()
            est = ex.run_ldp_slope(args.beta, args.theta, x, args.ns, args.replicas, args.seed,
                                   threads=args.threads)
            report = ex.slope_report(est, args.seed, (time.perf_counter() - t0) * 1e3)
        elif kind == "sphconsist":
            report = ex.run_spherical_consistency(args.beta, args.theta, args.ns, args.samples,
                                                  args.seed, threads=args.threads)
        else:
            report = ex.run_continuity(args.beta, args.theta, args.n, args.deltas, args.seed,
                                       kappa=args.kappa)
    except ex.InfeasibleExperiment as err:
        print(f"refused: {err}", file=sys.stderr)
        return 2
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "cells.csv").write_text(report.to_csv())
    summary = report.summary()
    (out / "summary").write_text(summary)
    sys.stdout.write(summary)
    return 0 if report.all_passed else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out-dir", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="rank1-ldp", parents=[common],
                                     description="Top eigenvalue of rank-one deformed GOE/GUE.")
    sub = parser.add_subparsers(dest="command", required=True)

    def beta_arg(p):
        p.add_argument("--beta", type=int, choices=(1, 2), required=True)

    rate = sub.add_parser("rate", parents=[common], help="rate functions F and K")
    beta_arg(rate)
    rate.add_argument("--theta", type=float, required=True)
    where = rate.add_mutually_exclusive_group(required=True)
    where.add_argument("--x", type=float)
    where.add_argument("--x-grid", type=_grid, metavar="START:STOP:STEP")
    rate.add_argument("--out", help="CSV path (default stdout)")
    rate.set_defaults(func=cmd_rate)

    sph = sub.add_parser("spherical", parents=[common], help="rank-one spherical integral")
    beta_arg(sph)
    sph.add_argument("--theta", type=float, required=True)
    sph.add_argument("--spectrum", help="file of 'location [weight]' lines")
    sph.add_argument("--mode", choices=("finite", "limit", "oracle"), default="finite")
    sph.add_argument("--samples", type=int, default=10 ** 6)
    sph.add_argument("--x", type=float, help="top eigenvalue for --mode limit")
    sph.set_defaults(func=cmd_spherical)

    smp = sub.add_parser("sample", parents=[common], help="sample deformed ensembles")
    beta_arg(smp)
    smp.add_argument("--theta", type=float, required=True)
    smp.add_argument("--n", type=int, required=True)
    smp.add_argument("--replicas", type=int, default=1)
    smp.add_argument("--out", help="CSV path (default stdout)")
    smp.set_defaults(func=cmd_sample)

    exp = sub.add_parser("experiment", parents=[common], help="run a reproducible experiment")
    exp.add_argument("--kind", choices=("aslimit", "ldpslope", "sphconsist", "continuity"),
                     required=True)
    exp.add_argument("--beta", type=int, choices=(1, 2), default=2)
    exp.add_argument("--theta", type=float, default=2.0)
    exp.add_argument("--thetas", type=_floats, default=[0.25 * k for k in range(1, 9)])
    exp.add_argument("--ns", type=_ints, default=None)
    exp.add_argument("--n", type=int, default=200)
    exp.add_argument("--replicas", type=int, default=None)
    exp.add_argument("--samples", type=int, default=10 ** 6)
    exp.add_argument("--x-threshold", type=float)
    exp.add_argument("--target-rate", type=float, default=0.02)
    exp.add_argument("--deltas", type=_floats, default=[0.2, 0.1, 0.05, 0.025])
    exp.add_argument("--kappa", type=float, default=0.25)
    exp.set_defaults(func=cmd_experiment)
    return parser


_KIND_DEFAULTS = {
    "aslimit": dict(ns=[400], replicas=200),
    "ldpslope": dict(ns=[50, 100, 200], replicas=50_000),
    "sphconsist": dict(ns=[10, 20, 50]),
    "continuity": {},
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    for name, default in (("seed", 0), ("threads", 1), ("out_dir", ".")):
        if not hasattr(args, name):
            setattr(args, name, default)
    if args.command == "experiment":
        for key, val in _KIND_DEFAULTS[args.kind].items():
            if getattr(args, key) is None:
                setattr(args, key, val)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
