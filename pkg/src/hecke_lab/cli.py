"""Command-line interface.

Exit codes: 0 success, 2 invalid input or resource cap exceeded, 3 too few
determined grid points to fit an exponent.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .config import (
    SCHEMA_VERSION,
    ConfigError,
    RunConfig,
    build_config,
    load_config_file,
    parse_number,
    preset,
    resolve_threads,
)
from .covering import covering_svg, make_report, needed_heights_blocked, orbit_points, sample_arrays
from .exponent import FitError, estimate_kappa, fit_kappa, synthetic_epsilons, synthetic_grid
from .hecke_enum import (
    DEFAULT_CAP,
    CapExceededError,
    Partition,
    coset_count,
    iter_cosets,
    partition_buckets,
    partition_of,
    partitions,
    rep_record,
)
from .spherical import (
    SPHERICAL_BOUND,
    check_spherical_bound,
    format_complex,
    hecke_eigenvalue_lambda,
    is_dominant,
    parse_complex,
    spherical_transform_h,
    symmetric_oracle,
    theta,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_FIT = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _complex_json(z: complex) -> dict:
    return {"re": z.real, "im": z.imag}


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True)


def _envelope(kind: str, config: dict, body: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "kind": kind, "config": config, **body}


class OutputSet:
    """Files written by one command; removed again if the command fails."""

    def __init__(self, outdir: str | None):
        self.outdir = Path(outdir) if outdir else None
        self.written: list[Path] = []

    def write(self, name: str, text: str) -> Path | None:
        if self.outdir is None:
            return None
        self.outdir.mkdir(parents=True, exist_ok=True)
        path = self.outdir / name
        self.written.append(path)
        path.write_text(text, encoding="utf-8")
        return path

    def discard(self) -> None:
        for path in self.written:
            try:
                path.unlink()
            except FileNotFoundError:
                pass


# hecke

def _hecke_config(args) -> dict:
    return {"n": args.n, "p": args.p, "l": args.l, "cap": args.cap}


def cmd_hecke_enum(args, out) -> int:
    if coset_count(args.n, args.p, args.l) > args.cap:
        raise CapExceededError(coset_count(args.n, args.p, args.l), args.cap)
    counts: dict[Partition, int] = {}
    for rep in iter_cosets(args.n, args.p, args.l, args.cap):
        part = partition_of(rep)
        counts[part] = counts.get(part, 0) + 1
        out.write(_dumps(rep_record(rep.matrix, args.p, args.l, part)) + "\n")
    if args.partition_buckets:
        out.write(_dumps(_buckets_record(args, counts)) + "\n")
    return EXIT_OK


def _buckets_record(args, counts: dict[Partition, int]) -> dict:
    return _envelope(
        "partition-buckets",
        _hecke_config(args),
        {"buckets": [{"partition": list(q.parts), "count": c} for q, c in sorted(counts.items(), key=lambda kv: kv[0].parts)]},
    )


def cmd_hecke_buckets(args, out) -> int:
    counts = partition_buckets(args.n, args.p, args.l, args.cap)
    out.write(_dumps(_buckets_record(args, counts)) + "\n")
    return EXIT_OK


# spherical

def _parse_mu(text: str, n: int) -> tuple[complex, ...]:
    try:
        mu = tuple(parse_complex(t) for t in text.split(","))
    except ValueError as e:
        raise CliError(str(e)) from None
    if len(mu) != n:
        raise CliError(f"--mu has {len(mu)} entries, expected n = {n}")
    if not all(math.isfinite(z.real) and math.isfinite(z.imag) for z in mu):
        raise CliError("--mu entries must be finite")
    return mu


def cmd_spherical_eval(args, out) -> int:
    mu = _parse_mu(args.mu, args.n)
    if coset_count(args.n, args.p, args.l) > args.cap:
        raise CapExceededError(coset_count(args.n, args.p, args.l), args.cap)
    h = spherical_transform_h(args.n, args.p, args.l, mu)
    lam = hecke_eigenvalue_lambda(args.n, args.p, args.l, mu)
    oracle = symmetric_oracle(args.n, args.p, args.l, mu)
    delta = abs(lam - oracle) / max(abs(oracle), 1e-300)
    config = {"n": args.n, "p": args.p, "l": args.l, "mu": [_complex_json(z) for z in mu]}
    body = {
        "n": args.n,
        "p": args.p,
        "l": args.l,
        "mu": [format_complex(z) for z in mu],
        "h_tilde": _complex_json(h),
        "lambda": _complex_json(lam),
        "theta": theta(mu),
        "oracle": _complex_json(oracle),
        "oracle_delta": delta,
    }
    out.write(_dumps(_envelope("spherical-eval", config, body)) + "\n")
    return EXIT_OK


def _parse_partitions(args) -> list[tuple[int, ...]]:
    if args.partition:
        try:
            parts = [tuple(int(x) for x in q.split(",")) for q in args.partition.split(";")]
        except ValueError:
            raise CliError(f"malformed --partition {args.partition!r}") from None
        for q in parts:
            if len(q) != args.n or any(a > b for a, b in zip(q, q[1:])) or min(q) < 0:
                raise CliError(f"partition {q} must be {args.n} weakly increasing non-negative integers")
        return parts
    return [q.parts for w in range(args.max_weight + 1) for q in partitions(args.n, w)]


def cmd_spherical_check(args, out) -> int:
    mu = _parse_mu(args.mu, args.n)
    if not is_dominant(mu):
        raise CliError("--mu must be dominant (real parts non-increasing)")
    if not 0 < args.delta < 1:
        raise CliError("--delta must lie in (0, 1)")
    parts = _parse_partitions(args)
    heaviest = max(sum(q) for q in parts)
    if coset_count(args.n, args.p, heaviest) > args.cap:
        raise CapExceededError(coset_count(args.n, args.p, heaviest), args.cap)
    report = check_spherical_bound(args.n, args.p, parts, mu, args.delta, args.bound)
    config = {"n": args.n, "p": args.p, "delta": args.delta, "bound": args.bound}
    out.write(_dumps(_envelope("spherical-check", config, report.to_dict())) + "\n")
    return EXIT_OK


# cover

def _run_config(args, preset_name: str | None = None) -> RunConfig:
    base: dict = {}
    name = preset_name or getattr(args, "preset", None)
    if name:
        base.update(preset(name))
    if getattr(args, "config", None):
        base.update(load_config_file(args.config))
    overrides = {
        "n": args.n, "p": args.p, "samples": args.samples, "seed": args.seed,
        "target": getattr(args, "target", None), "outdir": args.outdir,
        "k_min": getattr(args, "k_min", None), "k_max": getattr(args, "k_max", None),
        "x0": getattr(args, "x0", None), "metric_scale": getattr(args, "metric_scale", None),
    }
    if args.cap is not None:
        overrides["cap"] = args.cap
    if getattr(args, "epsilons", None):
        overrides["epsilons"] = tuple(_eps_list(args.epsilons))
    try:
        return build_config(base, **overrides)
    except TypeError as e:
        raise CliError(str(e)) from None


def _eps_list(text: str) -> list[float]:
    try:
        return [parse_number(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliError(f"malformed epsilon list {text!r}") from None


def cmd_cover(args, out, preset_name: str | None = None) -> int:
    cfg = _run_config(args, preset_name)
    threads = resolve_threads(args.threads)
    x0 = cfg.basepoint()
    sampler = cfg.sampler()
    cloud = orbit_points(x0, cfg.n, cfg.p, cfg.k_max, cfg.cap)
    xs = sample_arrays(cfg.n, sampler.region, sampler.samples, sampler.seed)
    reports = []
    for eps in cfg.epsilons:
        need = needed_heights_blocked(cloud, xs, eps / cfg.metric_scale, threads)
        for k in range(cfg.k_min, cfg.k_max + 1):
            size = int(np.count_nonzero(cloud.heights <= k))
            reports.append(make_report(cfg.n, cfg.p, k, eps, sampler, need, size).to_dict())
    doc = _dumps(_envelope("coverage", cfg.to_dict(), {"reports": reports}))
    files = OutputSet(cfg.outdir if args.write else None)
    try:
        files.write("coverage.json", doc + "\n")
        if args.csv:
            files.write("orbit_cloud.csv", cloud.to_csv())
        if args.svg:
            if cfg.n != 2:
                raise CliError("--svg requires n = 2")
            svg = covering_svg(cloud, cfg.epsilons[0] / cfg.metric_scale, y_max=cfg.y_max)
            if files.outdir is None:
                raise CliError("--svg needs an output directory (drop --no-write)")
            files.write("covering.svg", svg)
    except BaseException:
        files.discard()
        raise
    out.write(doc + "\n")
    return EXIT_OK


# kappa

def cmd_kappa_fit(args, out) -> int:
    cfg = _run_config(args)
    threads = resolve_threads(args.threads)
    if len(cfg.epsilons) < 3:
        raise CliError("the exponent fit needs at least 3 epsilons", EXIT_FIT)
    grid, fit = estimate_kappa(cfg.basepoint(), cfg.n, cfg.p, cfg.epsilons, cfg.target, cfg.sampler(),
                               cfg.cap, threads, cfg.x0, cfg.k_max, cfg.metric_scale)
    rows = [
        f"eps={g.epsilon:.6g} k_min={'undetermined' if g.k_min is None else g.k_min} "
        f"fraction={g.achieved_fraction:.4f} k_half={g.k_half} lower_bound_ok={g.lower_bound_ok}"
        for g in grid
    ]
    if fit is None:
        out.write("\n".join(rows) + "\n")
        raise CliError("fewer than 3 determined grid points; no fit", EXIT_FIT)
    doc = _dumps(_envelope("kappa-fit", cfg.to_dict(), {"fit": fit.to_dict()}))
    files = OutputSet(cfg.outdir if args.write else None)
    try:
        files.write("kappa.json", doc + "\n")
        files.write("kappa.csv", fit.to_csv())
    except BaseException:
        files.discard()
        raise
    out.write("\n".join(rows) + "\n")
    out.write(f"kappa_hat = {fit.kappa_hat:.4f} +/- {fit.slope_stderr:.4f}\n")
    if args.json:
        out.write(doc + "\n")
    return EXIT_OK


def cmd_kappa_selftest(args, out) -> int:
    if args.points < 3:
        raise CliError("--points must be at least 3", EXIT_FIT)
    epsilons = synthetic_epsilons(args.n, args.p, args.points)
    fit = fit_kappa(synthetic_grid(args.n, args.p, epsilons, args.c), args.n, args.p, "synthetic")
    ok = abs(fit.kappa_hat - args.c) <= 0.1 * max(1.0, args.c)
    config = {"n": args.n, "p": args.p, "c": args.c, "points": args.points}
    out.write(_dumps(_envelope("kappa-selftest", config, {"fit": fit.to_dict(), "passed": ok})) + "\n")
    return EXIT_OK if ok else EXIT_FIT


# parser

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $HECKE_LAB_THREADS or 1)")
    p.add_argument("--cap", type=int, default=None, help="maximum number of cosets to enumerate")


def _run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", default=None, help="named configuration: figure1, kappa-n2-p3, kappa-n3-p2")
    p.add_argument("--config", default=None, help="flat key = value config file")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--epsilons", default=None, help="comma-separated radii, e.g. 3^-2,3^-3")
    p.add_argument("--k-min", dest="k_min", type=int, default=None)
    p.add_argument("--k-max", dest="k_max", type=int, default=None)
    p.add_argument("--x0", default=None, help="basepoint: a+bi for n=2, matrix rows a,b;c,d otherwise")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--metric-scale", dest="metric_scale", type=float, default=None)
    p.add_argument("--outdir", default=None)
    p.add_argument("--no-write", dest="write", action="store_false", help="print only, write no files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hecke-lab", description="Hecke orbit covering experiments and their spectral checks.")
    parser.add_argument("--version", action="version", version=__version__)
    groups = parser.add_subparsers(dest="group", required=True)

    hecke = groups.add_parser("hecke", help="coset enumeration").add_subparsers(dest="action", required=True)
    for name, fn in (("enum", cmd_hecke_enum), ("buckets", cmd_hecke_buckets)):
        p = hecke.add_parser(name)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--p", type=int, required=True)
        p.add_argument("--l", type=int, required=True)
        if name == "enum":
            p.add_argument("--partition-buckets", action="store_true", help="append per-partition counts")
        _common(p)
        p.set_defaults(func=fn)

    sph = groups.add_parser("spherical", help="spherical transforms").add_subparsers(dest="action", required=True)
    p = sph.add_parser("eval", help="transform and eigenvalue beside the symmetric-function oracle")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--mu", required=True, help="comma-separated complex numbers, e.g. 0.5+1i,-0.5-1i")
    _common(p)
    p.set_defaults(func=cmd_spherical_eval)
    p = sph.add_parser("check", help="spherical function bound over partitions")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--mu", required=True)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--bound", type=float, default=SPHERICAL_BOUND)
    p.add_argument("--partition", default=None, help="semicolon-separated partitions, e.g. 0,1;0,2")
    p.add_argument("--max-weight", dest="max_weight", type=int, default=4)
    _common(p)
    p.set_defaults(func=cmd_spherical_check)

    cover = groups.add_parser("cover", help="coverage experiments").add_subparsers(dest="action", required=True)
    for name in ("run", "figure1"):
        p = cover.add_parser(name)
        _run_flags(p)
        p.add_argument("--svg", action="store_true", help="write the half-plane figure (n = 2)")
        p.add_argument("--no-svg", dest="svg", action="store_false", help="skip the figure (figure1 writes it by default)")
        p.add_argument("--csv", action="store_true", help="write the orbit cloud as CSV")
        _common(p)
        if name == "figure1":
            p.set_defaults(func=lambda a, o: cmd_cover(a, o, "figure1"), svg=True)
        else:
            p.set_defaults(func=cmd_cover)

    kappa = groups.add_parser("kappa", help="exponent estimation").add_subparsers(dest="action", required=True)
    p = kappa.add_parser("fit")
    _run_flags(p)
    p.add_argument("--target", type=float, default=None, help="coverage target (default 0.9)")
    p.add_argument("--json", action="store_true", help="also print the fit JSON")
    _common(p)
    p.set_defaults(func=cmd_kappa_fit)
    p = kappa.add_parser("selftest", help="fit a synthetic grid with known slope")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--points", type=int, default=10)
    _common(p)
    p.set_defaults(func=cmd_kappa_selftest)
    return parser


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    if getattr(args, "cap", None) is None and args.group in ("hecke", "spherical"):
        args.cap = DEFAULT_CAP
    try:
        return args.func(args, out)
    except CapExceededError as e:
        err.write(f"error: resource cap exceeded: {e.count} cosets > cap {e.cap}\n")
        return EXIT_INPUT
    except CliError as e:
        err.write(f"error: {e}\n")
        return e.code
    except (ConfigError, FitError, ValueError) as e:
        err.write(f"error: {e}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
