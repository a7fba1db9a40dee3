"""Command line interface: ``greysim <subcommand> ...``.

Exit codes: 0 success, 1 a selected check failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import density, fbm, sde, young
from .config import ConfigError, ExperimentConfig, load_config
from .report import reports_from_json, reports_to_json
from .rng import RngStream
from .sampler import sample_ggbm_paths
from .specfun import DomainError, GreyParams, m_wright_cdf, m_wright_pdf, m_wright_tail, mittag_leffler
from .verify import SUITES, verify_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get("GREYSIM_SEED")
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"GREYSIM_SEED must be an integer, got {raw!r}") from None


def _json_arg(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        raise argparse.ArgumentTypeError(f"not a number or JSON value: {text!r}") from None


def _common(p: argparse.ArgumentParser, params: bool = True) -> None:
    p.add_argument("--config", help="INI config file; flags override its values")
    p.add_argument("--seed", type=int, help="base seed (default: $GREYSIM_SEED or 0)")
    p.add_argument("--streams", type=int, help="number of independent RNG streams")
    if params:
        p.add_argument("--alpha", type=float)
        p.add_argument("--beta", type=float)


def _field_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--field", choices=sorted(sde.BUILTIN_FIELDS), help="built-in vector field")
    p.add_argument("--sigma", type=_json_arg, help="diffusion matrix (number or JSON nested list)")
    p.add_argument("--b", type=_json_arg, help="constant drift (constant field)")
    p.add_argument("--a", type=float, help="field coefficient a")
    p.add_argument("--c", type=float, help="field coefficient c")
    p.add_argument("--mu", type=float, help="geometric drift")
    p.add_argument("--radius", type=float, help="geometric cutoff radius")
    p.add_argument("--x0", type=_json_arg, help="initial point (number or JSON list)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="greysim", description="Generalized grey Brownian motion toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("specfun", help="evaluate Mittag-Leffler / M-Wright functions")
    p.add_argument("action", choices=["eval"])
    p.add_argument("function", choices=["ml", "mwright", "mwright-cdf", "mwright-tail"])
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("x", type=float, nargs="+")

    p = sub.add_parser("sample", help="sample ggBm paths to CSV")
    _common(p)
    p.add_argument("--t", type=float, help="horizon T")
    p.add_argument("--steps", type=int)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--paths", type=int)
    p.add_argument("--method", choices=["circulant", "cholesky"])
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--y-out", help="write the mixing draws Y to this file, one per line")

    p = sub.add_parser("fbm", help="sample fBm paths to CSV")
    _common(p, params=False)
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--t", type=float, help="horizon T")
    p.add_argument("--steps", type=int)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--paths", type=int)
    p.add_argument("--method", choices=["circulant", "cholesky"])
    p.add_argument("--out")

    p = sub.add_parser("young", help="Young-integral self test")
    p.add_argument("action", nargs="?", choices=["selftest"], default="selftest")
    _common(p, params=False)

    p = sub.add_parser("solve", help="solve the grey-noise SDE by Euler, paths to CSV")
    _common(p)
    _field_flags(p)
    p.add_argument("--t", type=float, help="horizon T")
    p.add_argument("--steps", type=int)
    p.add_argument("--paths", type=int)
    p.add_argument("--method", choices=["circulant", "cholesky"])
    p.add_argument("--out")

    p = sub.add_parser("density", help="density of X_t for constant fields (mixture or KDE) to CSV")
    _common(p)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--t", type=float, help="time t")
    p.add_argument("--estimator", choices=["mixture", "kde"], default="mixture")
    p.add_argument("--samples", type=int, help="KDE sample count")
    p.add_argument("--bandwidth", type=float)
    p.add_argument("--zmin", type=float, default=-5.0)
    p.add_argument("--zmax", type=float, default=5.0)
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--out")

    p = sub.add_parser("verify", help="run verification suites, print JSON RunReports")
    _common(p)
    p.add_argument("--suite", help=f"comma list from: all, {', '.join(SUITES)}")
    p.add_argument("--samples", type=int)
    p.add_argument("--paths", type=int)
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.add_argument("--details", action="store_true", help="include diagnostic details in the JSON")
    p.add_argument("--omit-timing", action="store_true", help="write runtime_ms as 0 (byte-stable output)")
    p.add_argument("--quiet", action="store_true", help="no per-check lines on stderr")

    p = sub.add_parser("report", help="summarize a JSON report file")
    p.add_argument("path")
    return ap


def _config(args, require_params: bool) -> ExperimentConfig:
    base = load_config(args.config) if getattr(args, "config", None) else None
    if require_params and base is None and (args.alpha is None or args.beta is None):
        missing = [n for n in ("alpha", "beta") if getattr(args, n) is None]
        raise UsageError(f"missing --{' and --'.join(missing)}")
    cfg = base or ExperimentConfig()
    seed = args.seed if args.seed is not None else (None if base else _default_seed())
    changes = {
        "alpha": getattr(args, "alpha", None),
        "beta": getattr(args, "beta", None),
        "seed": seed,
        "streams": getattr(args, "streams", None),
        "horizon": getattr(args, "t", None),
        "steps": getattr(args, "steps", None),
        "paths": getattr(args, "paths", None),
        "samples": getattr(args, "samples", None),
        "method": getattr(args, "method", None),
    }
    changes["report_json" if args.command == "verify" else "paths_csv"] = getattr(args, "out", None)
    if getattr(args, "suite", None):
        changes["suite"] = [s.strip() for s in args.suite.split(",") if s.strip()]
    if getattr(args, "field", None) is not None:
        changes["field_name"] = args.field
        changes["field_params"] = {}
    fp = dict(changes.get("field_params", cfg.field_params))
    for k in ("sigma", "b", "a", "c", "mu", "radius"):
        v = getattr(args, k, None)
        if v is not None:
            fp[k] = v
    changes["field_params"] = fp
    if getattr(args, "x0", None) is not None:
        changes["x0"] = list(np.atleast_1d(args.x0).astype(float))
    return cfg.replace(**changes)


def _make_field(cfg: ExperimentConfig) -> sde.VectorFieldSet:
    kw = dict(cfg.field_params)
    if cfg.field_name != "geometric" and "sigma" in kw:
        kw["sigma"] = np.atleast_2d(np.asarray(kw["sigma"], dtype=float))
    try:
        return sde.make_field(cfg.field_name, **kw)
    except TypeError as exc:
        raise UsageError(f"bad parameters for field {cfg.field_name!r}: {exc}") from None


def _write(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_paths(values: np.ndarray, grid, path: str | None) -> None:
    fbm.write_paths_csv(path if path else sys.stdout, grid, values)


def cmd_specfun(args) -> int:
    x = np.asarray(args.x)
    if args.function == "ml":
        vals = mittag_leffler(args.beta, x)
    elif args.function == "mwright":
        vals = m_wright_pdf(args.beta, x)
    elif args.function == "mwright-cdf":
        vals = m_wright_cdf(args.beta, x)
    else:
        vals = m_wright_tail(args.beta, x)
    for xi, vi in zip(x, np.atleast_1d(vals)):
        print(f"{xi:.17g},{vi:.17g}")
    return EXIT_OK


def cmd_sample(args) -> int:
    cfg = _config(args, require_params=True)
    grid = fbm.TimeGrid(cfg.horizon, cfg.steps)
    paths, y = sample_ggbm_paths(GreyParams(cfg.alpha, cfg.beta), grid, args.d, RngStream(cfg.seed), cfg.paths, cfg.method)
    _write_paths(paths, grid, cfg.paths_csv)
    if args.y_out:
        np.savetxt(args.y_out, y, fmt="%.17g")
    return EXIT_OK


def cmd_fbm(args) -> int:
    cfg = _config(args, require_params=False)
    grid = fbm.TimeGrid(cfg.horizon, cfg.steps)
    paths = fbm.generate_fbm(args.hurst, grid, args.d, RngStream(cfg.seed), size=cfg.paths, method=cfg.method)
    _write_paths(paths, grid, cfg.paths_csv)
    return EXIT_OK


def cmd_young(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    ok = True
    for name, observed, tol, passed in young.selftest(seed):
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: error={observed:.6g} tol={tol:g}")
        ok &= passed
    return EXIT_OK if ok else EXIT_FAIL


def cmd_solve(args) -> int:
    cfg = _config(args, require_params=False)
    fields = _make_field(cfg)
    x0 = np.broadcast_to(np.asarray(cfg.x0, dtype=float), (fields.n,))
    grid = fbm.TimeGrid(cfg.horizon, cfg.steps)
    xs, _ = sde.solve_grey_sde(fields, x0, GreyParams(cfg.alpha, cfg.beta), grid, RngStream(cfg.seed), cfg.paths, cfg.method)
    _write_paths(xs, grid, cfg.paths_csv)
    return EXIT_OK


def cmd_density(args) -> int:
    cfg = _config(args, require_params=True)
    params = GreyParams(cfg.alpha, cfg.beta)
    z = np.linspace(args.zmin, args.zmax, args.points)
    if args.estimator == "mixture":
        vals = density.mixture_density_constant_fields(params, [[args.sigma]], None, None, cfg.horizon, z)
        est = density.DensityEstimate(z, vals, "MIXTURE_QUADRATURE")
    else:
        n = args.samples or 100_000
        x = density.sample_constant_field_marginal(params, [[args.sigma]], None, None, cfg.horizon, RngStream(cfg.seed), n)
        est = density.kde_estimate(x[:, 0], z, args.bandwidth)
    if cfg.paths_csv:
        est.to_csv(cfg.paths_csv)
    else:
        print("z,p")
        for zi, p in zip(z, est.values):
            print(f"{zi:.17g},{p:.17g}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config(args, require_params=True)
    reports = verify_suite(cfg)
    if args.omit_timing:
        for r in reports:
            r.runtime_ms = 0
    _write(reports_to_json(reports, include_details=args.details), cfg.report_json)
    if not args.quiet:
        for r in reports:
            print(r.line(), file=sys.stderr)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_report(args) -> int:
    try:
        with open(args.path) as fh:
            reports = reports_from_json(fh.read())
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read report {args.path}: {exc}") from None
    for r in reports:
        print(r.line())
    failed = sum(not r.passed for r in reports)
    print(f"{len(reports) - failed}/{len(reports)} passed")
    return EXIT_OK if failed == 0 else EXIT_FAIL


COMMANDS = {
    "specfun": cmd_specfun,
    "sample": cmd_sample,
    "fbm": cmd_fbm,
    "young": cmd_young,
    "solve": cmd_solve,
    "density": cmd_density,
    "verify": cmd_verify,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, DomainError) as exc:
        print(f"greysim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # invalid parameter values reaching the library (e.g. suite names, grid sizes)
        print(f"greysim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
