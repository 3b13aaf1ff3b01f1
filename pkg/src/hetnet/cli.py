"""Command-line front end.

Subcommands ``coverage``, ``sweep``, ``simulate`` and ``optimize`` print CSV
to stdout or ``--out``.  When writing to a file, a JSON manifest describing
the run is written next to it as ``<out>.manifest.json``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 every optimization row infeasible.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import itertools
import json
import math
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .analytic import ANALYTIC_SPEC, ValidityError, coverage, potential_throughput
from .config import (PRESETS, ConfigError, apply_overrides, config_snapshot, load_config,
                     load_preset, parse_los_spec)
from .model import (ENERGY_SCENARIOS, NetworkConfig, PowerModel, Scheme, apply_energy, area_power,
                    per_km2_to_per_m2, per_m2_to_per_km2)
from .montecarlo import (ConfigurationError, SimSpec, simulate, thread_count, wald,
                         write_trial_dump)
from .numerics import QuadratureError
from .optimize import DensityGrid, OptProblem, ProblemKind, sweep as opt_sweep

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INFEASIBLE = 0, 2, 3, 4

_OVERRIDE = re.compile(r"^--tier(\d+)\.([a-z_]+)(?:=(.*))?$")


def fmt(x: float) -> str:
    """Stable float text: 12 significant digits, ``nan``/``inf`` spelled out."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".12g")


# -- argument handling --------------------------------------------------------


def _split_overrides(argv):
    """Pull ``--tierN.field VALUE`` pairs out of argv (argparse cannot declare them)."""
    rest, overrides = [], {}
    it = iter(argv)
    for tok in it:
        m = _OVERRIDE.match(tok)
        if not m:
            rest.append(tok)
            continue
        value = m.group(3)
        if value is None:
            value = next(it, None)
            if value is None:
                raise ConfigError(f"{tok}: missing value")
        overrides[(int(m.group(1)) - 1, m.group(2))] = value
    return rest, overrides


def parse_axis(text: str, name: str) -> np.ndarray:
    """``V`` for one value or ``LO:HI:N`` for N log-spaced values."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            values = np.array([float(parts[0])])
        elif len(parts) == 3:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
            if lo <= 0 or hi < lo or n < 1:
                raise ValueError
            values = np.logspace(math.log10(lo), math.log10(hi), n) if n > 1 else np.array([lo])
        else:
            raise ValueError
    except ValueError:
        raise ConfigError(f"{name}: expected VALUE or LO:HI:N with 0 < LO <= HI, got {text!r}") from None
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise ConfigError(f"{name}: values must be finite and >= 0")
    return values


def parse_linear_range(text: str, name: str) -> np.ndarray:
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        if hi < lo or n < 1 or len(parts) != 3:
            raise ValueError
        return np.linspace(lo, hi, n) if n > 1 else np.array([lo])
    except (ValueError, IndexError):
        raise ConfigError(f"{name}: expected VALUE or LO:HI:N, got {text!r}") from None


def _common(p: argparse.ArgumentParser, schemes=("MARP", "MIRP")):
    src = p.add_argument_group("scenario")
    src.add_argument("--config", help="TOML scenario file")
    src.add_argument("--preset", choices=PRESETS, help="built-in scenario (needs --los)")
    src.add_argument("--los", help="LoS model: exp:KAPPA, linear:D1, two-piece:D0,D1 or nlos")
    src.add_argument("--energy", choices=sorted(ENERGY_SCENARIOS), help="energy coefficients")
    src.add_argument("--power", choices=[m.value for m in PowerModel], help="transmit power model")
    src.add_argument("--threshold-db", type=float, help="SINR threshold for every tier")
    src.add_argument("--noise-dbm", type=float, help="noise power")
    p.add_argument("--scheme", type=str.upper, choices=schemes, default="MARP")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
    p.add_argument("--threads", type=int, help="worker threads (default: $HETNET_THREADS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetnet",
        description="Coverage, throughput and energy efficiency of LoS/NLoS HetNets. "
                    "Tier fields can be overridden with --tierN.FIELD VALUE "
                    "(density in BS/km^2).")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coverage", help="analytic metrics for one scenario")
    _common(p)

    p = sub.add_parser("sweep", help="analytic metrics over a density axis or grid")
    _common(p)
    p.add_argument("--lambda1", help="tier-1 density axis in BS/km^2 (VALUE or LO:HI:N)")
    p.add_argument("--lambda2", help="tier-2 density axis in BS/km^2 (VALUE or LO:HI:N)")
    p.add_argument("--gnuplot", help="also write a gnuplot script plotting the CSV")

    p = sub.add_parser("simulate", help="Monte Carlo estimates next to analytic values")
    _common(p, schemes=("MARP", "MIRP", "BOTH"))
    p.add_argument("--lambda1", help="tier-1 density axis in BS/km^2")
    p.add_argument("--lambda2", help="tier-2 density axis in BS/km^2")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--radius", type=float, default=0.0, help="region radius in m (0: automatic)")
    p.add_argument("--ci-level", type=float, default=0.95)
    p.add_argument("--no-analytic", action="store_true", help="skip the analytic column")
    p.add_argument("--dump", help="per-trial CSV (single sweep point and scheme only)")

    p = sub.add_parser("optimize", help="OP1/OP2 density optimization (two tiers)")
    _common(p)
    p.add_argument("--kind", choices=[k.value for k in ProblemKind], required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--constraint", type=float,
                   help="P^max in W/m^2 (op1) or minimum coverage (op2)")
    g.add_argument("--range", dest="crange",
                   help="LO:HI:N constraint sweep; log-spaced for op1, linear for op2")
    p.add_argument("--grid1", default="0.1:10000:20", help="tier-1 grid in BS/km^2 (LO:HI:N)")
    p.add_argument("--grid2", default="0.1:10000:20", help="tier-2 grid in BS/km^2 (LO:HI:N)")
    p.add_argument("--refine", action="store_true", help="polish grid optimum with Nelder-Mead")
    return parser


def resolve_config(args, overrides) -> NetworkConfig:
    if (args.config is None) == (args.preset is None):
        raise ConfigError("exactly one of --config or --preset is required")
    los = parse_los_spec(args.los) if args.los else None
    power = PowerModel(args.power) if args.power else None
    if args.preset:
        cfg = load_preset(args.preset, los, energy=args.energy or "S1",
                          power_model=power or PowerModel.FIXED)
    else:
        cfg = load_config(args.config)
        if los is not None:
            cfg = dataclasses.replace(cfg, los_model=los)
        if power is not None:
            cfg = dataclasses.replace(cfg, power_model=power)
        if args.energy:
            try:
                cfg = apply_energy(cfg, args.energy)
            except ValueError as exc:
                raise ConfigError(f"--energy: {exc}") from None
    try:
        if args.threshold_db is not None:
            cfg = cfg.with_tiers(sinr_threshold_db=args.threshold_db)
        if args.noise_dbm is not None:
            cfg = dataclasses.replace(cfg, noise_dbm=args.noise_dbm)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return apply_overrides(cfg, overrides)


def _density_points(cfg, args):
    axes = []
    for k, text in enumerate((args.lambda1, args.lambda2)):
        if text is None:
            axes.append(None)
            continue
        if k >= cfg.n_tiers:
            raise ConfigError(f"--lambda{k + 1}: the scenario has {cfg.n_tiers} tier(s)")
        axes.append(parse_axis(text, f"--lambda{k + 1}"))
    base = [per_m2_to_per_km2(d) for d in cfg.densities]
    lists = [axes[k] if k < len(axes) and axes[k] is not None else [base[k]]
             for k in range(cfg.n_tiers)]
    # tier 1 varies slowest, so rows group by lambda1 for surface plots
    return [tuple(float(v) for v in combo) for combo in itertools.product(*lists)]


def _cfg_at(cfg, point_km2):
    return cfg.with_densities([per_km2_to_per_m2(d) for d in point_km2])


# -- commands -----------------------------------------------------------------


def metric_header(n_tiers):
    return (["p_cov_total"] + [f"p_cov_t{k + 1}" for k in range(n_tiers)]
            + ["p_nl", "p_l", "pt", "ee"])


def metric_row(cfg, scheme):
    cov = coverage(cfg, scheme, ANALYTIC_SPEC)
    pt = potential_throughput(cfg, cov)
    power = area_power(cfg)
    ee = pt / power if power > 0 else math.nan
    return [cov.total, *cov.per_tier, cov.nl_part, cov.l_part, pt, ee]


def _map_ordered(fn, items, threads):
    n = thread_count(threads)
    if n > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def cmd_coverage(cfg, args, writer, meta):
    writer.writerow(metric_header(cfg.n_tiers))
    writer.writerow([fmt(v) for v in metric_row(cfg, Scheme(args.scheme))])
    return EXIT_OK


def cmd_sweep(cfg, args, writer, meta):
    points = _density_points(cfg, args)
    scheme = Scheme(args.scheme)
    rows = _map_ordered(lambda p: metric_row(_cfg_at(cfg, p), scheme), points, args.threads)
    header = [f"lambda{k + 1}_per_km2" for k in range(cfg.n_tiers)] + metric_header(cfg.n_tiers)
    writer.writerow(header)
    for p, row in zip(points, rows):
        writer.writerow([fmt(v) for v in (*p, *row)])
    if args.gnuplot:
        two_d = args.lambda1 and args.lambda2 and ":" in args.lambda1 and ":" in args.lambda2
        write_gnuplot(args.gnuplot, args.out or "sweep.csv", two_d, bool(args.lambda2 and not args.lambda1))
        meta["gnuplot"] = args.gnuplot
    return EXIT_OK


def write_gnuplot(path, csv_path, two_d, x_is_lambda2):
    lines = ["set datafile separator ','", "set key autotitle columnhead",
             "set logscale x", "set ylabel 'coverage probability'"]
    if two_d:
        lines += ["set logscale y", "set xlabel 'lambda1 (BS/km^2)'",
                  "set ylabel 'lambda2 (BS/km^2)'", "set zlabel 'p_cov'",
                  f"splot '{csv_path}' using 1:2:3 with points"]
    else:
        col = 2 if x_is_lambda2 else 1
        lines += [f"set xlabel 'lambda{col} (BS/km^2)'",
                  f"plot '{csv_path}' using {col}:3 with linespoints"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


SIM_HEADER = ("scheme", "mc_mean", "mc_se", "ci_low", "ci_high", "analytic", "agree")


def cmd_simulate(cfg, args, writer, meta):
    try:
        spec = SimSpec(trials=args.trials, region_radius=args.radius, seed=args.seed,
                       ci_level=args.ci_level)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    schemes = list(Scheme) if args.scheme == "BOTH" else [Scheme(args.scheme)]
    points = _density_points(cfg, args)
    if args.dump and (len(points) != 1 or len(schemes) != 1):
        raise ConfigError("--dump needs a single sweep point and a single scheme")
    meta["sim_spec"] = dataclasses.asdict(spec)
    writer.writerow([f"lambda{k + 1}_per_km2" for k in range(cfg.n_tiers)] + list(SIM_HEADER))
    for p in points:
        point_cfg = _cfg_at(cfg, p)
        records = simulate(point_cfg, spec, threads=args.threads)
        for scheme in schemes:
            est = wald(records[scheme].success, spec.ci_level)
            analytic = math.nan if args.no_analytic else coverage(point_cfg, scheme, ANALYTIC_SPEC).total
            if spec.trials < 2 or math.isnan(analytic):
                agree = ""
            else:
                agree = fmt(abs(est.mean - analytic) <= 3.0 * est.std_error)
            writer.writerow([fmt(v) for v in p] + [scheme.value, fmt(est.mean), fmt(est.std_error),
                                                   fmt(est.ci_low), fmt(est.ci_high),
                                                   fmt(analytic), agree])
            if args.dump:
                with open(args.dump, "w", encoding="utf-8", newline="") as fh:
                    write_trial_dump(records[scheme], fh)
                meta["dump"] = args.dump
    return EXIT_OK


OPT_HEADER = ("constraint", "objective", "lambda1_per_km2", "lambda2_per_km2", "feasible")


def _grid(text, name):
    values = parse_axis(text, name)
    if values.size < 2:
        raise ConfigError(f"{name}: an optimization grid needs LO:HI:N with N >= 2")
    return DensityGrid(per_km2_to_per_m2(values[0]), per_km2_to_per_m2(values[-1]), values.size)


def cmd_optimize(cfg, args, writer, meta):
    if cfg.n_tiers != 2:
        raise ConfigError("optimize supports two-tier scenarios only")
    kind = ProblemKind(args.kind)
    if args.crange:
        values = (parse_axis(args.crange, "--range") if kind is ProblemKind.OP1
                  else parse_linear_range(args.crange, "--range"))
    else:
        values = np.array([args.constraint])
    try:
        problem = OptProblem(kind, cfg, float(values[0]),
                             (_grid(args.grid1, "--grid1"), _grid(args.grid2, "--grid2")),
                             refine=args.refine, scheme=Scheme(args.scheme))
        for v in values:  # validate every constraint before spending time
            dataclasses.replace(problem, constraint=float(v))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    results = opt_sweep(problem, [float(v) for v in values], threads=args.threads)
    writer.writerow(OPT_HEADER)
    for v, res in zip(values, results):
        lam = [per_m2_to_per_km2(d) for d in res.argmax_densities]
        writer.writerow([fmt(v), fmt(res.objective), fmt(lam[0]), fmt(lam[1]), fmt(res.feasible)])
    if not any(r.feasible for r in results):
        errors = [e.error for r in results for e in r.trace if e.error]
        if errors and all(math.isnan(r.objective) for r in results):
            raise QuadratureError(errors[0])
        return EXIT_INFEASIBLE
    return EXIT_OK


COMMANDS = {"coverage": cmd_coverage, "sweep": cmd_sweep,
            "simulate": cmd_simulate, "optimize": cmd_optimize}


# -- entry point --------------------------------------------------------------


def _manifest(args, argv, cfg, meta, text, started, elapsed):
    return {
        "command": args.command,
        "argv": list(argv),
        "version": __version__,
        "config": config_snapshot(cfg),
        "scheme": args.scheme,
        "quadrature": dataclasses.asdict(ANALYTIC_SPEC),
        **meta,
        "started_utc": started,
        "elapsed_s": round(elapsed, 3),
        "output_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
    }


def run(argv=None, stdout=None, stderr=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        rest, overrides = _split_overrides(argv)
        args = build_parser().parse_args(rest)
        cfg = resolve_config(args, overrides)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"hetnet: config error: {problem}", file=stderr)
        return EXIT_CONFIG

    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    t0 = time.perf_counter()
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    meta = {}
    try:
        code = COMMANDS[args.command](cfg, args, writer, meta)
    except (ConfigError, ConfigurationError, ValidityError) as exc:
        problems = exc.problems if isinstance(exc, ConfigError) else [str(exc)]
        for problem in problems:
            print(f"hetnet: config error: {problem}", file=stderr)
        return EXIT_CONFIG
    except QuadratureError as exc:
        print(f"hetnet: numerical error: {exc}", file=stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"hetnet: config error: {exc}", file=stderr)
        return EXIT_CONFIG

    text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        manifest_path = args.manifest or f"{args.out}.manifest.json"
    else:
        stdout.write(text)
        manifest_path = args.manifest
    if manifest_path:
        manifest = _manifest(args, argv, cfg, meta, text, started, time.perf_counter() - t0)
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")
    if code == EXIT_INFEASIBLE:
        print("hetnet: no feasible point for any constraint value", file=stderr)
    return code


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
