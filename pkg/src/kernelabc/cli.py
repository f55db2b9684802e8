"""Command-line interface.

Subcommands: `run` (one experiment), `sweep` (observation-count RMSE
protocol), `rho-protocol` (draw/top-k cross-correlation protocol), and
`bandwidth` (standalone MISE selector).  Exit codes: 0 success, 2 config
error, 3 empty posterior.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .engines import GenerationBudgetError, SmcSchedule
from .evaluation import observation_sweep, top_k_rho_protocol
from .harness import (
    ConfigError,
    _fmt,
    _observed_data,
    load_config,
    load_series_csv,
    run_experiment,
)
from .kernels import select_bandwidth_mise

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EMPTY = 3


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--out", dest="output_path", help="output directory")
    parser.add_argument("--experiment", choices=("toy", "blowfly"))
    parser.add_argument("--method")
    parser.add_argument("--n-observations", type=int, dest="n_observations")
    parser.add_argument("--n-sims", type=int, dest="n_sims")
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--epsilon-quantile", type=float, dest="epsilon_quantile")
    parser.add_argument("--epsilon-schedule", dest="epsilon_schedule",
                        help="comma-separated decreasing thresholds")
    parser.add_argument("--n-particles", type=int, dest="n_particles")
    parser.add_argument("--perturb-variance", type=float, dest="perturb_variance")
    parser.add_argument("--data-path", dest="data_path")
    parser.add_argument("--threads", type=int, dest="n_threads")
    parser.add_argument("--methods", help="comma-separated method list (sweep)")
    parser.add_argument("--sweep-start", type=int, dest="sweep_start")
    parser.add_argument("--sweep-stop", type=int, dest="sweep_stop")
    parser.add_argument("--sweep-step", type=int, dest="sweep_step")
    parser.add_argument("--n-draws", type=int, dest="n_draws")
    parser.add_argument("--top-k", type=int, dest="top_k")


def _config_from_args(args: argparse.Namespace):
    overrides = {}
    for name in ("seed", "output_path", "experiment", "method", "n_observations",
                 "n_sims", "epsilon", "epsilon_quantile", "n_particles",
                 "perturb_variance", "data_path", "n_threads", "sweep_start",
                 "sweep_stop", "sweep_step", "n_draws", "top_k"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "epsilon_schedule", None) is not None:
        overrides["epsilon_schedule"] = tuple(
            float(v) for v in args.epsilon_schedule.split(",") if v.strip())
    if getattr(args, "methods", None) is not None:
        overrides["methods"] = tuple(
            m.strip() for m in args.methods.split(",") if m.strip())
    return load_config(args.config, overrides)


def _cmd_run(args) -> int:
    config = _config_from_args(args)
    config.validate("run")
    try:
        report = run_experiment(config)
    except GenerationBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    print(f"report written to {Path(config.output_path) / 'report.json'}")
    for name, value in sorted(report.metrics.items()):
        print(f"{name} = {value}")
    if report.diagnostics.get("empty_posterior"):
        print("warning: no accepted particles", file=sys.stderr)
        return EXIT_EMPTY
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = _config_from_args(args)
    config.validate("sweep")
    counts = range(config.sweep_start, config.sweep_stop + 1, config.sweep_step)
    schedule = config.schedule()
    result = observation_sweep(list(config.methods), config.seed, counts=counts,
                               n_sims=config.n_sims, schedule=schedule,
                               n_threads=config.n_threads)
    out = Path(config.output_path)
    out.mkdir(parents=True, exist_ok=True)
    rows = ["observation_count,method,rmse"]
    for i, count in enumerate(result.observation_counts):
        for method in config.methods:
            rows.append(f"{count},{method},{_fmt(result.rmse[method][i])}")
    (out / "sweep.csv").write_text("\n".join(rows) + "\n")
    for method, (mean, std) in result.summary.items():
        print(f"{method}: rmse mean = {mean:.4f}, std = {std:.4f}")
    if result.failures:
        print(f"{len(result.failures)} cell(s) failed; see sweep.csv", file=sys.stderr)
    print(f"sweep table written to {out / 'sweep.csv'}")
    return EXIT_OK


def _cmd_rho(args) -> int:
    config = _config_from_args(args)
    config.validate("rho")
    observed, model, source = _observed_data(config)
    result = top_k_rho_protocol(observed, model, config.method,
                                config.n_draws, config.top_k, config.seed,
                                n_sims=config.n_sims, schedule=config.schedule(),
                                n_threads=config.n_threads)
    out = Path(config.output_path)
    out.mkdir(parents=True, exist_ok=True)
    rows = ["draw_index,rho,kept_flag"]
    for index, rho, kept in result.rho_all:
        rho_text = _fmt(rho) if np.isfinite(rho) else "nan"
        rows.append(f"{index},{rho_text},{int(kept)}")
    (out / "rho.csv").write_text("\n".join(rows) + "\n")
    print(f"observed data: {source}")
    print(f"median rho (top {config.top_k} of {config.n_draws}) = {result.median:.4f}")
    print(f"quartiles = ({result.quartiles[0]:.4f}, {result.quartiles[1]:.4f})")
    if result.shortfall:
        print("warning: fewer valid runs than requested top-k", file=sys.stderr)
    print(f"rho table written to {out / 'rho.csv'}")
    return EXIT_OK


def _cmd_bandwidth(args) -> int:
    series = load_series_csv(args.data)
    bandwidth = select_bandwidth_mise(series)
    print(f"mise bandwidth = {_fmt(bandwidth)}")
    if args.out:
        Path(args.out).write_text(_fmt(bandwidth) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kernelabc",
        description="Likelihood-free inference with kernel-embedding distances.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    _add_config_flags(run)
    run.set_defaults(handler=_cmd_run)

    sweep = sub.add_parser("sweep", help="observation-count RMSE sweep (toy)")
    _add_config_flags(sweep)
    sweep.set_defaults(handler=_cmd_sweep)

    rho = sub.add_parser("rho-protocol", help="draw/top-k cross-correlation protocol")
    _add_config_flags(rho)
    rho.set_defaults(handler=_cmd_rho)

    bandwidth = sub.add_parser("bandwidth", help="standalone MISE bandwidth selector")
    bandwidth.add_argument("--data", required=True, help="single-column CSV")
    bandwidth.add_argument("--out", help="write the bandwidth to this file")
    bandwidth.set_defaults(handler=_cmd_bandwidth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
