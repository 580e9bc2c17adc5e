"""
Command Line Interface

Batch entry point, `python -m colored_ggm <command>`:
    simulate    - write data.csv and truth.json for a simulation design
    fit         - fit one hyperparameter tuple, write estimate.json
    tune        - BIC tuning, write estimate.json and trace.csv
    replicate   - Monte Carlo study, write replicates.csv and summary.csv
                  (plus summary.pdf with --pdf)
    eval        - score estimate.json against truth.json, write metrics.json
    export-dot  - DOT text of an estimate (or truth) colored graph
    serve       - run the HTTP service

Parameters come from an optional TOML/JSON file (--config) whose keys
mirror RunConfig; command-line flags override file values. Outputs go to
the --out directory (default: current directory).

Exit codes: 0 success, 2 input error, 3 nonconvergence, 4 tuning failure.
"""

import argparse
import json
import logging
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from pydantic import ValidationError

from .config import settings
from .dot_export import export_dot
from .errors import InputError, NonConvergenceError, TuningError
from .estimation.metrics import evaluate
from .estimation.models import gram
from .estimation.optimizer import fit
from .estimation.replicate import ReplicateRunner
from .estimation.selection import bic_c, tune
from .estimation.simulate import simulate
from .io import (
    estimate_document,
    metrics_document,
    read_data_csv,
    read_estimate,
    read_truth,
    truth_document,
    write_data_csv,
    write_json,
    write_table_csv,
)
from .models import RunConfig, TuneGrid
from .pdf_generator import pdf_generator

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NONCONVERGENCE = 3
EXIT_TUNING = 4

TRACE_COLUMNS = ["lambda1", "lambda2", "lambda3", "tau", "loglik", "df", "bic", "converged", "selected", "error"]
SIMULATION_FLAGS = ("family", "p", "q", "n", "seed")
HYPER_FLAGS = ("lambda1", "lambda2", "lambda3", "tau")


def load_config_file(path: Path) -> Dict[str, Any]:
    """
    Read a TOML (.toml) or JSON config file into a dict.

    Raises:
        InputError: If the file is missing or cannot be parsed
    """
    path = Path(path)
    try:
        if path.suffix.lower() == ".toml":
            with open(path, "rb") as handle:
                return tomllib.load(handle)
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise InputError(f"cannot read config file {path}: {e}") from e
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise InputError(f"cannot parse config file {path}: {e}") from e


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge the config file (if any) with command-line overrides and validate."""
    values: Dict[str, Any] = load_config_file(args.config) if args.config else {}
    for name in ("data", "truth", "estimate", "out", "reps", "threads", "host", "port"):
        if getattr(args, name, None) is not None:
            values[name] = getattr(args, name)
    if args.pdf:
        values["pdf"] = True
    if args.no_center:
        values["center"] = False

    simulation = dict(values.get("simulation") or {})
    simulation.update({name: getattr(args, name) for name in SIMULATION_FLAGS if getattr(args, name) is not None})
    if simulation:
        values["simulation"] = simulation

    hyper = dict(values.get("hyper") or {})
    hyper.update({name: getattr(args, name) for name in HYPER_FLAGS if getattr(args, name) is not None})
    values["hyper"] = hyper

    if args.mode is not None:
        if values.get("grid") is None:
            raise InputError("--mode needs a [grid] section in the config file")
        values["grid"] = {**values["grid"], "mode": args.mode}
    return RunConfig.model_validate(values)


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out) if config.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require(value, flag: str):
    if value is None:
        raise InputError(f"missing required input: {flag}")
    return value


def _grid(config: RunConfig) -> TuneGrid:
    """Configured grid, or the singleton grid of the configured hyperparameters."""
    if config.grid is not None:
        return config.grid
    hyper = config.hyper
    return TuneGrid(lambda1=[hyper.lambda1], lambda2=[hyper.lambda2], lambda3=[hyper.lambda3], tau=[hyper.tau])


def cmd_simulate(config: RunConfig) -> int:
    """Write data.csv (header x1..xp) and truth.json for the configured design."""
    spec = _require(config.simulation, "--family/--p/--n (or [simulation])")
    sim = simulate(spec)
    out = _out_dir(config)
    write_data_csv(out / "data.csv", sim.data)
    write_json(out / "truth.json", truth_document(spec, sim.theta, sim.graph))
    logger.info(f"Wrote {sim.data.n} x {sim.data.p} data set to {out}")
    return EXIT_OK


def cmd_fit(config: RunConfig) -> int:
    """Fit with explicit hyperparameters; exit 3 if the fit is flagged (estimate still written)."""
    data = read_data_csv(_require(config.data, "--data"), center=config.center)
    report = fit(data, config.hyper)
    estimate = bic_c(report, gram(data), config.hyper)
    out = _out_dir(config)
    write_json(out / "estimate.json", estimate_document(estimate, report, data, config.hyper))
    if not report.converged:
        logger.warning(f"Fit did not converge: {'; '.join(report.messages)}")
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def cmd_tune(config: RunConfig) -> int:
    """Tune by BIC; writes the winning estimate and one trace row per fitted tuple."""
    data = read_data_csv(_require(config.data, "--data"), center=config.center)
    result = tune(data, _grid(config), config.hyper, workers=config.threads)
    out = _out_dir(config)
    write_json(out / "estimate.json", estimate_document(result.estimate, result.report, data, result.hyper))
    write_table_csv(out / "trace.csv", [record.model_dump() for record in result.trace], TRACE_COLUMNS)
    if not result.report.converged:
        logger.warning(f"Selected fit did not converge: {'; '.join(result.report.messages)}")
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def cmd_replicate(config: RunConfig) -> int:
    """Run replicates 1..R; failed replicates are counted, not fatal."""
    spec = _require(config.simulation, "--family/--p/--n (or [simulation])")
    grid = _grid(config)
    study = ReplicateRunner(spec, grid, config.hyper, workers=config.threads).run(config.reps)
    out = _out_dir(config)
    write_table_csv(out / "replicates.csv", [outcome.to_row() for outcome in study.outcomes])
    write_table_csv(out / "summary.csv", [study.summary_row()])
    if config.pdf:
        (out / "summary.pdf").write_bytes(pdf_generator.generate_report(study, grid).getvalue())
    if not study.completed:
        logger.error(f"All {config.reps} replicates failed")
        return EXIT_TUNING
    return EXIT_OK


def cmd_eval(config: RunConfig) -> int:
    """Score an estimate against a truth; writes metrics.json."""
    document, params, _ = read_estimate(_require(config.estimate, "--estimate"))
    _, theta, graph = read_truth(_require(config.truth, "--truth"))
    report = evaluate(params, theta, graph, document.hyper.eps_zero, document.hyper.eps_merge)
    write_json(_out_dir(config) / "metrics.json", metrics_document(report))
    return EXIT_OK


def cmd_export_dot(config: RunConfig) -> int:
    """DOT text of the estimate's colored graph (or the truth's, with --truth only)."""
    if config.estimate is not None:
        document, _, graph = read_estimate(config.estimate)
        variables = document.variables
    else:
        _, _, graph = read_truth(_require(config.truth, "--estimate"))
        variables = None
    text = export_dot(graph, variables)
    if config.out is not None:
        (_out_dir(config) / "graph.dot").write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_serve(config: RunConfig) -> int:
    """Run the HTTP service with uvicorn."""
    import uvicorn
    uvicorn.run("colored_ggm.main:app", host=config.host, port=config.port, reload=settings.debug)
    return EXIT_OK


COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "tune": cmd_tune,
    "replicate": cmd_replicate,
    "eval": cmd_eval,
    "export-dot": cmd_export_dot,
    "serve": cmd_serve,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=Path, help='TOML or JSON run configuration')
    common.add_argument('--out', type=Path, help='Output directory')
    common.add_argument('--data', type=Path, help='Input data CSV')
    common.add_argument('--truth', type=Path, help='Truth JSON')
    common.add_argument('--estimate', type=Path, help='Estimate JSON')
    common.add_argument('--family', choices=['star', 'cycle', 'grid'], help='Simulation family')
    common.add_argument('--p', type=int, help='Number of variables (grid: a perfect square)')
    common.add_argument('--q', type=int, help='Grid side length')
    common.add_argument('--n', type=int, help='Sample size')
    common.add_argument('--seed', type=int, help='Base seed')
    common.add_argument('--lambda1', type=float, help='Diagonal fusion weight')
    common.add_argument('--lambda2', type=float, help='Sparsity weight')
    common.add_argument('--lambda3', type=float, help='Off-diagonal fusion weight')
    common.add_argument('--tau', type=float, help='Truncation threshold')
    common.add_argument('--mode', choices=['full', 'sequential'], help='Search mode of the config grid')
    common.add_argument('--reps', type=int, help='Number of replicates')
    common.add_argument('--threads', type=int, help='Worker budget')
    common.add_argument('--pdf', action='store_true', help='Also write summary.pdf (replicate)')
    common.add_argument('--no-center', action='store_true', help='Do not center data columns')
    common.add_argument('--host', help='HTTP host (serve)')
    common.add_argument('--port', type=int, help='HTTP port (serve)')
    common.add_argument('--verbose', action='store_true', help='Log progress at INFO level')

    parser = argparse.ArgumentParser(
        prog="colored_ggm",
        description="Colored graphical Gaussian models by truncated-L1 composite likelihood",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, command in COMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=command.__doc__.splitlines()[0])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one subcommand and map errors to exit codes."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    logging.basicConfig(level=logging.INFO if (settings.debug or args.verbose) else logging.WARNING)
    try:
        config = build_config(args)
        return COMMANDS[args.command](config)
    except TuningError as e:
        logger.error(f"Tuning failed: {e}")
        return EXIT_TUNING
    except NonConvergenceError as e:
        logger.error(f"Solver did not converge: {e}")
        return EXIT_NONCONVERGENCE
    except (InputError, ValidationError, ValueError) as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_INPUT
