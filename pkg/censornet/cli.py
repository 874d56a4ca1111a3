"""
Command-line subcommands. Each ``cmd_*`` function returns the process exit
code:

    0  success
    1  configuration constraint or validation error
    2  runtime or numeric error
    3  I/O error (missing, unreadable or empty file)
    4  configuration syntax error (malformed TOML)
"""

from __future__ import annotations

import argparse
import sys
import timeit
from collections.abc import Callable
from functools import wraps
from pathlib import Path

import pandas as pd
from pydantic import ValidationError

from .config import StrataConfig, parse_config
from .errors import ConfigSyntaxError, InvalidConfigError, InvalidInputError
from .montecarlo import (
    generate_metadata,
    read_records,
    realize_networks,
    replication_scenario,
    run_experiment,
    summarize,
    write_metadata,
    write_records,
    write_summary,
)
from .netgen import write_edge_list
from .oracle import format_results, run_oracles

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_IO = 3
EXIT_SYNTAX = 4


def exit_code(e: Exception) -> int:
    if isinstance(e, ConfigSyntaxError):
        return EXIT_SYNTAX
    if isinstance(e, InvalidConfigError | ValidationError):
        return EXIT_CONFIG
    if isinstance(e, OSError | pd.errors.ParserError):
        return EXIT_IO
    return EXIT_RUNTIME


def _reports_errors(func: Callable[..., int]) -> Callable[..., int]:
    "Turns raised errors into an exit code and a message on standard error"

    @wraps(func)
    def wrapper(*args, **kwargs) -> int:
        try:
            return func(*args, **kwargs)
        except Exception as e:
            print(f"censornet: error: {e}", file=sys.stderr)
            return exit_code(e)

    return wrapper


def progress_printer(start_time: float) -> Callable[[int, int], None]:
    "Progress callback printing one line to standard error per 5% completed"
    last = 0

    def report(done: int, total: int):
        nonlocal last
        step = 20 * done // total
        if step > last:
            last = step
            elapsed = timeit.default_timer() - start_time
            print(
                f"{done}/{total} replications ({5 * step}%) after "
                f"{elapsed:.2f} seconds",
                file=sys.stderr,
            )

    return report


def metadata_path(records_path: Path) -> Path:
    return records_path.with_name(records_path.name + ".toml")


@_reports_errors
def cmd_run(
    config_path: str | Path,
    out_path: str | Path | None = None,
    n_jobs: int | None = None,
) -> int:
    """
    Runs the experiment in ``config_path`` and writes the records CSV (with
    its metadata sidecar) to ``out_path``, or to the configured output path.
    """
    config = parse_config(config_path)
    out = Path(out_path or config.output.records)
    start_time = timeit.default_timer()
    frame = run_experiment(
        config, n_jobs=n_jobs, progress=progress_printer(start_time)
    )

    write_records(frame, out)
    write_metadata(
        generate_metadata(out, frame, config.master_seed), metadata_path(out)
    )
    total_time = timeit.default_timer() - start_time
    print(
        f"{len(frame)} replications took {total_time:.2f} seconds, "
        f"written to {out}",
        file=sys.stderr,
    )
    return EXIT_OK


@_reports_errors
def cmd_summarize(
    records_path: str | Path,
    out_path: str | Path = "-",
    het_high: float | None = None,
) -> int:
    "Summarizes a records CSV; an ``out_path`` of ``-`` writes to standard output"
    strata = StrataConfig() if het_high is None else StrataConfig(het_high=het_high)
    try:
        records = read_records(records_path)
    except InvalidInputError as e:
        print(f"censornet: error: {e}", file=sys.stderr)
        return EXIT_IO
    summary = summarize(records, strata)
    write_summary(summary, out_path)
    return EXIT_OK


def cmd_oracle() -> int:
    "Runs the self-check suite and prints a pass/fail table"
    results = run_oracles()
    print(format_results(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_RUNTIME


@_reports_errors
def cmd_network(
    config_path: str | Path, replication: int, out_dir: str | Path = "."
) -> int:
    """
    Regenerates replication ``replication`` of an experiment and writes its
    true and censored networks as edge lists.
    """
    config = parse_config(config_path)
    if not 0 <= replication < config.replications:
        raise InvalidConfigError(
            f"Replication {replication} is outside 0..{config.replications - 1}"
        )
    s = replication_scenario(config, replication)
    _, w, omega, x = realize_networks(s)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    true_path = out_dir / f"replication-{replication}-true.edges"
    censored_path = out_dir / f"replication-{replication}-censored.edges"
    write_edge_list(w, omega, true_path)
    write_edge_list(x, omega, censored_path, censored=s.scheme.label)
    print(f"wrote {true_path} and {censored_path}", file=sys.stderr)
    return EXIT_OK


def run_main():
    parser = argparse.ArgumentParser(
        description="Run a censoring experiment and write per-replication records",
        prog="censornet run",
    )
    parser.add_argument("--config", required=True, help="Experiment TOML file")
    parser.add_argument(
        "--out", help="Records CSV to write; defaults to [output] records"
    )
    parser.add_argument(
        "-j",
        "--jobs",
        type=int,
        help="Worker processes; defaults to CENSORNET_THREADS or 1",
    )
    args = parser.parse_args()
    sys.exit(cmd_run(args.config, args.out, n_jobs=args.jobs))


def summarize_main():
    parser = argparse.ArgumentParser(
        description="Summarize a records CSV by scheme and scenario band",
        prog="censornet summarize",
    )
    parser.add_argument("--records", required=True, help="Records CSV")
    parser.add_argument(
        "--out", default="-", help="Summary JSON to write, '-' for standard output"
    )
    parser.add_argument(
        "--het-high",
        type=float,
        default=1.0,
        help="Lowest sigma_h counted as high heterogeneity",
    )
    args = parser.parse_args()
    sys.exit(cmd_summarize(args.records, args.out, args.het_high))


def oracle_main():
    argparse.ArgumentParser(
        description="Run the built-in self-check suite", prog="censornet oracle"
    ).parse_args()
    sys.exit(cmd_oracle())


def network_main():
    parser = argparse.ArgumentParser(
        description="Export the true and censored networks of one replication",
        prog="censornet network",
    )
    parser.add_argument("--config", required=True, help="Experiment TOML file")
    parser.add_argument(
        "--replication", type=int, default=0, help="Replication index"
    )
    parser.add_argument("--out", default=".", help="Output folder")
    args = parser.parse_args()
    sys.exit(cmd_network(args.config, args.replication, args.out))
