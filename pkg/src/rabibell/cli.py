"""Command line entry point.

Examples::

    rabibell run --preset fig2 --out fig2.csv
    rabibell run --preset fig4 --threads 4 --format jsonl
    rabibell design --gamma1 2 --delta 1 --m-max 40
    rabibell analyze --bell all

Exit codes: 0 success, 2 configuration error, 3 Fock-cutoff convergence
failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from rabibell.analytic import BellLabel
from rabibell.config import load_config, load_preset, preset_names
from rabibell.errors import ConfigError, ConvergenceError, InvalidArgumentError, VerificationError
from rabibell.experiments import Table, run, run_analyze, run_design

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_VERIFICATION = 4


def _cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_table(table: Table, stream, fmt: str = "csv"):
    if fmt == "csv":
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_cell(v) for v in row])
    elif fmt == "jsonl":
        for row in table.rows:
            stream.write(json.dumps(dict(zip(table.columns, row))) + "\n")
    else:
        raise ConfigError(f"unknown output format {fmt!r}")


def _emit(table, args):
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_table(table, fh, args.format)
    else:
        write_table(table, sys.stdout, args.format)


def _cutoff_arg(text):
    if text == "auto":
        return "auto"
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("cutoff must be an integer or 'auto'") from None
    if value < 2:
        raise argparse.ArgumentTypeError("cutoff must be >= 2")
    return value


def _output_args(parser):
    parser.add_argument("--out", help="output file (default: stdout)")
    parser.add_argument("--format", choices=("csv", "jsonl"), default="csv")


def build_parser():
    parser = argparse.ArgumentParser(prog="rabibell", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="time evolution or frequency sweep from a config")
    src = p_run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="path to a YAML experiment config")
    src.add_argument("--preset", help="name of a bundled preset (see 'presets')")
    _output_args(p_run)
    p_run.add_argument("--frame", choices=("lab", "rotating"))
    p_run.add_argument("--cutoff", type=_cutoff_arg, help="Fock levels, or 'auto'")
    p_run.add_argument("--engine", choices=("analytic", "numeric", "both"))
    p_run.add_argument("--detuning", choices=("bare", "shifted"))
    p_run.add_argument("--threads", type=int, default=1, help="parallel sweep points")

    p_design = sub.add_parser("design", help="solve the Bell-gate coupling condition")
    p_design.add_argument("--gamma1", type=float, required=True)
    p_design.add_argument("--delta", type=float, default=1.0)
    p_design.add_argument("--n-max", type=int, default=1)
    p_design.add_argument("--m-max", type=int, default=40)
    p_design.add_argument("--gamma2-min", type=float)
    p_design.add_argument("--gamma2-max", type=float)
    p_design.add_argument("--cutoff", type=int, default=16)
    _output_args(p_design)

    p_an = sub.add_parser("analyze", help="Bell-state analyzer: evolve Bell (x) |0> by t_1")
    p_an.add_argument("--bell", default="all",
                      choices=["all"] + [b.value for b in BellLabel])
    p_an.add_argument("--gamma1", type=float, default=2.0)
    p_an.add_argument("--gamma2", type=float, default=65.0 / 32.0)
    p_an.add_argument("--delta", type=float, default=1.0)
    p_an.add_argument("--direction", choices=("forward", "backward"), default="forward")
    p_an.add_argument("--cutoff", type=int, default=16)
    _output_args(p_an)

    sub.add_parser("presets", help="list bundled presets")
    return parser


def _verified(table):
    return all(table.column("verified"))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            print("\n".join(preset_names()))
            return EXIT_OK
        if args.command == "run":
            cfg = load_config(args.config) if args.config else load_preset(args.preset)
            cfg = cfg.override(frame=args.frame, cutoff=args.cutoff,
                               engine=args.engine, detuning=args.detuning)
            _emit(run(cfg, threads=args.threads), args)
            return EXIT_OK
        if args.command == "design":
            table = run_design(args.gamma1, args.delta, args.n_max, args.m_max,
                               args.gamma2_min, args.gamma2_max, args.cutoff)
        else:
            labels = list(BellLabel) if args.bell == "all" else [args.bell]
            table = run_analyze(labels, args.gamma1, args.gamma2, args.delta,
                                args.direction, args.cutoff)
        _emit(table, args)
        if not _verified(table):
            print("verification failed: overlap below 1 - 1e-8", file=sys.stderr)
            return EXIT_VERIFICATION
        return EXIT_OK
    except (ConfigError, InvalidArgumentError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except VerificationError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    except BrokenPipeError:
        # Downstream reader (e.g. head) closed early.
        sys.stderr.close()
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
