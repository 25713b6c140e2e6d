"""Command-line entry point.

Exit codes: 0 success, 2 configuration or missing model, 3 budget exceeded,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from ..errors import BudgetExceeded, ConfigInvalid, ModelMissing, NonFinite, Singular
from ..modem import gray_table_rows, qam
from . import config as config_mod
from .report import format_table, report_complexity, write_complexity_csv
from .sweep import read_ber_csv, run_sweep, write_ber_csv
from .training import run_oracle_gen, run_train_coeffs, run_train_selector

log = logging.getLogger("metakbest")

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_NUMERIC = 0, 2, 3, 4


def _config(args) -> config_mod.ExperimentConfig:
    overrides = {"seed": args.seed, "workers": args.workers, "out": args.out}
    if args.config is None:
        return config_mod.ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})
    return config_mod.load(args.config, **overrides)


def cmd_sweep(cfg) -> None:
    records = run_sweep(cfg)
    path = write_ber_csv(records, Path(cfg.out) / "ber.csv")
    for r in records:
        log.info("%-20s %6.2f dB  BER %.3e  (%d/%d)", r.detector, r.snr_db, r.ber, r.errors, r.bits)
    print(path)


def cmd_oracle_gen(cfg) -> None:
    for p in run_oracle_gen(cfg):
        print(p)


def cmd_train_coeffs(cfg) -> None:
    print(run_train_coeffs(cfg))


def cmd_train_selector(cfg) -> None:
    print(run_train_selector(cfg))


def cmd_report(cfg) -> None:
    records = read_ber_csv(Path(cfg.out) / "ber.csv")
    rows = report_complexity(records, cfg.nt, cfg.order)
    path = write_complexity_csv(rows, Path(cfg.out) / "complexity.csv")
    print(format_table(rows))
    print(path)


def cmd_dump_gray_table(cfg) -> None:
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["index", "label", "re", "im"])
    for i, label, re, im in gray_table_rows(qam(cfg.order)):
        w.writerow([i, label, repr(re), repr(im)])


COMMANDS = {
    "sweep": (cmd_sweep, "Monte-Carlo BER sweep; writes ber.csv"),
    "oracle-gen": (cmd_oracle_gen, "rank profiles and K targets; writes ranks.csv and targets.csv"),
    "train-coeffs": (cmd_train_coeffs, "meta-train the optimizers and fit the width curve per training SNR"),
    "train-selector": (cmd_train_selector, "train the per-antenna selector networks"),
    "report": (cmd_report, "complexity table from ber.csv; writes complexity.csv"),
    "dump-gray-table": (cmd_dump_gray_table, "print the constellation label table as CSV"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metakbest", description="Adaptive K-best MIMO detection experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="experiment config file (defaults apply without one)")
        p.add_argument("--seed", type=int, help="override the config seed (u64)")
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument("--out", help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigInvalid("seed must be an unsigned 64-bit integer")
        cfg = _config(args)
        COMMANDS[args.command][0](cfg)
    except (ConfigInvalid, ModelMissing) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (NonFinite, Singular, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK
