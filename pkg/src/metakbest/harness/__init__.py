"""Experiment orchestration: configuration, sweeps, training runs and reports."""

from .config import ExperimentConfig, load as load_config, parse as parse_config
from .report import ComplexityRow, report_complexity
from .sweep import BerRecord, build_plan, run_sweep, snr_at_ber, wilson_interval, write_ber_csv
from .training import (
    CoefficientBank, load_bank, load_selectors, run_oracle_gen, run_train_coeffs, run_train_selector,
)

__all__ = [
    "BerRecord", "CoefficientBank", "ComplexityRow", "ExperimentConfig", "build_plan", "load_bank",
    "load_config", "load_selectors", "parse_config", "report_complexity", "run_oracle_gen", "run_sweep",
    "run_train_coeffs", "run_train_selector", "snr_at_ber", "wilson_interval", "write_ber_csv",
]
