"""Experiment configuration: an INI-style ``key = value`` file with one
``[experiment]`` section and an explicit schema version.

Example::

    [experiment]
    schema = 1
    nt = 4
    nr = 4
    order = 16
    snr_db = 10, 12, 14, 16
    detectors = ml, adaptive, mmse, zf, kbest-16
    min_errors = 500
    max_frames = 20000
    seed = 1

Lists are comma separated. Relative model paths resolve against ``out``.
Detector names:

``ml``, ``zf``, ``mmse``
    exhaustive and linear baselines
``kbest-K``
    fixed width ``K`` at every layer (clamped to the tree)
``schedule-K1-K2-...``
    an explicit per-layer schedule, root first
``adaptive``
    the schedule of the trained coefficient model for the SNR point
``neural``
    the adaptive schedule with selector-restricted candidate sets
"""

from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass
from pathlib import Path

from ..errors import ConfigInvalid
from ..modem import SUPPORTED_ORDERS

SCHEMA_VERSION = 1
SECTION = "experiment"
_DETECTOR = re.compile(r"^(ml|zf|mmse|adaptive|neural|kbest-[1-9][0-9]*|schedule(-[1-9][0-9]*)+)$")


@dataclass(frozen=True)
class ExperimentConfig:
    nt: int = 4
    nr: int = 4
    order: int = 16
    snr_db: tuple[float, ...] = (10.0, 12.0, 14.0)
    detectors: tuple[str, ...] = ("ml", "adaptive", "mmse", "zf")
    min_errors: int = 500  # early stop once this many bit errors are counted
    max_frames: int = 100_000  # trial budget per (detector, SNR)
    chunk: int = 256  # frames dispatched per round; independent of workers
    seed: int = 0
    workers: int = 1
    out: str = "results"
    # oracle targets and coefficient training
    quantile: float = 0.99
    oracle_samples: int = 500
    val_samples: int = 200
    train_snr_db: tuple[float, ...] = ()  # empty: one coefficient set per sweep SNR
    fit_steps: int = 2000
    gradpred_step: float = 2e-3
    gradpred_decay: float = 0.9
    lstm_hidden: int = 8
    meta_tasks: int = 256
    meta_steps: int = 200
    unroll: int = 50
    coeff_model: str = "coefficients.model"
    # selector networks
    selector_snr_db: float = 12.0
    selector_batches: int = 1000
    selector_batch_size: int = 64
    selector_lr: float = 0.01
    selector_layers: int = 4
    selector_kernel: int = 3
    selector_width: int = 32
    selector_channels: int = 8
    selector_model: str = "selector.model"

    def __post_init__(self):
        validate(self)

    @property
    def training_snrs(self) -> tuple[float, ...]:
        return self.train_snr_db or self.snr_db

    def resolve(self, name: str) -> Path:
        p = Path(name)
        return p if p.is_absolute() else Path(self.out) / p

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def validate(cfg: ExperimentConfig) -> None:
    if not cfg.nr >= cfg.nt >= 1:
        raise ConfigInvalid(f"need nr >= nt >= 1, got nt={cfg.nt}, nr={cfg.nr}")
    if cfg.order not in SUPPORTED_ORDERS:
        raise ConfigInvalid(f"order must be one of {SUPPORTED_ORDERS}, got {cfg.order}")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigInvalid("seed must be an unsigned 64-bit integer")
    if not cfg.snr_db:
        raise ConfigInvalid("snr_db grid is empty")
    if cfg.max_frames < 1 or cfg.min_errors < 1 or cfg.chunk < 1 or cfg.workers < 1:
        raise ConfigInvalid("max_frames, min_errors, chunk and workers must be >= 1")
    if not cfg.detectors:
        raise ConfigInvalid("no detectors listed")
    for d in cfg.detectors:
        if not _DETECTOR.match(d):
            raise ConfigInvalid(f"unknown detector {d!r}")
    if len(set(cfg.detectors)) != len(cfg.detectors):
        raise ConfigInvalid("duplicate detector names")
    if not 0 < cfg.quantile <= 1:
        raise ConfigInvalid("quantile must lie in (0, 1]")
    if min(cfg.oracle_samples, cfg.val_samples, cfg.fit_steps, cfg.unroll, cfg.lstm_hidden,
           cfg.meta_tasks, cfg.selector_batches, cfg.selector_batch_size) < 1:
        raise ConfigInvalid("sample, step and batch counts must be >= 1")
    if cfg.meta_steps < 0:
        raise ConfigInvalid("meta_steps must be >= 0")
    if not (cfg.gradpred_step > 0 and 0 <= cfg.gradpred_decay < 1 and cfg.selector_lr > 0):
        raise ConfigInvalid("invalid optimizer settings")


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _convert(name: str, raw: str):
    kind = _FIELDS[name].type
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "str":
            return raw
        items = [t.strip() for t in raw.split(",") if t.strip()]
        if kind == "tuple[float, ...]":
            return tuple(float(t) for t in items)
        return tuple(items)
    except ValueError as e:
        raise ConfigInvalid(f"bad value for {name}: {raw!r}") from e


def parse(text: str, **overrides) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigInvalid(str(e)) from e
    if not cp.has_section(SECTION):
        raise ConfigInvalid(f"missing [{SECTION}] section")
    sec = dict(cp.items(SECTION))
    schema = sec.pop("schema", None)
    if schema is None:
        raise ConfigInvalid("missing schema version")
    if schema.strip() != str(SCHEMA_VERSION):
        raise ConfigInvalid(f"unsupported schema {schema!r}; this build reads {SCHEMA_VERSION}")
    unknown = sorted(set(sec) - set(_FIELDS))
    if unknown:
        raise ConfigInvalid(f"unknown keys: {', '.join(unknown)}")
    values = {k: _convert(k, v) for k, v in sec.items()}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def load(path, **overrides) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigInvalid(f"config file not found: {path}")
    return parse(path.read_text(), **overrides)


def dumps(cfg: ExperimentConfig) -> str:
    lines = [f"[{SECTION}]", f"schema = {SCHEMA_VERSION}"]
    for name in _FIELDS:
        v = getattr(cfg, name)
        if isinstance(v, tuple):
            v = ", ".join(repr(t) if isinstance(t, float) else str(t) for t in v)
        lines.append(f"{name} = {v}")
    return "\n".join(lines) + "\n"
