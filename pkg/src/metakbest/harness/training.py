"""Oracle generation, coefficient training and selector training runs."""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import modelio
from ..channel import rng_stream
from ..detect import KSchedule
from ..errors import ConfigInvalid
from ..fitcoef import (
    CoefficientModel, Coefficients, FusionWeights, GradPredState, LSTMParams, TaskSet,
    meta_train_recurrent, synthetic_tasks, train_coefficients,
)
from ..modem import qam
from ..neuralsel import SelectorHyper, SelectorSet, TrainingConfig, train
from ..oracle import KTargetSet, sample_ranks, targets_from_ranks
from .config import ExperimentConfig

CSV_SCHEMA = 1
# stream namespaces under the experiment seed; the sweep uses 0
ORACLE_STREAM = 1000
META_STREAM = 2


def _oracle_job(args):
    nt, nr, order, snr, n, seed, stream = args
    return sample_ranks(nt, nr, qam(order), snr, n, seed, stream)


@dataclass(frozen=True)
class OraclePoint:
    snr_db: float
    train: KTargetSet
    val: KTargetSet


def oracle_targets(cfg: ExperimentConfig) -> list[OraclePoint]:
    """Train and validation targets for every training SNR.

    Point ``i`` draws its training profiles from stream ``1000 + 2i`` and its
    validation profiles from ``1001 + 2i``; the two never share a frame.
    """
    jobs = []
    for i, snr in enumerate(cfg.training_snrs):
        jobs.append((cfg.nt, cfg.nr, cfg.order, snr, cfg.oracle_samples, cfg.seed, ORACLE_STREAM + 2 * i))
        jobs.append((cfg.nt, cfg.nr, cfg.order, snr, cfg.val_samples, cfg.seed, ORACLE_STREAM + 2 * i + 1))
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as ex:
            ranks = list(ex.map(_oracle_job, jobs))
    else:
        ranks = [_oracle_job(j) for j in jobs]
    out = []
    for i, snr in enumerate(cfg.training_snrs):
        tr = targets_from_ranks(ranks[2 * i], cfg.order, cfg.quantile, snr)
        va = targets_from_ranks(ranks[2 * i + 1], cfg.order, cfg.quantile, snr)
        out.append(OraclePoint(snr, tr, va))
    return out


def _comment(f, kind: str) -> None:
    f.write(f"# metakbest {kind} schema {CSV_SCHEMA}\n")


def write_oracle_csvs(points: list[OraclePoint], out_dir) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    nt = len(points[0].train.widths)
    layers = [f"K{k}" for k in range(1, nt + 1)]
    tpath, rpath = out_dir / "targets.csv", out_dir / "ranks.csv"
    with open(tpath, "w", newline="") as f:
        _comment(f, "targets")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["snr_db", "split", "n_samples", "quantile", *layers])
        for p in points:
            for split, t in (("train", p.train), ("val", p.val)):
                w.writerow([repr(p.snr_db), split, t.n_samples, repr(t.quantile), *t.widths])
    with open(rpath, "w", newline="") as f:
        _comment(f, "ranks")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["snr_db", "split", "sample", *[f"r{k}" for k in range(1, nt + 1)]])
        for p in points:
            for split, t in (("train", p.train), ("val", p.val)):
                for i, row in enumerate(t.ranks):
                    w.writerow([repr(p.snr_db), split, i, *(int(v) for v in row)])
    return tpath, rpath


def run_oracle_gen(cfg: ExperimentConfig) -> tuple[Path, Path]:
    return write_oracle_csvs(oracle_targets(cfg), cfg.out)


# --------------------------------------------------------------------------
# coefficients


@dataclass
class CoefficientBank:
    """One trained coefficient model per training SNR, sharing the meta-trained LSTM."""

    nt: int
    order: int
    quantile: float
    lstm: LSTMParams
    models: dict  # snr_db -> CoefficientModel
    meta_history: list

    def model_for(self, snr_db: float) -> CoefficientModel:
        """The model trained at ``snr_db``, else the one at the nearest training SNR."""
        snrs = sorted(self.models)
        best = min(snrs, key=lambda s: (abs(s - snr_db), s))
        return self.models[best]

    def schedule(self, snr_db: float) -> KSchedule:
        return self.model_for(snr_db).schedule(self.nt, self.order)


def meta_tasks(cfg: ExperimentConfig, points: list[OraclePoint]) -> TaskSet:
    """Synthetic rounded power-law tasks plus the oracle training targets."""
    syn = synthetic_tasks(rng_stream(cfg.seed, META_STREAM, 0), cfg.meta_tasks, cfg.nt, cfg.order)
    real = TaskSet.from_targets([p.train for p in points])
    return TaskSet(np.vstack([syn.targets, real.targets]), np.vstack([syn.weights, real.weights]))


def train_bank(cfg: ExperimentConfig, points: list[OraclePoint]) -> CoefficientBank:
    tasks = meta_tasks(cfg, points)
    init = LSTMParams.rmsprop_start(cfg.lstm_hidden)
    meta = meta_train_recurrent(tasks, cfg.unroll, cfg.meta_steps, rng_stream(cfg.seed, META_STREAM, 1), init)
    gp = GradPredState(step=cfg.gradpred_step, decay=cfg.gradpred_decay)
    models = {p.snr_db: train_coefficients(p.train, p.val, cfg.fit_steps, meta.params, gradpred=gp) for p in points}
    return CoefficientBank(cfg.nt, cfg.order, cfg.quantile, meta.params, models, meta.history)


def _coeff(v) -> np.ndarray:
    return np.asarray(v.as_array(), dtype=float)


def save_bank(bank: CoefficientBank, path) -> None:
    fields = {
        "nt": np.int64(bank.nt),
        "order": np.int64(bank.order),
        "quantile": np.float64(bank.quantile),
        "lstm.W": bank.lstm.W,
        "lstm.bias": bank.lstm.bias,
        "lstm.w_out": bank.lstm.w_out,
        "lstm.w_norm": bank.lstm.w_norm,
        "lstm.gain": np.float64(bank.lstm.gain),
        "meta.history": np.asarray(bank.meta_history, dtype=float),
        "points": np.asarray(sorted(bank.models), dtype=float),
    }
    for i, snr in enumerate(sorted(bank.models)):
        m = bank.models[snr]
        fields[f"p{i}.Y1"] = _coeff(m.Y1)
        fields[f"p{i}.Y2"] = _coeff(m.Y2)
        fields[f"p{i}.fusion"] = np.array([m.fusion.w1, m.fusion.w2])
        fields[f"p{i}.Y"] = _coeff(m.Y)
        fields[f"p{i}.gradpred"] = np.array([m.gradpred.step, m.gradpred.decay])
        fields[f"p{i}.schedule"] = np.asarray(m.schedule(bank.nt, bank.order).widths, dtype=np.int64)
    modelio.save(path, "coefficients", fields)


def load_bank(path) -> CoefficientBank:
    f = modelio.load(path, "coefficients")
    lstm = LSTMParams(f["lstm.W"], f["lstm.bias"], f["lstm.w_out"], f["lstm.w_norm"],
                      float(f["lstm.gain"]))
    models = {}
    for i, snr in enumerate(np.atleast_1d(f["points"])):
        step, decay = f[f"p{i}.gradpred"]
        models[float(snr)] = CoefficientModel(
            Coefficients.from_array(f[f"p{i}.Y1"]),
            Coefficients.from_array(f[f"p{i}.Y2"]),
            FusionWeights(*(float(v) for v in f[f"p{i}.fusion"])),
            Coefficients.from_array(f[f"p{i}.Y"]),
            lstm,
            GradPredState(step=float(step), decay=float(decay)),
        )
    return CoefficientBank(int(f["nt"]), int(f["order"]), float(f["quantile"]), lstm, models,
                           list(np.atleast_1d(f["meta.history"])))


def run_train_coeffs(cfg: ExperimentConfig) -> Path:
    points = oracle_targets(cfg)
    write_oracle_csvs(points, cfg.out)
    bank = train_bank(cfg, points)
    path = cfg.resolve(cfg.coeff_model)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_bank(bank, path)
    return path


# --------------------------------------------------------------------------
# selectors


def selector_hyper(cfg: ExperimentConfig) -> SelectorHyper:
    return SelectorHyper(cfg.selector_layers, cfg.selector_kernel, cfg.selector_width, cfg.selector_channels)


def selector_training(cfg: ExperimentConfig) -> TrainingConfig:
    return TrainingConfig(batches=cfg.selector_batches, batch_size=cfg.selector_batch_size,
                          lr=cfg.selector_lr, seed=cfg.seed)


def save_selectors(sel: SelectorSet, path) -> None:
    fields = {
        "nt": np.int64(sel.nt),
        "nr": np.int64(sel.nr),
        "snr_db": np.float64(sel.snr_db),
        "hyper": np.array([sel.hyper.layers, sel.hyper.kernel, sel.hyper.width, sel.hyper.channels], dtype=np.int64),
        "train_loss": np.asarray(sel.train_loss, dtype=float),
        "val_loss": np.asarray(sel.val_loss, dtype=float).reshape(-1, 2),
    }
    for i, net in enumerate(sel.nets):
        for name, arr in net.items():
            fields[f"net{i}.{name}"] = np.asarray(arr, dtype=float)
    modelio.save(path, "selectors", fields)


def load_selectors(path) -> SelectorSet:
    f = modelio.load(path, "selectors")
    nt = int(f["nt"])
    hyper = SelectorHyper(*(int(v) for v in f["hyper"]))
    nets = []
    for i in range(nt):
        prefix = f"net{i}."
        nets.append({k[len(prefix):]: np.asarray(v, dtype=float) for k, v in f.items() if k.startswith(prefix)})
    if any(not n for n in nets):
        raise ConfigInvalid("selector model is missing networks")
    val = [(int(b), float(v)) for b, v in np.asarray(f["val_loss"]).reshape(-1, 2)]
    return SelectorSet(nets, hyper, nt, int(f["nr"]), float(f["snr_db"]),
                       list(np.atleast_1d(f["train_loss"])), val)


def run_train_selector(cfg: ExperimentConfig) -> Path:
    sel = train(cfg.nt, cfg.nr, qam(cfg.order), cfg.selector_snr_db, selector_training(cfg), selector_hyper(cfg))
    path = cfg.resolve(cfg.selector_model)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_selectors(sel, path)
    return path


def schedule_from_widths(name: str, nt: int, order: int) -> KSchedule:
    """Schedule for a ``kbest-K`` or ``schedule-K1-...`` detector name."""
    parts = [int(t) for t in name.split("-")[1:]]
    if name.startswith("kbest-"):
        return KSchedule.fixed(parts[0], nt, order)
    if len(parts) != nt:
        raise ConfigInvalid(f"{name}: need {nt} widths")
    sched = KSchedule(tuple(parts))
    try:
        sched.validate(order)
    except ValueError as e:
        raise ConfigInvalid(f"{name}: {e}") from e
    return sched
