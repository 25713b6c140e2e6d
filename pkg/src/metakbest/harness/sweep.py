"""Monte-Carlo BER sweeps.

Frame ``f`` at SNR index ``s`` is drawn from stream ``(seed, 0, s, f)`` and
is shared by every detector. Frames are dispatched in fixed-size chunks to a
process pool; results come back in frame order and each detector stops at the
exact frame where it reaches ``min_errors`` bit errors (or at the frame
budget). Neither the worker count nor the chunk boundaries can change the
result, because every counted frame is the same frame either way.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..channel import draw_frame, rng_stream
from ..detect import ML_BUDGET, detect_kbest, detect_linear, detect_ml, preprocess_frame
from ..errors import BudgetExceeded, ConfigInvalid
from ..modem import demodulate_hard, qam
from ..neuralsel import SelectorSet, detect_neural
from .config import ExperimentConfig
from .training import CoefficientBank, load_bank, load_selectors, schedule_from_widths

BER_HEADER = ["detector", "snr_db", "bits", "errors", "ber", "ci_lo", "ci_hi",
              "nodes_mean", "metric_evals_mean", "sort_cmps_mean"]
BER_SCHEMA = 1
SWEEP_STREAM = 0
Z95 = 1.959963984540054


@dataclass(frozen=True)
class BerRecord:
    detector: str
    snr_db: float
    bits: int
    errors: int
    nodes_mean: float
    metric_evals_mean: float
    sort_cmps_mean: float

    def __post_init__(self):
        if not 0 <= self.errors <= self.bits:
            raise ValueError("need 0 <= errors <= bits")

    @property
    def ber(self) -> float:
        return self.errors / self.bits if self.bits else math.nan

    @property
    def ci(self) -> tuple[float, float]:
        return wilson_interval(self.errors, self.bits)


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    p = k / n
    den = 1.0 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return (max(0.0, mid - half), min(1.0, mid + half))


# --------------------------------------------------------------------------
# per-frame work


@dataclass
class SweepPlan:
    """Everything a worker needs; picklable."""

    cfg: ExperimentConfig
    schedules: dict  # (detector, snr index) -> KSchedule
    selectors: SelectorSet | None


_PLAN: SweepPlan | None = None


def _init_worker(plan: SweepPlan) -> None:
    global _PLAN
    _PLAN = plan


def _detect(plan: SweepPlan, name: str, s_idx: int, frame, c):
    if name == "ml":
        return detect_ml(frame.H, frame.y, c)
    if name in ("zf", "mmse"):
        return detect_linear(frame.H, frame.y, c, name, frame.n0)
    p = preprocess_frame(frame, c)
    sched = plan.schedules[(name, s_idx)]
    if name == "neural":
        return detect_neural(p, plan.selectors, sched)
    return detect_kbest(p, sched)


def frame_results(plan: SweepPlan, s_idx: int, f: int, names: tuple[str, ...]) -> np.ndarray:
    """``(len(names), 4)`` int rows: bit errors, nodes, metric evals, sort comparisons."""
    cfg = plan.cfg
    c = qam(cfg.order)
    frame = draw_frame(cfg.nt, cfg.nr, c, cfg.snr_db[s_idx], rng_stream(cfg.seed, SWEEP_STREAM, s_idx, f))
    out = np.zeros((len(names), 4), dtype=np.int64)
    for i, name in enumerate(names):
        xhat, stats = _detect(plan, name, s_idx, frame, c)
        bits = demodulate_hard(xhat, c)
        out[i, 0] = int(np.count_nonzero(bits != frame.bits))
        out[i, 1:] = stats.as_tuple()
    return out


def _job(args):
    s_idx, f, names = args
    return frame_results(_PLAN, s_idx, f, names)


# --------------------------------------------------------------------------
# orchestration


def build_plan(cfg: ExperimentConfig, bank: CoefficientBank | None = None,
               selectors: SelectorSet | None = None) -> SweepPlan:
    """Resolve schedules and load models; raises ModelMissing or BudgetExceeded."""
    if "ml" in cfg.detectors and cfg.order**cfg.nt > ML_BUDGET:
        raise BudgetExceeded(f"ML needs {cfg.order}^{cfg.nt} leaves, budget is {ML_BUDGET}")
    learned = {"adaptive", "neural"} & set(cfg.detectors)
    if learned and bank is None:
        bank = load_bank(cfg.resolve(cfg.coeff_model))
    if "neural" in cfg.detectors and selectors is None:
        selectors = load_selectors(cfg.resolve(cfg.selector_model))
    if bank is not None and (bank.nt, bank.order) != (cfg.nt, cfg.order):
        raise ConfigInvalid("coefficient model was trained for different dimensions")
    if selectors is not None and (selectors.nt, selectors.nr) != (cfg.nt, cfg.nr):
        raise ConfigInvalid("selector model was trained for different dimensions")
    schedules = {}
    for name in cfg.detectors:
        for s_idx, snr in enumerate(cfg.snr_db):
            if name in ("adaptive", "neural"):
                schedules[(name, s_idx)] = bank.schedule(snr)
            elif name.startswith(("kbest-", "schedule-")):
                schedules[(name, s_idx)] = schedule_from_widths(name, cfg.nt, cfg.order)
    return SweepPlan(cfg, schedules, selectors if "neural" in cfg.detectors else None)


def run_sweep(cfg: ExperimentConfig, plan: SweepPlan | None = None) -> list[BerRecord]:
    plan = plan or build_plan(cfg)
    bits_per_frame = cfg.nt * int(round(math.log2(cfg.order)))
    names = cfg.detectors
    pool = ProcessPoolExecutor(cfg.workers, initializer=_init_worker, initargs=(plan,)) if cfg.workers > 1 else None
    if pool is None:
        _init_worker(plan)
    records = []
    try:
        for s_idx, snr in enumerate(cfg.snr_db):
            acc = {n: np.zeros(5, dtype=np.int64) for n in names}  # frames, errors, nodes, evals, cmps
            active = list(names)
            f0 = 0
            while active and f0 < cfg.max_frames:
                n = min(cfg.chunk, cfg.max_frames - f0)
                act = tuple(active)
                jobs = [(s_idx, f, act) for f in range(f0, f0 + n)]
                if pool is None:
                    results = map(_job, jobs)
                else:
                    results = pool.map(_job, jobs, chunksize=max(1, n // (4 * cfg.workers)))
                done = set()
                for res in results:
                    for i, name in enumerate(act):
                        if name in done:
                            continue
                        a = acc[name]
                        a[0] += 1
                        a[1:] += res[i]
                        if a[1] >= cfg.min_errors:
                            done.add(name)
                active = [nm for nm in active if nm not in done]
                f0 += n
            for name in names:
                frames, errors, nodes, evals, cmps = (int(v) for v in acc[name])
                records.append(BerRecord(name, float(snr), frames * bits_per_frame, errors,
                                         nodes / frames, evals / frames, cmps / frames))
    finally:
        if pool is not None:
            pool.shutdown()
    return records


# --------------------------------------------------------------------------
# CSV


def _num(v: float) -> str:
    return repr(float(v))


def ber_csv_text(records: list[BerRecord]) -> str:
    buf = io.StringIO()
    buf.write(f"# metakbest ber schema {BER_SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BER_HEADER)
    for r in records:
        lo, hi = r.ci
        w.writerow([r.detector, _num(r.snr_db), r.bits, r.errors, _num(r.ber), _num(lo), _num(hi),
                    _num(r.nodes_mean), _num(r.metric_evals_mean), _num(r.sort_cmps_mean)])
    return buf.getvalue()


def write_ber_csv(records: list[BerRecord], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(ber_csv_text(records))
    return path


def read_ber_csv(path) -> list[BerRecord]:
    path = Path(path)
    if not path.is_file():
        raise ConfigInvalid(f"no BER table at {path}")
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    if not rows and (not lines or lines[0].split(",") != BER_HEADER):
        raise ConfigInvalid(f"{path} is not a BER table")
    return [BerRecord(r["detector"], float(r["snr_db"]), int(r["bits"]), int(r["errors"]),
                      float(r["nodes_mean"]), float(r["metric_evals_mean"]), float(r["sort_cmps_mean"]))
            for r in rows]


def snr_at_ber(records: list[BerRecord], detector: str, target: float) -> float:
    """SNR where the detector's BER curve crosses ``target``.

    Linear interpolation of ``log10(BER)`` between the first pair of adjacent
    grid points that brackets the target; ``nan`` if the curve never crosses
    or the bracketing point has zero errors.
    """
    pts = sorted((r.snr_db, r.ber) for r in records if r.detector == detector)
    for (s0, b0), (s1, b1) in zip(pts, pts[1:]):
        if b0 >= target > b1:
            if b1 <= 0:
                return math.nan  # no log-domain interpolation towards zero errors
            l0, l1, lt = math.log10(b0), math.log10(b1), math.log10(target)
            return s0 + (s1 - s0) * (l0 - lt) / (l0 - l1)
    return math.nan
