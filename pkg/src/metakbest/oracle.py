"""Minimum beam widths that keep the ML path, by exhaustive enumeration.

The rank of the ML path at layer ``k`` is measured against *all* ``Q**k``
partial paths, not against the survivors of a pruned search. Survivors are a
subset of all partials, so a beam width ``K_k >= r_k`` at every layer always
retains the ML path; that makes the rank profile a sufficient schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import draw_frame, rng_stream
from .detect import ML_BUDGET, KSchedule, PreprocessedProblem, preprocess_frame
from .errors import BudgetExceeded, EmptySample
from .modem import Constellation


@dataclass(frozen=True)
class RankProfile:
    ranks: tuple[int, ...]  # r_1..r_Nt, root first
    ml_indices: tuple[int, ...]  # ML point indices in antenna order
    ml_metric: float

    def schedule(self, q: int) -> KSchedule:
        return KSchedule.clamped(self.ranks, q)


@dataclass(frozen=True)
class KTargetSet:
    widths: tuple[int, ...]
    n_samples: int
    snr_db: float
    quantile: float
    ranks: np.ndarray | None = field(default=None, compare=False, repr=False)


def rank_profile(p: PreprocessedProblem, budget: int = ML_BUDGET) -> RankProfile:
    """Per-layer rank of the ML prefix among all partial paths (ties by code)."""
    nt = p.nt
    q = p.constellation.order
    if q**nt > budget:
        raise BudgetExceeded(f"Q^Nt = {q}^{nt} exceeds the budget {budget}")
    pts = p.constellation.points
    R, z = p.Rbar, p.z

    # partial paths at each layer, indexed by code; columns of xs are antennas j..Nt
    layers = []
    delta = np.zeros(1)
    xs = np.zeros((1, 0), dtype=np.complex128)
    for k in range(1, nt + 1):
        j = nt - k
        interf = xs @ R[j, j + 1:]
        node = np.abs(z[j] - interf[:, None] - R[j, j] * pts[None, :]) ** 2
        delta = (delta[:, None] + node).ravel()
        parent = np.repeat(np.arange(xs.shape[0]), q)
        child = np.tile(np.arange(q), xs.shape[0])
        xs = np.concatenate([pts[child][:, None], xs[parent]], axis=1)
        layers.append(delta)

    leaf = int(np.argmin(layers[-1]))
    ranks = []
    for k, metrics in enumerate(layers, start=1):
        prefix = leaf // q ** (nt - k)
        m = metrics[prefix]
        rank = 1 + int(np.count_nonzero(metrics < m)) + int(np.count_nonzero(metrics[:prefix] == m))
        ranks.append(rank)
    ml = tuple(int((leaf // q**a) % q) for a in range(nt))
    return RankProfile(tuple(ranks), ml, float(layers[-1][leaf]))


def sample_ranks(nt: int, nr: int, c: Constellation, snr_db: float, n_samples: int,
                 seed: int, stream: int = 0, budget: int = ML_BUDGET) -> np.ndarray:
    """Rank profiles of ``n_samples`` random frames, shape ``(n_samples, nt)``.

    Sample ``i`` uses the random stream ``(seed, stream, i)``.
    """
    if c.order**nt > budget:
        raise BudgetExceeded(f"Q^Nt = {c.order}^{nt} exceeds the budget {budget}")
    out = np.empty((n_samples, nt), dtype=np.int64)
    for i in range(n_samples):
        frame = draw_frame(nt, nr, c, snr_db, rng_stream(seed, stream, i))
        out[i] = rank_profile(preprocess_frame(frame, c), budget).ranks
    return out


def targets_from_ranks(ranks, q_order: int, quantile: float, snr_db: float = math.nan) -> KTargetSet:
    """``K*_k = ceil(quantile of r_k)`` with the inverted-CDF quantile, then clamped."""
    ranks = np.asarray(ranks)
    if ranks.ndim != 2 or ranks.shape[0] == 0:
        raise EmptySample("no rank profiles to aggregate")
    if not 0 < quantile <= 1:
        raise ValueError("quantile must lie in (0, 1]")
    qv = np.quantile(ranks, quantile, axis=0, method="inverted_cdf")
    widths = KSchedule.clamped([math.ceil(v) for v in qv], q_order).widths
    return KTargetSet(widths, ranks.shape[0], snr_db, quantile, ranks)


def generate_targets(nt: int, nr: int, c: Constellation, snr_db: float, n_samples: int,
                     quantile: float = 0.99, seed: int = 0, stream: int = 0,
                     budget: int = ML_BUDGET) -> KTargetSet:
    if n_samples < 1:
        raise EmptySample("n_samples must be at least 1")
    ranks = sample_ranks(nt, nr, c, snr_db, n_samples, seed, stream, budget)
    return targets_from_ranks(ranks, c.order, quantile, snr_db)
