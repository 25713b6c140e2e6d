"""Rayleigh flat fading, AWGN and keyed random streams.

SNR convention: ``SNR = Nt * Es / N0`` with ``Es = 1``, i.e. the average
signal power per receive antenna over the noise power per receive antenna.
Hence ``N0 = Nt / 10**(snr_db / 10)``. Every caller goes through
:func:`noise_variance`, so switching to another convention means changing
``SNR_SCALE`` (``N0 = SNR_SCALE * Nt / 10**(snr_db/10)``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, RankDeficient
from .linalg import qr_thin
from .modem import modulate

SNR_SCALE = 1.0


def rng_stream(seed: int, *stream) -> np.random.Generator:
    """Generator keyed by ``(seed, stream...)``.

    The same key always reproduces the same draws, independent of the order in
    which streams are created, so Monte-Carlo trials can be keyed by their
    index and evaluated by any number of workers.
    """
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


def sample_channel(nr: int, nt: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. CN(0, 1) entries."""
    if not nr >= nt >= 1:
        raise DimensionMismatch(f"need Nr >= Nt >= 1, got Nr={nr}, Nt={nt}")
    g = rng.standard_normal((nr, nt, 2))
    return (g[..., 0] + 1j * g[..., 1]) * np.sqrt(0.5)


def noise_variance(nt: int, snr_db: float) -> float:
    return SNR_SCALE * nt / 10.0 ** (snr_db / 10.0)


def complex_noise(shape, n0: float, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((*np.atleast_1d(shape), 2))
    return (g[..., 0] + 1j * g[..., 1]) * np.sqrt(n0 / 2.0)


def transmit(H, x, snr_db: float, rng: np.random.Generator, n0: float | None = None):
    """Return ``(y, N0)`` with ``y = H x + n``, ``n ~ CN(0, N0 I)``.

    ``n0`` overrides the SNR-derived noise variance; ``n0=0`` gives ``y = H x``.
    """
    H = np.asarray(H, dtype=np.complex128)
    x = np.asarray(x, dtype=np.complex128)
    if H.ndim != 2 or x.ndim != 1 or H.shape[1] != x.shape[0]:
        raise DimensionMismatch(f"H {H.shape} incompatible with x {x.shape}")
    if n0 is None:
        n0 = noise_variance(H.shape[1], snr_db)
    y = H @ x
    if n0 > 0:
        y = y + complex_noise(H.shape[0], n0, rng)
    return y, float(n0)


@dataclass(frozen=True, eq=False)
class Frame:
    """One block-fading frame: a channel draw and one transmitted symbol vector."""

    bits: np.ndarray
    x: np.ndarray
    H: np.ndarray
    y: np.ndarray
    n0: float
    Q1: np.ndarray
    Rbar: np.ndarray


def draw_frame(nt: int, nr: int, c, snr_db: float, rng: np.random.Generator,
               n0: float | None = None) -> Frame:
    """Draw bits, channel and noise; rank-deficient channels are redrawn."""
    bits = rng.integers(0, 2, size=nt * c.bits_per_symbol, dtype=np.uint8)
    x = modulate(bits, c)
    while True:
        H = sample_channel(nr, nt, rng)
        try:
            Q1, Rbar = qr_thin(H)
            break
        except RankDeficient:
            continue
    y, n0 = transmit(H, x, snr_db, rng, n0)
    return Frame(bits, x, H, y, n0, Q1, Rbar)
