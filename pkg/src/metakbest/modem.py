"""Gray-labeled square QAM.

Label table
-----------
A ``Q``-point constellation is the product of two ``sqrt(Q)``-level PAM axes.
A symbol carries ``log2(Q)`` bits, MSB first; the first half selects the
in-phase level, the second half the quadrature level. The point index of a
symbol equals its label read as an unsigned integer, so ``points[i]`` is the
point labeled ``i``.

Per-axis level for axis label ``g`` (an integer of ``log2(sqrt(Q))`` bits):

* 2 levels (4-QAM): ``g = 0 -> +1``, ``g = 1 -> -1``.
* ``m >= 4`` levels: the binary-reflected Gray code of the ascending level
  number ``l`` is ``g = l ^ (l >> 1)`` and the amplitude is ``2l - (m - 1)``.
  For 16-QAM: ``00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3``.

Amplitudes are divided by ``sqrt(2)``, ``sqrt(10)`` and ``sqrt(42)`` for
4-, 16- and 64-QAM so that the mean symbol energy is one.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .errors import BadCount, LengthMismatch

SUPPORTED_ORDERS = (4, 16, 64)
# distances closer than this are treated as ties (lowest index wins)
TIE_DECIMALS = 12


@dataclass(frozen=True, eq=False)
class Constellation:
    order: int
    bits_per_symbol: int
    points: np.ndarray
    labels: np.ndarray  # (order, bits_per_symbol) uint8, row i is the label of points[i]

    @property
    def min_distance(self) -> float:
        return 2.0 / math.sqrt(2.0 * (self.order - 1) / 3.0)

    def __repr__(self) -> str:
        return f"Constellation({self.order}-QAM)"


def _axis_levels(m: int) -> np.ndarray:
    """Unnormalized amplitude of each axis label ``g = 0 .. m-1``."""
    if m == 2:
        return np.array([1.0, -1.0])
    levels = np.empty(m)
    for lvl in range(m):
        levels[lvl ^ (lvl >> 1)] = 2 * lvl - (m - 1)
    return levels


@functools.lru_cache(maxsize=None)
def qam(order: int) -> Constellation:
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported QAM order {order}; use one of {SUPPORTED_ORDERS}")
    bps = int(math.log2(order))
    half = bps // 2
    m = 1 << half
    axis = _axis_levels(m)
    scale = math.sqrt(2.0 * (order - 1) / 3.0)
    idx = np.arange(order)
    points = (axis[idx >> half] + 1j * axis[idx & (m - 1)]) / scale
    labels = ((idx[:, None] >> np.arange(bps - 1, -1, -1)) & 1).astype(np.uint8)
    points.setflags(write=False)
    labels.setflags(write=False)
    return Constellation(order, bps, points, labels)


def bits_to_indices(bits, c: Constellation) -> np.ndarray:
    b = np.asarray(bits, dtype=np.int64).ravel()
    if b.size % c.bits_per_symbol:
        raise LengthMismatch(
            f"{b.size} bits is not a multiple of {c.bits_per_symbol} bits per symbol"
        )
    weights = 1 << np.arange(c.bits_per_symbol - 1, -1, -1)
    return b.reshape(-1, c.bits_per_symbol) @ weights


def modulate(bits, c: Constellation) -> np.ndarray:
    """Map a bit sequence to constellation points."""
    return c.points[bits_to_indices(bits, c)]


def _distances(s: np.ndarray, c: Constellation) -> np.ndarray:
    d2 = np.abs(s[..., None] - c.points) ** 2
    return np.round(d2, TIE_DECIMALS)


def hard_decision(x, c: Constellation) -> np.ndarray:
    """Index of the nearest constellation point for every entry of ``x``."""
    s = np.asarray(x, dtype=np.complex128)
    return np.argmin(_distances(s, c), axis=-1)


def demodulate_hard(x, c: Constellation) -> np.ndarray:
    """Bits of the nearest constellation point per symbol (ties to the lowest index)."""
    idx = hard_decision(np.ravel(x), c)
    return c.labels[idx].ravel()


def nearest_points(s: complex, c: Constellation, m: int) -> np.ndarray:
    """The ``m`` point indices closest to ``s``, nearest first, ties by index."""
    if not 1 <= m <= c.order:
        raise BadCount(f"m must be in [1, {c.order}], got {m}")
    d2 = _distances(np.asarray(s, dtype=np.complex128), c)
    return np.argsort(d2, kind="stable")[:m]


def gray_table_rows(c: Constellation):
    """Rows ``(index, label, real, imag)`` of the label table."""
    for i in range(c.order):
        label = "".join(str(b) for b in c.labels[i])
        yield i, label, float(c.points[i].real), float(c.points[i].imag)
