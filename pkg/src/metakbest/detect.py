"""ZF, MMSE, exhaustive ML and K-best tree-search detection.

Tree conventions
----------------
Antennas are numbered ``1..Nt``. Tree layer ``k`` (counted from the root,
``k = 1`` for the first expanded layer) decides antenna ``j = Nt - k + 1``.
A partial path is identified by the point indices it assigns, listed root
first ``(s_Nt, s_Nt-1, ..., s_j)``; paths of equal depth are ordered
lexicographically by that tuple, which is the same as ordering by the
integer code ``sum_a s_a * Q**(a-1)`` restricted to the assigned antennas.
Every tie between equal metrics is broken by that order (lowest first).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, DimensionMismatch
from .linalg import qr_thin, solve_regularized
from .modem import Constellation, hard_decision

ML_BUDGET = 1 << 20


@dataclass(frozen=True, eq=False)
class PreprocessedProblem:
    z: np.ndarray
    Rbar: np.ndarray
    constellation: Constellation
    y: np.ndarray | None = None

    @property
    def nt(self) -> int:
        return self.Rbar.shape[0]


@dataclass(frozen=True)
class PathNode:
    """Partial assignment of antennas ``layer..Nt``.

    ``symbols`` holds point indices in antenna order ``(s_layer, ..., s_Nt)``;
    the root has ``layer == Nt + 1`` and no symbols.
    """

    layer: int
    symbols: tuple[int, ...] = ()
    metric: float = 0.0

    @classmethod
    def root(cls, nt: int) -> "PathNode":
        return cls(nt + 1)


@dataclass(frozen=True)
class KSchedule:
    """Per-layer beam widths ``widths[k-1] = K_k`` counted from the root."""

    widths: tuple[int, ...]
    coeffs: tuple[float, float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))

    def validate(self, q: int) -> None:
        prev = 1
        for k, w in enumerate(self.widths, start=1):
            if not 1 <= w <= min(q**k, q * prev):
                raise ValueError(f"K_{k} = {w} violates 1 <= K_k <= min(Q^k, Q*K_(k-1))")
            prev = w

    @classmethod
    def clamped(cls, widths: Sequence[float], q: int, coeffs=None) -> "KSchedule":
        """Clamp each width into ``[1, min(Q^k, Q*K_(k-1))]``, root first."""
        out = []
        prev = 1
        for k, w in enumerate(widths, start=1):
            w = max(1, min(int(w), q**k, q * prev))
            out.append(w)
            prev = w
        return cls(tuple(out), coeffs)

    @classmethod
    def fixed(cls, k: int, nt: int, q: int) -> "KSchedule":
        return cls.clamped([k] * nt, q)

    @classmethod
    def full(cls, nt: int, q: int) -> "KSchedule":
        return cls(tuple(q**k for k in range(1, nt + 1)))


@dataclass
class DetectorStats:
    nodes_expanded: int = 0
    metric_evals: int = 0
    sort_comparisons: int = 0

    def __iadd__(self, other: "DetectorStats") -> "DetectorStats":
        self.nodes_expanded += other.nodes_expanded
        self.metric_evals += other.metric_evals
        self.sort_comparisons += other.sort_comparisons
        return self

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.nodes_expanded, self.metric_evals, self.sort_comparisons)


def preprocess(H, y, c: Constellation) -> PreprocessedProblem:
    """QR-transform ``(H, y)`` into ``(z, Rbar)`` with ``z = Q1^H y``."""
    H = np.asarray(H, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    if H.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"H {H.shape} incompatible with y {y.shape}")
    Q1, Rbar = qr_thin(H)
    return PreprocessedProblem(Q1.conj().T @ y, Rbar, c, y)


def node_metric(p: PreprocessedProblem, node: PathNode, candidate: int) -> float:
    """``|z_j - sum_{i>=j} r_ji x_i|^2`` for ``j = node.layer - 1`` with ``x_j`` = candidate."""
    if node.layer < 2:
        raise ValueError("leaf nodes have no children")
    j = node.layer - 2  # 0-based antenna of the child
    pts = p.constellation.points
    acc = p.Rbar[j, j] * pts[candidate]
    for off, s in enumerate(node.symbols, start=1):
        acc += p.Rbar[j, j + off] * pts[s]
    return float(abs(p.z[j] - acc) ** 2)


def path_metric(p: PreprocessedProblem, indices) -> float:
    """``||z - Rbar x||^2`` for a full assignment given as point indices (antenna order)."""
    x = p.constellation.points[np.asarray(indices)]
    return float(np.sum(np.abs(p.z - p.Rbar @ x) ** 2))


# --------------------------------------------------------------------------
# exhaustive ML


@functools.lru_cache(maxsize=16)
def _group_candidates(q: int, n: int, pts_key: int) -> np.ndarray:
    """All ``q**n`` assignments of ``n`` antennas as symbols, shape ``(n, q**n)``.

    Column ``m`` gives antenna ``a`` the point index ``(m // q**a) % q``.
    """
    from .modem import qam

    m = np.arange(q**n)
    idx = np.stack([(m // q**a) % q for a in range(n)]) if n else np.zeros((0, 1), dtype=np.int64)
    return qam(pts_key).points[idx]


def ml_metrics(H, y, c: Constellation) -> np.ndarray:
    """``||y - H x||^2 - ||y||^2`` for every candidate, indexed by code.

    The antennas are split into a low group ``A`` (antennas ``1..na``) and a
    high group ``B``; with ``G = H^H H`` and ``u = H^H y`` the objective is
    ``f(x) = x^H G x - 2 Re(x^H u)`` which separates into per-group terms and
    one cross term ``2 Re(x_B^H G_BA x_A)``. The result is a
    ``(Q**nb, Q**na)`` table whose row-major flattening is in code order.
    """
    H = np.asarray(H, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    nt = H.shape[1]
    q = c.order
    na = nt // 2
    G = H.conj().T @ H
    u = H.conj().T @ y
    Xa = _group_candidates(q, na, c.order)
    Xb = _group_candidates(q, nt - na, c.order)

    def own(X, g, uu):
        gx = g @ X
        return np.einsum("ij,ij->j", X.conj(), gx).real - 2.0 * (uu.conj() @ X).real

    qa = own(Xa, G[:na, :na], u[:na]) if na else np.zeros(1)
    qb = own(Xb, G[na:, na:], u[na:])
    if na:
        cross = (Xb.conj().T @ G[na:, :na]) @ Xa
        return qb[:, None] + qa[None, :] + 2.0 * cross.real
    return qb[:, None]


def detect_ml(H, y, c: Constellation, budget: int = ML_BUDGET):
    """Exhaustive minimization of ``||y - H x||^2`` over all ``Q**Nt`` candidates.

    Candidates are scored in code order, so among exact ties the
    lexicographically smallest (root-first) assignment wins.

    Returns
    -------
    (xhat, stats)
    """
    nt = np.shape(H)[1]
    total = c.order**nt
    if total > budget:
        raise BudgetExceeded(f"Q^Nt = {c.order}^{nt} exceeds the ML budget {budget}")
    best = int(np.argmin(ml_metrics(H, y, c)))
    digits = [(best // c.order**a) % c.order for a in range(nt)]
    stats = DetectorStats(total, total, total - 1)
    return c.points[np.array(digits)], stats


# --------------------------------------------------------------------------
# linear detectors


def detect_linear(H, y, c: Constellation, mode: str, n0: float = 0.0):
    """Zero-forcing (``mode="zf"``) or MMSE (``mode="mmse"``) with hard decisions."""
    mode = mode.lower()
    if mode == "zf":
        xs = solve_regularized(H, y, 0.0)
    elif mode == "mmse":
        if not n0 > 0:
            raise ValueError("MMSE needs N0 > 0")
        xs = solve_regularized(H, y, n0)
    else:
        raise ValueError(f"unknown linear mode {mode!r}")
    nt = xs.shape[0]
    stats = DetectorStats(0, nt * c.order, nt * (c.order - 1))
    return c.points[hard_decision(xs, c)], stats


# --------------------------------------------------------------------------
# K-best


def select_smallest(keys: list, k: int) -> tuple[list[int], int]:
    """Indices of the ``k`` smallest keys and the number of key comparisons.

    Bounded max-heap selection: heapify the first ``k`` keys, then each later
    key is compared against the current ``k``-th smallest and replaces it when
    smaller. Returned indices are in heap order, not sorted.
    """
    n = len(keys)
    if k >= n:
        return list(range(n)), 0
    heap = list(range(k))
    cmps = 0

    def sift(pos: int) -> None:
        nonlocal cmps
        item = heap[pos]
        key = keys[item]
        while True:
            child = 2 * pos + 1
            if child >= k:
                break
            right = child + 1
            if right < k:
                cmps += 1
                if keys[heap[child]] < keys[heap[right]]:
                    child = right
            cmps += 1
            if keys[heap[child]] > key:
                heap[pos] = heap[child]
                pos = child
            else:
                break
        heap[pos] = item

    for pos in range(k // 2 - 1, -1, -1):
        sift(pos)
    top = keys[heap[0]]
    for i in range(k, n):
        cmps += 1
        if keys[i] < top:
            heap[0] = i
            sift(0)
            top = keys[heap[0]]
    return heap, cmps


def _tree_search(p: PreprocessedProblem, widths: Sequence[int], candidates=None):
    """Breadth-first search keeping ``widths[k-1]`` paths at layer ``k``.

    ``candidates[k-1]``, when given, restricts the symbols tried at layer ``k``.
    Returns ``(indices in antenna order, metric, stats)``.
    """
    nt = p.nt
    q = p.constellation.order
    pts = p.constellation.points
    R, z = p.Rbar, p.z
    stats = DetectorStats()

    delta = np.zeros(1)
    codes = np.zeros(1, dtype=np.int64)
    xs = np.zeros((1, 0), dtype=np.complex128)  # antennas j+1..Nt of each survivor
    ix = np.zeros((1, 0), dtype=np.int64)
    for k in range(1, nt + 1):
        j = nt - k
        cand = np.arange(q) if candidates is None else np.asarray(candidates[k - 1], dtype=np.int64)
        nc = cand.shape[0]
        interf = xs @ R[j, j + 1:]
        node = np.abs(z[j] - interf[:, None] - R[j, j] * pts[cand][None, :]) ** 2
        child_delta = (delta[:, None] + node).ravel()
        child_codes = (codes[:, None] * q + cand[None, :]).ravel()
        n_children = child_delta.shape[0]
        stats.nodes_expanded += n_children
        stats.metric_evals += n_children
        keep = widths[k - 1]
        if keep < n_children:
            keys = list(zip(child_delta.tolist(), child_codes.tolist()))
            sel, cmps = select_smallest(keys, keep)
            stats.sort_comparisons += cmps
            sel = np.asarray(sel)
        else:
            sel = np.arange(n_children)
        parent, child = np.divmod(sel, nc)
        delta = child_delta[sel]
        codes = child_codes[sel]
        xs = np.concatenate([pts[cand[child]][:, None], xs[parent]], axis=1)
        ix = np.concatenate([cand[child][:, None], ix[parent]], axis=1)

    best = 0
    best_key = (delta[0], codes[0])
    for i in range(1, delta.shape[0]):
        stats.sort_comparisons += 1
        key = (delta[i], codes[i])
        if key < best_key:
            best, best_key = i, key
    return ix[best], float(delta[best]), stats


def detect_kbest(p: PreprocessedProblem, schedule: KSchedule):
    """Width-first tree search with per-layer beam widths.

    Returns ``(xhat, stats)``; ``stats.nodes_expanded`` counts scored children.
    """
    if len(schedule.widths) != p.nt:
        raise ValueError(f"schedule has {len(schedule.widths)} layers, problem has {p.nt}")
    schedule.validate(p.constellation.order)
    ix, _, stats = _tree_search(p, schedule.widths)
    return p.constellation.points[ix], stats


def kbest_indices(p: PreprocessedProblem, schedule: KSchedule):
    """Like :func:`detect_kbest` but returns ``(indices, metric, stats)``."""
    schedule.validate(p.constellation.order)
    return _tree_search(p, schedule.widths)


def expected_children(schedule: KSchedule, q: int) -> int:
    """Children scored by :func:`detect_kbest`: ``sum_k min(K_(k-1) Q, Q^k)``."""
    prev = 1
    total = 0
    for k, w in enumerate(schedule.widths, start=1):
        total += min(prev * q, q**k)
        prev = w
    return total


def preprocess_frame(frame, c: Constellation) -> PreprocessedProblem:
    """:func:`preprocess` reusing the QR factors stored with a drawn frame."""
    return PreprocessedProblem(frame.Q1.conj().T @ frame.y, frame.Rbar, c, frame.y)
