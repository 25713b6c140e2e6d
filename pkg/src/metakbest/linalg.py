"""Dense complex linear algebra for the QR-transformed detection problem.

Matrices and vectors are plain ``numpy`` arrays of dtype ``complex128``.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, RankDeficient, Singular

RANK_TOL = 1e-10


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def as_vector(v) -> np.ndarray:
    x = np.asarray(v, dtype=np.complex128)
    if x.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D vector, got shape {x.shape}")
    return x


def qr_thin(H) -> tuple[np.ndarray, np.ndarray]:
    """Thin Householder QR, ``H = Q1 @ Rbar``.

    ``Rbar`` is upper triangular with a real, strictly positive diagonal and
    exact zeros below it; the phase of each diagonal entry is absorbed into
    the matching column of ``Q1``. Columns are decomposed in natural antenna
    order (no pivoting).

    Raises
    ------
    RankDeficient
        If some ``|Rbar[i, i]| <= 1e-10 * ||H||_F``.
    """
    H = as_matrix(H)
    nr, nt = H.shape
    if nr < nt:
        raise DimensionMismatch(f"need Nr >= Nt, got {nr}x{nt}")
    scale = np.linalg.norm(H)
    R = H.copy()
    reflectors = []
    for i in range(nt):
        x = R[i:, i]
        normx = np.linalg.norm(x)
        if normx == 0.0:
            raise RankDeficient(f"column {i} vanishes")
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * normx
        v /= np.linalg.norm(v)
        R[i:, i:] -= 2.0 * np.outer(v, v.conj() @ R[i:, i:])
        reflectors.append(v)

    Q = np.eye(nr, nt, dtype=np.complex128)
    for i in range(nt - 1, -1, -1):
        v = reflectors[i]
        Q[i:, :] -= 2.0 * np.outer(v, v.conj() @ Q[i:, :])

    Rbar = np.triu(R[:nt, :])
    d = np.diag(Rbar).copy()
    if np.any(np.abs(d) <= RANK_TOL * scale):
        raise RankDeficient(f"smallest |R[i,i]| = {np.abs(d).min():.3e}")
    ph = d / np.abs(d)
    Rbar = Rbar * ph.conj()[:, None]
    Q = Q * ph[None, :]
    # phase-rotated diagonal keeps a rounding-level imaginary part
    Rbar[np.diag_indices(nt)] = np.abs(d)
    return Q, Rbar


def hermitian_times_vector(A, v) -> np.ndarray:
    """Return ``A^H v``."""
    A = as_matrix(A)
    v = as_vector(v)
    if A.shape[0] != v.shape[0]:
        raise DimensionMismatch(f"A has {A.shape[0]} rows, v has length {v.shape[0]}")
    return A.conj().T @ v


def solve_regularized(H, y, alpha: float) -> np.ndarray:
    """Solve ``(H^H H + alpha I) x = H^H y``.

    With ``alpha == 0`` this is the least-squares (zero-forcing) solution and
    goes through the QR factorization; a rank-deficient ``H`` raises
    :class:`Singular`.
    """
    H = as_matrix(H)
    y = as_vector(y)
    if H.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"H has {H.shape[0]} rows, y has length {y.shape[0]}")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if alpha == 0:
        try:
            Q1, Rbar = qr_thin(H)
        except RankDeficient as exc:
            raise Singular(str(exc)) from exc
        return scipy.linalg.solve_triangular(Rbar, Q1.conj().T @ y)
    nt = H.shape[1]
    G = H.conj().T @ H + alpha * np.eye(nt)
    return scipy.linalg.solve(G, H.conj().T @ y, assume_a="pos")
