"""Two-block averaging unitaries and spectral-projection transport.

The averaging rotation pairs slot ``i`` of a corner ``P`` with slot ``i`` of
an equally sized corner and mixes them so that the ``P``-diagonal lands on
a prescribed list.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SCALE_TOL, as_operator, eigenvalues, snap_interval, spectral_decomposition
from .errors import DominationError, RankMismatchError


@dataclass(frozen=True, eq=False)
class TwoBlockFrame:
    """Target diagonal ``A1`` on the first corner, ``S = S1 (+) S2``.

    ``S1`` and ``S2`` are k x k blocks; the pairing between the corners is
    slot-by-slot.
    """

    A1: np.ndarray
    S1: np.ndarray
    S2: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.A1)
        if a.ndim == 2:
            a = np.real(np.diag(a))
        object.__setattr__(self, "A1", np.asarray(a, dtype=float))
        object.__setattr__(self, "S1", np.asarray(as_operator(self.S1).entries))
        object.__setattr__(self, "S2", np.asarray(as_operator(self.S2).entries))
        k = self.A1.size
        if self.S1.shape != (k, k) or self.S2.shape != (k, k):
            raise ValueError("A1, S1 and S2 must describe blocks of the same size")

    @property
    def k(self) -> int:
        return self.A1.size

    def source(self) -> np.ndarray:
        k = self.k
        S = np.zeros((2 * k, 2 * k), dtype=np.result_type(self.S1, self.S2))
        S[:k, :k] = self.S1
        S[k:, k:] = self.S2
        return S

    def domination_margin(self) -> tuple:
        """``(min sigma(S1) - max A1, min A1 - max sigma(S2))``."""
        return (
            eigenvalues(self.S1)[-1] - self.A1.max(),
            self.A1.min() - eigenvalues(self.S2)[0],
        )


def averaging_unitary(frame: TwoBlockFrame, tol: float = SCALE_TOL):
    """Rotation ``U`` with ``diag(X) = A1`` for ``U S U* = [[X, *], [*, Y]]``.

    ``H = diag(h)`` with ``h_i^2 = (a_i - e2_i) / (e1_i - e2_i)``, where
    ``e1, e2`` are the diagonals of ``S1, S2``, and
    ``U = [[H, K], [-K, H]]`` with ``K = sqrt(I - H^2)``. Returns
    ``(U, X, Y)``.
    """
    upper, lower = frame.domination_margin()
    if upper < -tol or lower < -tol:
        raise DominationError(
            f"domination fails: sigma(S1) - A1 margin {upper:.3g}, A1 - sigma(S2) margin {lower:.3g}"
        )
    a = frame.A1
    e1 = np.real(np.diag(frame.S1))
    e2 = np.real(np.diag(frame.S2))
    width = e1 - e2
    rise = a - e2
    if np.any(rise < -tol) or np.any(rise > width + tol):
        raise DominationError("target diagonal falls outside [diag S2, diag S1] beyond tolerance")
    h2 = np.zeros_like(a)
    live = width > tol
    h2[live] = np.clip(rise[live], 0.0, width[live]) / width[live]
    h = np.sqrt(h2)
    c = np.sqrt(1.0 - h2)

    k = frame.k
    U = np.zeros((2 * k, 2 * k))
    idx = np.arange(k)
    U[idx, idx] = h
    U[idx + k, idx + k] = h
    U[idx, idx + k] = c
    U[idx + k, idx] = -c
    T = U @ frame.source() @ U.conj().T
    T = (T + T.conj().T) / 2
    return U, T[:k, :k], T[k:, k:]


def _complete_basis(B: np.ndarray, prefer: np.ndarray) -> np.ndarray:
    """Orthonormal basis of C^n whose first columns are ``B`` then ~``prefer``."""
    n = B.shape[0]
    X = np.hstack([B, prefer, np.eye(n, dtype=B.dtype)])
    Q, _ = np.linalg.qr(X)
    lead = min(n, B.shape[1] + prefer.shape[1])
    for j in range(lead):
        if np.real(np.vdot(Q[:, j], X[:, j])) < 0:
            Q[:, j] = -Q[:, j]
    return Q


def transport_unitary(BS: np.ndarray, BA: np.ndarray, rank_tol: float = 1e-11):
    """Unitary ``V`` with ``V @ BS = BA`` that is the identity off both spans.

    ``BS`` and ``BA`` have orthonormal columns, the same count. Returns
    ``(V, Q)`` where ``Q`` is the projection onto ``span(BS) + span(BA)``.
    """
    n, k = BS.shape
    if BA.shape != (n, k):
        raise RankMismatchError(f"cannot transport {k} columns onto {BA.shape[1]}")
    dtype = np.result_type(BS, BA, float)
    if k == 0:
        return np.eye(n, dtype=dtype), np.zeros((n, n), dtype=dtype)
    M = np.hstack([BS, BA]).astype(dtype)
    W, sv, _ = np.linalg.svd(M, full_matrices=True)
    r = int(np.sum(sv > rank_tol))
    span, perp = W[:, :r], W[:, r:]
    QS = _complete_basis(BS.astype(dtype), perp)
    QA = _complete_basis(BA.astype(dtype), perp)
    # columns k..r-k+... of both completions lie inside the span, the tail ~ perp
    V = QA @ QS.conj().T
    return V, span @ span.conj().T


def rank_blocks(intervals, n: int):
    """Snap scale intervals to disjoint rank ranges."""
    ranges = [snap_interval(iv, n) for iv in intervals]
    spans = sorted(r for r in ranges if r[1] > r[0])
    for (_, hi), (lo, _) in zip(spans, spans[1:]):
        if lo < hi:
            raise ValueError(f"intervals overlap after snapping: {intervals}")
    return ranges


def match_spectral_projections(A, S, intervals) -> np.ndarray:
    """Unitary ``V`` with ``V mu_S(X) V* = mu_A(X)`` for each interval ``X``.

    ``V`` is the identity on the orthogonal complement of the spectral
    subspaces involved.
    """
    A, S = as_operator(A), as_operator(S)
    if A.n != S.n:
        raise RankMismatchError(f"resolution mismatch: {A.n} vs {S.n}")
    ranks = np.concatenate([np.arange(lo, hi) for lo, hi in rank_blocks(intervals, A.n)] or [[]]).astype(int)
    _, VA = spectral_decomposition(A)
    _, VS = spectral_decomposition(S)
    V, _ = transport_unitary(VS[:, ranks], VA[:, ranks])
    return V
