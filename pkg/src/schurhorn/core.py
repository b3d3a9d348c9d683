"""Matrix model of a II_1 factor at resolution n.

The factor is represented by n x n matrices with normalized trace
``tau = Tr / n``; the masa is the diagonal subalgebra and the trace
preserving conditional expectation onto it is diagonal pinching.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EigensolverError,
    NegativeSpectrumError,
    NotHermitianError,
    ResolutionMismatch,
)

EIG_TOL = 1e-10
SCALE_TOL = 1e-9


@dataclass(frozen=True)
class TraceContext:
    """Normalized trace at resolution ``n``; ``tau(I) == 1``."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"resolution must be positive, got {self.n}")

    def __call__(self, M) -> float:
        M = np.asarray(M)
        return float(np.real(np.trace(M))) / self.n


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Dense hermitian matrix at resolution ``n = entries.shape[0]``.

    Real symmetric input stays real. The stored matrix is symmetrized
    exactly once validated, so downstream code can rely on exact
    hermiticity.
    """

    entries: np.ndarray
    eig_tol: float = field(default=EIG_TOL, repr=False)

    def __post_init__(self):
        M = np.array(self.entries)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
            raise NotHermitianError(f"expected a non-empty square matrix, got shape {M.shape}")
        if not np.iscomplexobj(M):
            M = M.astype(float)
        elif np.all(M.imag == 0):
            M = M.real.astype(float)
        scale = max(1.0, float(np.max(np.abs(M))))
        asym = float(np.max(np.abs(M - M.conj().T)))
        if asym > self.eig_tol * scale:
            raise NotHermitianError(f"matrix is not hermitian (max |M - M*| = {asym:.3g})")
        M = (M + M.conj().T) / 2
        M.setflags(write=False)
        object.__setattr__(self, "entries", M)

    @classmethod
    def diag(cls, values) -> "HermitianOperator":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def tau(self) -> TraceContext:
        return TraceContext(self.n)

    @property
    def is_diagonal(self) -> bool:
        M = self.entries
        return not np.any(M - np.diag(np.diag(M)))

    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.entries)).copy()

    def check_positive(self, tol: float = EIG_TOL) -> "HermitianOperator":
        w = eigenvalues(self)
        lo = w[-1]
        if lo < -tol * max(1.0, abs(w[0])):
            raise NegativeSpectrumError(f"smallest eigenvalue {lo:.3g} is below -{tol:g}")
        return self

    def conjugate(self, U) -> "HermitianOperator":
        """Return ``U A U*``."""
        U = np.asarray(U)
        return HermitianOperator(U @ self.entries @ U.conj().T)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.entries, dtype=dtype)


@dataclass(frozen=True)
class DiagonalProjection:
    """Projection in the diagonal masa selecting the slots in ``slots`` (0-based)."""

    n: int
    slots: tuple = ()

    def __post_init__(self):
        slots = tuple(sorted({int(i) for i in self.slots}))
        if slots and (slots[0] < 0 or slots[-1] >= self.n):
            raise ValueError(f"slots out of range for n={self.n}: {slots}")
        object.__setattr__(self, "slots", slots)

    @classmethod
    def from_mask(cls, mask) -> "DiagonalProjection":
        mask = np.asarray(mask, dtype=bool)
        return cls(mask.size, tuple(np.flatnonzero(mask)))

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.n, dtype=bool)
        m[list(self.slots)] = True
        return m

    @property
    def trace(self) -> float:
        return len(self.slots) / self.n

    def matrix(self) -> np.ndarray:
        return np.diag(self.mask.astype(float))

    def complement(self) -> "DiagonalProjection":
        return DiagonalProjection.from_mask(~self.mask)

    def __le__(self, other: "DiagonalProjection") -> bool:
        return set(self.slots) <= set(other.slots)


def as_operator(A) -> HermitianOperator:
    if isinstance(A, HermitianOperator):
        return A
    A = np.asarray(A)
    if A.ndim == 1:
        return HermitianOperator.diag(A)
    return HermitianOperator(A)


def _same_n(A: HermitianOperator, S: HermitianOperator):
    if A.n != S.n:
        raise ResolutionMismatch(f"resolution mismatch: {A.n} vs {S.n}")


def trace(A) -> float:
    A = as_operator(A)
    return A.tau(A.entries)


def pinch(S) -> HermitianOperator:
    """Diagonal part of ``S``: the trace preserving expectation onto the masa."""
    S = as_operator(S)
    return HermitianOperator(np.diag(np.diag(S.entries)))


def spectral_decomposition(A):
    """Eigenvalues sorted non-increasingly and the matching eigenvector matrix.

    Ties keep the eigensolver's order. Diagonal input bypasses the
    eigensolver so the eigenvectors are exactly coordinate vectors.
    """
    A = as_operator(A)
    M = A.entries
    if A.is_diagonal:
        d = np.real(np.diag(M))
        order = np.argsort(-d, kind="stable")
        return d[order], np.eye(A.n)[:, order]
    try:
        w, V = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"hermitian eigensolver failed: {exc}") from exc
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def eigenvalues(A) -> np.ndarray:
    """Non-increasing eigenvalue list."""
    A = as_operator(A)
    if A.is_diagonal:
        return np.sort(A.diagonal())[::-1]
    try:
        w = np.linalg.eigvalsh(A.entries)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"hermitian eigensolver failed: {exc}") from exc
    return w[::-1]


def equimeasurable(A, S, tol: float = SCALE_TOL) -> bool:
    A, S = as_operator(A), as_operator(S)
    _same_n(A, S)
    return bool(np.max(np.abs(eigenvalues(A) - eigenvalues(S))) <= tol)


def snap_interval(interval, n: int):
    """Snap ``[lo, hi)`` to the 1/n grid, rounding toward the interior.

    Returns the rank range ``(i0, i1)``; ranks ``i0 <= i < i1`` sit at scale
    positions ``i/n`` inside the snapped interval.
    """
    lo, hi = interval
    if not (0.0 <= lo <= hi <= 1.0):
        raise ValueError(f"interval must satisfy 0 <= lo <= hi <= 1, got {interval}")
    slack = 1e-9
    i0 = math.ceil(lo * n - slack)
    i1 = math.floor(hi * n + slack)
    return i0, max(i0, i1)


def spectral_projection(A, interval) -> np.ndarray:
    """Projection onto the eigenvectors whose scale positions lie in ``interval``.

    ``interval`` is a half-open pair ``(lo, hi)`` in [0, 1]; the result has
    normalized trace equal to the snapped length.
    """
    A = as_operator(A)
    i0, i1 = snap_interval(interval, A.n)
    _, V = spectral_decomposition(A)
    B = V[:, i0:i1]
    return B @ B.conj().T
