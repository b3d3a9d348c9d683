"""Spectral scales, Ky Fan curves and majorization at finite resolution.

Everything is evaluated on the grid ``k/n``. Ky Fan curves are piecewise
linear with breakpoints on that grid, so grid evaluation is exact for
minima of ``F_S - F_A``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from .core import (
    EIG_TOL,
    SCALE_TOL,
    _same_n,
    as_operator,
    eigenvalues,
)
from .errors import HypothesisError, NegativeSpectrumError, ResolutionMismatch


@dataclass(frozen=True, eq=False)
class SpectralScale:
    """Non-increasing step function on [0, 1), constant on ``[i/n, (i+1)/n)``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).copy()
        if v.ndim != 1 or v.size == 0:
            raise ValueError("a spectral scale needs a non-empty 1-D value list")
        if np.any(np.diff(v) > 0):
            raise ValueError("spectral scale values must be non-increasing")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    def __call__(self, x: float) -> float:
        if not 0.0 <= x < 1.0:
            raise ValueError("spectral scales live on [0, 1)")
        return float(self.values[int(np.floor(x * self.n))])

    def moment(self, k: int) -> float:
        """Integral of ``f**k`` over [0, 1]."""
        return float(np.mean(self.values**k))


@dataclass(frozen=True, eq=False)
class KyFanCurve:
    samples: np.ndarray

    @property
    def n(self) -> int:
        return self.samples.size - 1

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.n + 1) / self.n

    def __call__(self, x: float) -> float:
        return float(np.interp(x, self.grid, self.samples))


class Relation(str, enum.Enum):
    EXACT = "exact"
    WEAK = "weak"
    STRICT = "strict"
    NONE = "none"
    EQUIMEASURABLE = "equimeasurable"

    def __str__(self):
        return self.value

    @property
    def majorized(self) -> bool:
        """True for the relations that imply ``A`` is majorized by ``S``."""
        return self in (Relation.EXACT, Relation.STRICT, Relation.EQUIMEASURABLE)


@dataclass(frozen=True, eq=False)
class MajorizationReport:
    relation: Relation
    slack: float
    gap_curve: np.ndarray
    trace_gap: float
    F_A: KyFanCurve
    F_S: KyFanCurve

    def summary(self) -> dict:
        return {
            "relation": self.relation.value,
            "slack": float(self.slack),
            "trace_gap": float(self.trace_gap),
        }

    def csv_rows(self):
        t = self.F_A.grid
        for k in range(t.size):
            yield t[k], self.F_A.samples[k], self.F_S.samples[k], self.gap_curve[k]


def scale_of(values) -> SpectralScale:
    """Spectral scale of a diagonal (or any list of eigenvalues)."""
    return SpectralScale(np.sort(np.asarray(values, dtype=float))[::-1])


def spectral_scale(A) -> SpectralScale:
    return SpectralScale(eigenvalues(as_operator(A)))


def ky_fan(f: SpectralScale) -> KyFanCurve:
    v = f.values
    return KyFanCurve(np.concatenate(([0.0], np.cumsum(v))) / v.size)


def compare_scales(fa, fs, tol: float = SCALE_TOL) -> MajorizationReport:
    """Classify two non-increasing value lists of equal length."""
    fa, fs = SpectralScale(fa), SpectralScale(fs)
    if fa.n != fs.n:
        raise ResolutionMismatch(f"resolution mismatch: {fa.n} vs {fs.n}")
    FA, FS = ky_fan(fa), ky_fan(fs)
    gap = FS.samples - FA.samples
    trace_gap = float(gap[-1])
    slack_value = float(np.min(gap))
    dominated = slack_value >= -tol
    balanced = abs(trace_gap) <= tol
    if np.max(np.abs(fa.values - fs.values)) <= tol:
        rel = Relation.EQUIMEASURABLE
    elif dominated and balanced and np.all(gap[1:-1] > tol):
        rel = Relation.STRICT
    elif dominated and balanced:
        rel = Relation.EXACT
    elif dominated and trace_gap > tol:
        rel = Relation.WEAK
    else:
        rel = Relation.NONE
    return MajorizationReport(rel, slack_value, gap, trace_gap, FA, FS)


def _positive_spectrum(A, tol=EIG_TOL):
    w = eigenvalues(A)
    if w[-1] < -tol * max(1.0, abs(w[0])):
        raise NegativeSpectrumError(f"operator has eigenvalue {w[-1]:.3g} < 0")
    return w


def classify(A, S, tol: float = SCALE_TOL) -> MajorizationReport:
    """Compare the Ky Fan curves of two positive operators.

    ``strict`` means ``F_A < F_S`` at every interior grid point by more
    than ``tol`` with equal traces; ``equimeasurable`` takes precedence.
    """
    A, S = as_operator(A), as_operator(S)
    _same_n(A, S)
    return compare_scales(_positive_spectrum(A), _positive_spectrum(S), tol)


def slack(A, S) -> float:
    """``min_t F_S(t) - F_A(t)``; zero exactly when ``S`` submajorizes ``A``."""
    A, S = as_operator(A), as_operator(S)
    _same_n(A, S)
    return compare_scales(_positive_spectrum(A), _positive_spectrum(S)).slack


def _block_range(X):
    w = eigenvalues(X)
    return w[-1], w[0]


def _dominates(X, Y, tol: float) -> bool:
    """Spectrum of ``X`` lies to the right of the spectrum of ``Y``."""
    return _block_range(X)[0] >= _block_range(Y)[1] - tol


def slack_block_formula(blocks, tol: float = 1e-10) -> float:
    """Slack of a block diagonal pair from the slacks of its blocks.

    ``blocks`` is a list of ``(A_m, S_m, weight_m)`` with the A-blocks (and
    separately the S-blocks) spectrally ordered left to right, weights being
    the normalized traces of the block projections.
    """
    blocks = [(as_operator(a), as_operator(s), float(w)) for a, s, w in blocks]
    problems = []
    if abs(sum(w for *_, w in blocks) - 1.0) > tol:
        problems.append("weights do not sum to 1")
    for m, (a, s, _) in enumerate(blocks):
        if a.n != s.n:
            problems.append(f"block {m}: resolution mismatch {a.n} vs {s.n}")
    for m in range(len(blocks) - 1):
        if not _dominates(blocks[m][0], blocks[m + 1][0], tol):
            problems.append(f"A-blocks {m} and {m + 1} are not spectrally ordered")
        if not _dominates(blocks[m][1], blocks[m + 1][1], tol):
            problems.append(f"S-blocks {m} and {m + 1} are not spectrally ordered")
    if problems:
        raise HypothesisError(problems)

    best = np.inf
    head = 0.0  # tau((S - A) Q_{m-1})
    for a, s, w in blocks:
        best = min(best, head + w * slack(a, s))
        head += w * (s.tau(s.entries) - a.tau(a.entries))
    return float(best)


def verify_block_majorization(A_blocks, S_blocks, T, tol: float = SCALE_TOL) -> bool:
    """Check majorization after replacing the middle S-block by ``T``.

    ``A_blocks`` and ``S_blocks`` are triples for the decomposition
    ``I = P + Q + R``; the third entry may be ``None`` when ``R = 0``.
    Hypothesis failures raise :class:`HypothesisError`; otherwise the
    return value says whether ``A`` is majorized by the replaced operator
    (and, when ``F_S - F_A > 0`` on (0, 1), whether that stays strict).
    """
    A1, A2, A3 = (None if b is None else as_operator(b) for b in A_blocks)
    S1, S2, S3 = (None if b is None else as_operator(b) for b in S_blocks)
    T = as_operator(T)
    if (A3 is None) != (S3 is None):
        raise HypothesisError(["third blocks must both be present or both absent"])
    sizes = [A1.n, A2.n, 0 if A3 is None else A3.n]
    if [S1.n, S2.n, 0 if S3 is None else S3.n] != sizes or T.n != A2.n:
        raise HypothesisError(["block sizes of A, S and T do not match"])
    n = sum(sizes)
    tau_P, tau_Q = sizes[0] / n, sizes[1] / n

    def assemble(*bs):
        return block_diag(*[b.entries for b in bs if b is not None])

    A = assemble(A1, A2, A3)
    S = assemble(S1, S2, S3)
    R = assemble(S1, T, S3)

    violations = []
    base = classify(A, S, tol)
    if not base.relation.majorized:
        violations.append("A is not majorized by S")
    chain_a = [b for b in (A1, A2, A3) if b is not None]
    chain_s = [b for b in (S1, S2, S3) if b is not None]
    if not all(_dominates(x, y, tol) for x, y in zip(chain_a, chain_a[1:])):
        violations.append("ordering: A-blocks not spectrally ordered")
    if not all(_dominates(x, y, tol) for x, y in zip(chain_s, chain_s[1:])):
        violations.append("ordering: S-blocks not spectrally ordered")
    if abs(T.tau(T.entries) - S2.tau(S2.entries)) > tol:
        violations.append("replacement block T does not have the trace of S2")
    if not _dominates(S1, T, tol) or (S3 is not None and not _dominates(T, S3, tol)):
        violations.append("replacement block T is not sandwiched between S1 and S3")
    head_excess = S1.tau(S1.entries) - A1.tau(A1.entries)
    if not head_excess > tau_Q / tau_P:
        violations.append(
            f"head excess: tau_P(S1 - A1) = {head_excess:.6g} <= tau(Q)/tau(P) = {tau_Q / tau_P:.6g}"
        )
    if violations:
        raise HypothesisError(violations)

    replaced = classify(A, R, tol)
    if not replaced.relation.majorized:
        return False
    if base.relation is Relation.STRICT:
        return replaced.relation is Relation.STRICT
    return True
