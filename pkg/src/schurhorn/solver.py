"""Prescribed-diagonal solvers.

All routines share one mechanism, the *pair move*: send eigenvectors
``v_x, v_y`` of the current corner onto two diagonal slots, then rotate in
that plane so the first slot receives its target value ``d`` exactly while
the second keeps ``lambda_x + lambda_y - d``. Which pairs are moved, and in
what order, is what distinguishes the local step, the orbit loop and the
strict half-step.

Lists called ``lam`` are eigenvalues sorted non-increasingly and lists
called ``d`` are the sorted target diagonal; ``order[r]`` is the slot of
the ``r``-th largest target entry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .averaging import TwoBlockFrame, averaging_unitary, transport_unitary
from .core import DiagonalProjection, HermitianOperator, as_operator, spectral_decomposition
from .errors import (
    CoarseGridError,
    HypothesisError,
    IterationLimitError,
    NoCrossingError,
    NotMajorizedError,
    ResolutionMismatch,
    StrictnessError,
)
from .majorization import Relation, classify


@dataclass
class SolveConfig:
    tol: float = 1e-8
    max_outer_iterations: int | None = None
    strictness_margin: float = 1e-9
    rng_seed: int = 0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_outer_iterations is not None and self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be at least 1")
        if self.strictness_margin < 0:
            raise ValueError("strictness_margin must be non-negative")

    def iteration_budget(self, n: int) -> int:
        if self.max_outer_iterations is not None:
            return self.max_outer_iterations
        return 64 * max(1, math.ceil(math.log2(max(n, 2))))


@dataclass
class PartialSolution:
    """``U`` fixes the diagonal on ``P``; ``U - I`` lives inside ``Q``.

    ``Q`` is an orthogonal projection matrix: the moved eigenvectors are
    generally not coordinate vectors, so it need not be diagonal.
    """

    U: np.ndarray
    P: DiagonalProjection
    Q: np.ndarray
    residual: float


@dataclass
class SolveInfo:
    residual: float
    iterations: int
    tau_P_history: list = field(default_factory=list)
    tail_history: list = field(default_factory=list)


@dataclass(frozen=True)
class _Pair:
    x: int  # eigen-rank sent to the fixed slot
    y: int  # eigen-rank sent to the partner slot
    fix: int  # target rank whose slot is settled
    partner: int  # target rank whose slot absorbs the remainder


# ---------------------------------------------------------------- list level


def _diag_target(A) -> np.ndarray:
    A = as_operator(A)
    if not A.is_diagonal:
        raise ValueError("the target must be a diagonal operator")
    return A.diagonal()


def _scale(lam) -> float:
    return max(1.0, float(np.max(np.abs(lam), initial=0.0)))


def _gap_curve(d, lam) -> np.ndarray:
    """``F_lam - F_d`` on the grid, normalized by the list length."""
    return np.concatenate(([0.0], np.cumsum(lam - d))) / len(d)


def _remainder(lam, d, pairs):
    used = {p.x for p in pairs} | {p.y for p in pairs}
    fixed = {p.fix for p in pairs}
    z = [lam[p.x] + lam[p.y] - d[p.fix] for p in pairs]
    lam_r = np.concatenate([np.delete(lam, sorted(used)), z])
    d_r = np.delete(d, sorted(fixed))
    return np.sort(lam_r)[::-1], d_r


def _remainder_ok(lam, d, pairs, tol: float, strict_margin: float | None = None) -> bool:
    lam_r, d_r = _remainder(lam, d, pairs)
    if d_r.size == 0:
        return True
    g = _gap_curve(d_r, lam_r)
    if abs(g[-1]) > tol or np.min(g) < -tol:
        return False
    if strict_margin is not None and d_r.size > 1:
        return bool(np.all(g[1:-1] > strict_margin))
    return True


def _dominated(lam, d, p: _Pair, tol: float) -> bool:
    return lam[p.x] + tol >= d[p.fix] >= lam[p.y] - tol


def _mo_pair(lam, d, eps: float):
    """The last over-full rank and the first under-full rank after it.

    Settling whichever of the two needs the smaller move is a single
    T-transform step, so it always keeps the remainder majorized.
    """
    diff = lam - d
    over = np.flatnonzero(diff > eps)
    if over.size == 0:
        return None
    j = int(over[-1])
    tail = -diff[j + 1:]
    if tail.size == 0 or tail.max() <= 0:
        return None
    below = np.flatnonzero(tail > eps)
    k = j + 1 + int(below[0] if below.size else np.argmax(tail))
    if diff[j] <= -diff[k]:
        return _Pair(x=j, y=k, fix=j, partner=k)
    return _Pair(x=j, y=k, fix=k, partner=j)


def _crossing_pairs(lam, d, eps: float, tol: float, margin: float):
    """Pairs around the best crossing point of the two scales.

    Scans crossing points ``c`` and window widths ``w`` in powers of two,
    scoring ``min(#over-full ranks in [c-w, c), #under-full ranks in
    [c, c+w))``; the matched sets are trimmed, nearest to ``c`` first, so
    that the level sets are ordered ``L1 > L2 > L3 > L4``.
    """
    n = len(lam)
    diff = lam - d
    over, under = diff > eps, -diff > eps
    c_over = np.concatenate(([0], np.cumsum(over)))
    c_under = np.concatenate(([0], np.cumsum(under)))
    best, best_score = None, 0
    w = 1
    while w <= n:
        for c in range(1, n):
            lo, hi = max(0, c - w), min(n, c + w)
            score = min(c_over[c] - c_over[lo], c_under[hi] - c_under[c])
            if score > best_score:
                best, best_score = (c, lo, hi), score
        w *= 2
    if best is None:
        return []
    c, lo, hi = best
    X = [r for r in range(c - 1, lo - 1, -1) if over[r]][:best_score]
    Y = [r for r in range(c, hi) if under[r]][:best_score]
    t = 0
    while t < best_score:
        # L1 > L2 on X[:t+1] and L3 > L4 on Y[:t+1]; L2 >= L3 holds by rank order
        if lam[X[0]] - d[X[t]] <= margin or d[Y[t]] - lam[Y[0]] <= margin:
            break
        t += 1
    pairs = [_Pair(x=X[i], y=Y[i], fix=X[i], partner=Y[i]) for i in range(t)]
    while pairs and not _remainder_ok(lam, d, pairs, tol):
        pairs.pop()
    return pairs


def _strict_candidates(lam, d, eps: float):
    """Single pair moves in a useful order for the strict half-step."""
    n = len(lam)
    diff = lam - d
    active = [r for r in range(n) if abs(diff[r]) > eps]
    seen = set()
    for r, s in zip(active, active[1:]):
        if diff[r] > 0 > diff[s]:
            for p in (_Pair(r, s, r, s), _Pair(r, s, s, r)):
                seen.add(p)
                yield p
    mo = _mo_pair(lam, d, eps)
    if mo is not None and mo not in seen:
        seen.add(mo)
        yield mo
    for x in range(n):
        for y in range(x + 1, n):
            if lam[x] - lam[y] <= eps:
                continue
            for p in (_Pair(x, y, x, y), _Pair(x, y, y, x)):
                if p not in seen:
                    yield p


# ---------------------------------------------------------------- matrix level


def _rank_match(corner: np.ndarray, targets: np.ndarray):
    """Unitary sending the r-th eigenvector of ``corner`` to the slot of the r-th target."""
    lam, V = spectral_decomposition(HermitianOperator(corner))
    order = np.argsort(-targets, kind="stable")
    E = np.eye(len(targets))[:, order]
    return E @ V.conj().T, lam


def _pairwise_rotation(T: np.ndarray, fix_slots, partner_slots, targets, tol: float):
    """Rotate each ``(fix, partner)`` plane so that ``T[fix, fix] = target``."""
    n = T.shape[0]
    G = np.eye(n)
    for f, p, a in zip(fix_slots, partner_slots, targets):
        frame = TwoBlockFrame([a], [[np.real(T[f, f])]], [[np.real(T[p, p])]])
        R, _, _ = averaging_unitary(frame, tol=tol)
        idx = [f, p]
        G[np.ix_(idx, idx)] = R
    return G


def _apply_pairs(a, S, pairs, tol: float):
    """Perform a set of pair moves on a (corner) operator.

    Returns ``(U, fixed_slots, Q)`` where ``Q`` projects onto the span of
    the moved eigenvectors and their destination slots.
    """
    n = len(a)
    lam, VS = spectral_decomposition(HermitianOperator(S))
    order = np.argsort(-a, kind="stable")
    fix_slots = [int(order[p.fix]) for p in pairs]
    partner_slots = [int(order[p.partner]) for p in pairs]
    BS = VS[:, [p.x for p in pairs] + [p.y for p in pairs]]
    BA = np.eye(n)[:, fix_slots + partner_slots]
    V, Q = transport_unitary(BS, BA)
    T = V @ np.asarray(S) @ V.conj().T
    G = _pairwise_rotation(T, fix_slots, partner_slots, a[fix_slots], tol)
    return G @ V, fix_slots, Q


def _lift(Uc: np.ndarray, slots, n: int, dtype) -> np.ndarray:
    U = np.eye(n, dtype=np.result_type(Uc, dtype))
    U[np.ix_(slots, slots)] = Uc
    return U


def _conjugate(U, T):
    T = U @ T @ U.conj().T
    return (T + T.conj().T) / 2


def _prepare(A, S):
    a = _diag_target(A)
    S = as_operator(S)
    if S.n != a.size:
        raise ResolutionMismatch(f"resolution mismatch: {a.size} vs {S.n}")
    return a, S


def _require_majorized(A, S, tol: float):
    rep = classify(A, S, tol=tol)
    if not rep.relation.majorized:
        raise NotMajorizedError(f"target is not majorized by the source (relation: {rep.relation})")
    return rep


def _local_pairs(lam, d, tol: float):
    scale = _scale(lam)
    eps = 1e-12 * scale
    base = max(0.0, -float(np.min(_gap_curve(d, lam))), abs(float(_gap_curve(d, lam)[-1])))
    vtol = base + 1e-11 * scale
    pairs = _crossing_pairs(lam, d, eps, vtol, margin=0.0)
    if not pairs:
        mo = _mo_pair(lam, d, eps)
        if mo is None:
            raise NoCrossingError("the scales do not cross: nothing to move")
        pairs = [mo]
    return pairs


def local_step(A, S, cfg: SolveConfig | None = None) -> PartialSolution:
    """One partial solution ``(U, P)`` with locality control.

    The diagonal is settled on a nonzero ``P``; the complementary corner
    keeps ``A(I-P)`` majorized; ``U - I`` is supported in ``Q`` with
    ``tau(Q) <= 4 tau(P)``.
    """
    cfg = cfg or SolveConfig()
    a, S = _prepare(A, S)
    rep = _require_majorized(np.diag(a), S, cfg.tol)
    if rep.relation is Relation.EQUIMEASURABLE:
        raise NoCrossingError("target and source are equimeasurable: no crossing sets exist")
    lam, _ = spectral_decomposition(S)
    d = np.sort(a)[::-1]
    pairs = _local_pairs(lam, d, cfg.tol)
    U, fixed, Q = _apply_pairs(a, S.entries, pairs, cfg.tol)
    P = DiagonalProjection(a.size, fixed)
    T = U @ S.entries @ U.conj().T
    residual = float(np.max(np.abs(np.real(np.diag(T))[fixed] - a[fixed])))
    return PartialSolution(U, P, Q, residual)


# ---------------------------------------------------------------- orbit loop


def _orbit_loop(a, S_entries, cfg: SolveConfig, callback=None):
    n = a.size
    dtype = np.result_type(S_entries, float)
    U = np.eye(n, dtype=dtype)
    T = np.array(S_entries, dtype=dtype)
    fixed = np.zeros(n, dtype=bool)
    supports = []
    budget = cfg.iteration_budget(n)
    eps = 1e-12 * _scale(np.abs(np.diag(T)))
    it = 0
    while True:
        rest = np.flatnonzero(~fixed)
        if rest.size == 0:
            return U, fixed, np.eye(n, dtype=dtype), it
        corner = T[np.ix_(rest, rest)]
        a_c = a[rest]
        lam, _ = spectral_decomposition(HermitianOperator(corner))
        d = np.sort(a_c)[::-1]
        if rest.size == 1 or np.max(np.abs(lam - d)) <= eps:
            Wc, _ = _rank_match(corner, a_c)
            return U, fixed, _lift(Wc, rest, n, dtype), it
        if it >= budget:
            Q = _span_projection(supports, n, dtype)
            partial = PartialSolution(U, DiagonalProjection.from_mask(fixed), Q, _residual(U, S_entries, a, fixed))
            raise IterationLimitError(
                f"orbit loop used its budget of {budget} iterations with {rest.size} slots unsettled",
                partial=partial,
            )
        try:
            pairs = _local_pairs(lam, d, cfg.tol)
        except NoCrossingError:
            if np.max(np.abs(lam - d)) > cfg.tol:
                raise NotMajorizedError("remainder corner lost majorization beyond tolerance")
            Wc, _ = _rank_match(corner, a_c)
            return U, fixed, _lift(Wc, rest, n, dtype), it
        Uc, fixed_local, Qc = _apply_pairs(a_c, corner, pairs, cfg.tol)
        lift = _lift(Uc, rest, n, dtype)
        U = lift @ U
        T = _conjugate(lift, T)
        fixed[rest[fixed_local]] = True
        q = np.zeros((n, n), dtype=np.result_type(Qc, dtype))
        q[np.ix_(rest, rest)] = Qc
        supports.append(q)
        it += 1
        if callback is not None:
            callback(it, U, DiagonalProjection.from_mask(fixed))


def _span_projection(projections, n, dtype):
    if not projections:
        return np.zeros((n, n), dtype=dtype)
    w, V = np.linalg.eigh(sum(projections))
    B = V[:, w > 1e-9]
    return B @ B.conj().T


def _residual(U, S_entries, a, mask=None) -> float:
    T = U @ S_entries @ U.conj().T
    err = np.abs(np.real(np.diag(T)) - a)
    if mask is not None:
        err = err[mask]
    return float(np.max(err, initial=0.0))


def solve_orbit(A, S, cfg: SolveConfig | None = None, callback=None):
    """Iterate local steps on the unsettled corner until it matches ``A``.

    Returns ``(U, P, W)``: ``U`` is the product of the local steps (each one
    the identity on the slots already settled), ``P`` the settled slots, and
    ``W`` a unitary acting on ``I - P`` only that diagonalizes the final
    corner, so ``diag((W U) S (W U)*)`` equals ``A``.
    ``callback(k, U_k, P_k)`` is invoked after every local step.
    """
    cfg = cfg or SolveConfig()
    a, S = _prepare(A, S)
    _require_majorized(np.diag(a), S, cfg.tol)
    U, fixed, W, _ = _orbit_loop(a, S.entries, cfg, callback)
    return U, DiagonalProjection.from_mask(fixed), W


# ---------------------------------------------------------------- strict half-step


def _check_strict(a, S, cfg: SolveConfig):
    rep = classify(np.diag(a), S, tol=cfg.tol)
    if not rep.relation.majorized:
        raise NotMajorizedError(f"target is not majorized by the source (relation: {rep.relation})")
    interior = rep.gap_curve[1:-1]
    if rep.relation is not Relation.STRICT or (interior.size and interior.min() < cfg.strictness_margin):
        raise StrictnessError(
            "strict majorization with the configured margin is required; split the problem at the "
            "zeros of the Ky Fan gap first"
        )
    return rep


def _equal_gap_cuts(g, m: int, tol: float):
    """Rank cuts ``ia < m/8 < 7m/8 < ib`` with equal gap and a larger gap between."""
    best = None
    for ia in range(1, math.ceil(m / 8)):
        for ib in range(m - 1, math.floor(7 * m / 8), -1):
            if abs(g[ia] - g[ib]) > tol:
                continue
            if np.all(g[ia + 1:ib] > max(g[ia], g[ib]) + tol):
                if best is None or ia > best[0]:
                    best = (ia, ib)
                break
    return best


def sh1part_step(A, S, cfg: SolveConfig | None = None) -> PartialSolution:
    """Settle at least half of the diagonal while keeping strictness.

    Requires strict majorization. When the Ky Fan gap takes equal values at
    cut points ``a < 1/8`` and ``b > 7/8`` with a larger gap in between, the
    middle spectral block is solved outright. Otherwise strictness-preserving
    pair moves are applied one at a time until half of the slots are set.
    The complement corner stays strictly majorized.
    """
    cfg = cfg or SolveConfig()
    a, S = _prepare(A, S)
    m = a.size
    rep = _check_strict(a, S, cfg)
    if m < 9:
        raise CoarseGridError(
            f"resolution {m} cannot place a cut point below 1/8; refine n (e.g. S -> S (x) I_k)"
        )
    dtype = np.result_type(S.entries, float)
    V0, lam = _rank_match(S.entries, a)
    T = _conjugate(V0, S.entries)
    order = np.argsort(-a, kind="stable")
    d = a[order]

    cuts = _equal_gap_cuts(rep.gap_curve, m, cfg.tol / m)
    if cuts is not None:
        ia, ib = cuts
        mid = np.sort(order[ia:ib])
        corner = T[np.ix_(mid, mid)]
        Uc, _, Wc, _ = _orbit_loop(a[mid], corner, cfg)
        U = _lift(Wc @ Uc, mid, m, dtype) @ V0
        P = DiagonalProjection(m, mid)
    else:
        U, P = _strict_pair_moves(a, T, V0, cfg, target=math.ceil(m / 2))
    residual = _residual(U, S.entries, a, P.mask)
    return PartialSolution(U, P, np.eye(m, dtype=dtype), residual)


def _strict_pair_moves(a, T, U, cfg: SolveConfig, target: int):
    m = a.size
    dtype = np.result_type(T, U, float)
    fixed = np.zeros(m, dtype=bool)
    while fixed.sum() < target:
        rest = np.flatnonzero(~fixed)
        corner = T[np.ix_(rest, rest)]
        a_c = a[rest]
        lam, _ = spectral_decomposition(HermitianOperator(corner))
        d = np.sort(a_c)[::-1]
        scale = _scale(lam)
        eps, vtol = 1e-12 * scale, 1e-11 * scale
        choice = None
        for p in _strict_candidates(lam, d, eps):
            if _dominated(lam, d, p, eps) and _remainder_ok(lam, d, [p], vtol, cfg.strictness_margin):
                choice = p
                break
        if choice is None:
            raise StrictnessError("no pair move keeps the remainder strictly majorized")
        Uc, fixed_local, _ = _apply_pairs(a_c, corner, [choice], cfg.tol)
        lift = _lift(Uc, rest, m, dtype)
        U = lift @ U
        T = _conjugate(lift, T)
        fixed[rest[fixed_local]] = True
    return U, DiagonalProjection.from_mask(fixed)


# ---------------------------------------------------------------- two-block repair steps


def _block_operator(B1, B2):
    B1, B2 = np.asarray(B1), np.asarray(B2)
    k1, k2 = B1.shape[0], B2.shape[0]
    M = np.zeros((k1 + k2, k1 + k2), dtype=np.result_type(B1, B2, float))
    M[:k1, :k1], M[k1:, k1:] = B1, B2
    return M


def _repair_hypotheses(a1, a2, S1, S2, tol: float):
    problems = []
    lam1, _ = spectral_decomposition(S1)
    lam2, _ = spectral_decomposition(S2)
    if not np.all(lam1 - np.sort(a1)[::-1] > tol):
        problems.append("the scale of S1 does not exceed the scale of A1 pointwise")
    if a1.min() < a2.max() - tol:
        problems.append("the spectrum of A1 does not dominate the spectrum of A2")
    if lam2.size != a2.size or np.max(np.abs(lam2 - np.sort(a2)[::-1])) > tol:
        problems.append("A2 and S2 are not equimeasurable")
    if problems:
        raise HypothesisError(problems)


def _repair_stage(T, a, head, partners, tol: float):
    """Average each head slot with a partner slot, then shift the partners one step.

    ``head`` and ``partners`` are slot lists sorted by decreasing target;
    only the first ``len(head)`` partners are used. Returns the stage
    unitary and the partner slots that now carry a strictly dominating
    remainder.
    """
    n = T.shape[0]
    h = len(head)
    used = list(partners[:h])
    dtype = np.result_type(T, float)
    # rank matching inside the head corner and inside the partner corner
    Rh, _ = _rank_match(T[np.ix_(head, head)], a[head])
    Rp, _ = _rank_match(T[np.ix_(used, used)], a[used])
    U = _lift(Rh, list(head), n, dtype) @ _lift(Rp, used, n, dtype)
    T = _conjugate(U, T)
    G = _pairwise_rotation(T, list(head), used, a[list(head)], tol)
    shift = np.eye(n)
    for i in range(h):
        src, dst = used[i], used[(i + 1) % h]
        shift[src, src] = 0.0
        shift[dst, src] = 1.0
    return shift @ G @ U, used[1:]


def sht2_step(A1, A2, S1, S2, delta: float, tol: float = 1e-9):
    """Settle the whole first corner and leave a strictly dominated second corner.

    ``A = A1 (+) A2`` and ``S = S1 (+) S2`` on two corners of equal size
    ``m``, with the scale of ``S1`` pointwise above that of ``A1``, the
    spectrum of ``A1`` above that of ``A2``, and ``A2`` equimeasurable with
    ``S2``. Uses ``m`` width-one intervals, so ``k = m - 1`` and the grid
    condition ``k / m > 1 - 2 delta`` must hold.

    Returns ``(U, R1, R2)`` with ``diag(U S U*) = A`` on ``R1`` and the scale
    of the ``R2`` corner strictly above that of ``A`` there.
    """
    a1, a2 = _diag_target(A1), _diag_target(A2)
    S1, S2 = as_operator(S1), as_operator(S2)
    m = a1.size
    if a2.size != m or S1.n != m or S2.n != m:
        raise ResolutionMismatch("both corners must have the same size")
    if not (m - 1) / m > 1 - 2 * delta:
        raise CoarseGridError(
            f"no interval grid with k*eps > 1 - 2*delta exists at corner size {m}; refine n"
        )
    _repair_hypotheses(a1, a2, S1, S2, tol)
    a = np.concatenate([a1, a2])
    T = _block_operator(S1.entries, S2.entries)
    head = [int(i) for i in np.argsort(-a1, kind="stable")]
    partners = [m + int(i) for i in np.argsort(-a2, kind="stable")]
    U, strict_slots = _repair_stage(T, a, head, partners, tol)
    return U, DiagonalProjection(2 * m, head), DiagonalProjection(2 * m, strict_slots)


def eqm_refine(A1, A2, S1, S2, tol: float = 1e-9):
    """Settle the diagonal on a projection ``Q`` with ``tau(Q) > 1 - 2 tau(P)``.

    ``P`` is the first corner (``A1``, ``S1``); hypotheses as for
    :func:`sht2_step`, but the second corner may be larger. Stages of the
    two-block construction are cascaded through consecutive rank blocks of
    ``A2`` of sizes ``m, m-1, ..., m-k+1``. When ``tau(P) >= 1/2`` there is
    nothing to do and ``(I, 0)`` is returned.
    """
    a1, a2 = _diag_target(A1), _diag_target(A2)
    S1, S2 = as_operator(S1), as_operator(S2)
    m, n = a1.size, a1.size + a2.size
    if S1.n != m or S2.n != a2.size:
        raise ResolutionMismatch("block sizes of A and S do not match")
    dtype = np.result_type(S1.entries, S2.entries, float)
    if 2 * m >= n:
        return np.eye(n, dtype=dtype), DiagonalProjection(n)
    _repair_hypotheses(a1, a2, S1, S2, tol)
    a = np.concatenate([a1, a2])
    T = _block_operator(S1.entries, S2.entries)
    ranks2 = [m + int(i) for i in np.argsort(-a2, kind="stable")]
    # exact rank matching on the equimeasurable corner makes it diagonal
    R2, _ = _rank_match(S2.entries, a2)
    U = _lift(R2, list(range(m, n)), n, dtype)
    T = _conjugate(U, T)

    k = n // m - 1
    head = [int(i) for i in np.argsort(-a1, kind="stable")]
    settled = []
    start = 0
    for _ in range(k):
        size = len(head)
        if size == 0 or start + size > len(ranks2):
            break
        block = ranks2[start:start + size]
        Us, strict_slots = _repair_stage(T, a, head, block, tol)
        U = Us @ U
        T = _conjugate(Us, T)
        settled.extend(head)
        head = strict_slots
        start += size
    # ranks of A2 beyond the cascade were made exactly diagonal by the rank matching
    untouched = ranks2[start:]
    Q = DiagonalProjection(n, settled + untouched)
    if not Q.trace > 1 - 2 * m / n - 1 / n:
        raise CoarseGridError(f"cascade settles only tau(Q) = {Q.trace:.4g}; refine n")
    return U, Q


# ---------------------------------------------------------------- exact solve


def _strict_blocks(gap, lam, d, tol: float, eps: float):
    """Rank intervals between zeros of the Ky Fan gap that still need work."""
    n = d.size
    zeros = [k for k in range(1, n) if gap[k] <= tol]
    cuts = [0] + zeros + [n]
    blocks = [(lo, hi) for lo, hi in zip(cuts, cuts[1:]) if hi > lo]

    def needs_work(lo, hi):
        return np.max(np.abs(lam[lo:hi] - d[lo:hi])) > eps

    out, carry = [], None
    for lo, hi in blocks:
        if carry is not None:
            lo, carry = carry, None
        if hi - lo < 2 and needs_work(lo, hi):
            # a one-rank strict interval is a tolerance artefact: merge it
            if out:
                out[-1] = (out[-1][0], hi)
            else:
                carry = lo
            continue
        out.append((lo, hi))
    if carry is not None:
        out.append((carry, n))
    return [(lo, hi) for lo, hi in out if needs_work(lo, hi)]


def solve_exact(A, S, cfg: SolveConfig | None = None, return_info: bool = False):
    """Unitary ``U`` with ``diag(U S U*) = A``.

    Eigenvectors are first sent to slots by rank, which settles every rank
    where the two scales agree and turns ``S`` diagonal. The remaining ranks
    split at the zeros of the Ky Fan gap into strictly majorized blocks.
    Each round applies one strict half-step to every open block; a block
    that is too small, or that stops being strict, is finished by the orbit
    loop. With ``return_info`` the call returns ``(U, SolveInfo)``; the
    tail history records ``tau`` of the unsettled part after every round.
    """
    cfg = cfg or SolveConfig()
    a, S = _prepare(A, S)
    n = a.size
    rep = _require_majorized(np.diag(a), S, cfg.tol)
    dtype = np.result_type(S.entries, float)
    V0, lam = _rank_match(S.entries, a)
    U = V0
    T = _conjugate(V0, S.entries)
    order = np.argsort(-a, kind="stable")
    d = a[order]
    eps = 1e-12 * _scale(lam)
    blocks = (
        []
        if rep.relation is Relation.EQUIMEASURABLE and np.max(np.abs(lam - d)) <= eps
        else _strict_blocks(rep.gap_curve, lam, d, cfg.tol, eps)
    )
    open_blocks = [list(np.sort(order[lo:hi])) for lo, hi in blocks]
    unsettled = sum(len(b) for b in open_blocks)
    info = SolveInfo(residual=0.0, iterations=0)
    info.tail_history.append(unsettled / n)
    info.tau_P_history.append(1 - unsettled / n)
    budget = cfg.iteration_budget(n)
    while open_blocks:
        if info.iterations >= budget:
            mask = np.ones(n, dtype=bool)
            for b in open_blocks:
                mask[b] = False
            partial = PartialSolution(U, DiagonalProjection.from_mask(mask), np.eye(n, dtype=dtype),
                                      _residual(U, S.entries, a, mask))
            raise IterationLimitError(
                f"strict loop used its budget of {budget} rounds with {unsettled} slots unsettled",
                partial=partial,
            )
        next_blocks = []
        for slots in open_blocks:
            corner = T[np.ix_(slots, slots)]
            a_c = a[slots]
            try:
                ps = sh1part_step(np.diag(a_c), corner, cfg)
                Uc, keep = ps.U, [s for s, f in zip(slots, ps.P.mask) if not f]
            except (CoarseGridError, StrictnessError):
                Uo, _, Wo, _ = _orbit_loop(a_c, corner, cfg)
                Uc, keep = Wo @ Uo, []
            lift = _lift(Uc, slots, n, dtype)
            U = lift @ U
            T = _conjugate(lift, T)
            if keep:
                next_blocks.append(keep)
        open_blocks = next_blocks
        unsettled = sum(len(b) for b in open_blocks)
        info.iterations += 1
        info.tail_history.append(unsettled / n)
        info.tau_P_history.append(1 - unsettled / n)
    info.residual = _residual(U, S.entries, a)
    return (U, info) if return_info else U


def carpenter(d, cfg: SolveConfig | None = None, tol: float = 1e-9) -> np.ndarray:
    """Projection with prescribed diagonal ``d`` (entries in [0, 1], integer sum)."""
    d = np.asarray(d, dtype=float)
    if d.ndim != 1 or d.size == 0:
        raise ValueError("d must be a non-empty list")
    if np.any(d < -tol) or np.any(d > 1 + tol):
        raise ValueError("diagonal entries of a projection must lie in [0, 1]")
    total = d.sum()
    k = int(round(total))
    if abs(total - k) > tol * max(1, d.size):
        raise ValueError(f"the diagonal of a projection must sum to an integer, got {total:.12g}")
    d = np.clip(d, 0.0, 1.0)
    S = np.diag(np.concatenate([np.ones(k), np.zeros(d.size - k)]))
    U = solve_exact(np.diag(d), S, cfg)
    P = U @ S @ U.conj().T
    return (P + P.conj().T) / 2
