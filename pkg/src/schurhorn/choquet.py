"""Splitting atomic spectral measures by mass and barycenter.

When the target diagonal takes finitely many values, solving reduces to
cutting the spectral measure of ``S`` into pieces with the masses and means
of the level sets of ``A``; each piece then only has to be brought to a
constant diagonal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import as_operator, spectral_decomposition
from .errors import InfeasibleSplitError, RefinementError, ResolutionMismatch
from .solver import SolveConfig, _diag_target, solve_exact

MASS_TOL = 1e-10
MEAN_TOL = 1e-9


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely many atoms ``(value, mass)`` with positive masses."""

    atoms: tuple

    def __post_init__(self):
        atoms = tuple((float(v), float(m)) for v, m in self.atoms)
        for v, m in atoms:
            if not math.isfinite(v):
                raise ValueError("atom values must be finite")
            if not m > 0:
                raise ValueError("atom masses must be positive")
        if sum(m for _, m in atoms) > 1 + MASS_TOL:
            raise ValueError("total mass exceeds 1")
        object.__setattr__(self, "atoms", atoms)

    @property
    def values(self) -> np.ndarray:
        return np.array([v for v, _ in self.atoms])

    @property
    def masses(self) -> np.ndarray:
        return np.array([m for _, m in self.atoms])

    @property
    def mass(self) -> float:
        return float(self.masses.sum())

    @property
    def first_moment(self) -> float:
        return float(np.dot(self.values, self.masses)) if self.atoms else 0.0

    @property
    def mean(self) -> float:
        return self.first_moment / self.mass

    def sorted(self) -> "AtomicMeasure":
        return AtomicMeasure(tuple(sorted(self.atoms, key=lambda a: -a[0])))

    def to_dict(self) -> dict:
        return {"atoms": [[v, m] for v, m in self.atoms]}

    @classmethod
    def from_dict(cls, data: dict) -> "AtomicMeasure":
        return cls(tuple((v, m) for v, m in data["atoms"]))


@dataclass(frozen=True)
class SplitTarget:
    """Parts ``(mass, mean)`` to cut a measure into."""

    parts: tuple

    def __post_init__(self):
        parts = tuple((float(m), float(c)) for m, c in self.parts)
        if any(not m > 0 for m, _ in parts):
            raise ValueError("part masses must be positive")
        object.__setattr__(self, "parts", parts)

    @property
    def mass(self) -> float:
        return sum(m for m, _ in self.parts)

    @property
    def first_moment(self) -> float:
        return sum(m * c for m, c in self.parts)


def spectral_measure(S, tol: float = 1e-9) -> AtomicMeasure:
    """Distribution of eigenvalues of ``S`` under ``tau``; near-equal eigenvalues are merged."""
    S = as_operator(S)
    lam, _ = spectral_decomposition(S)
    groups = _group_levels(lam, tol)
    return AtomicMeasure(tuple((float(lam[g].mean()), len(g) / S.n) for g in groups))


def level_target(A, tol: float = 1e-12) -> SplitTarget:
    """Masses and values of the level sets of a diagonal operator."""
    a = _diag_target(A)
    srt = np.sort(a)[::-1]
    groups = _group_levels(srt, tol)
    return SplitTarget(tuple((len(g) / a.size, float(srt[g].mean())) for g in groups))


def _group_levels(sorted_desc, tol):
    groups, start = [], 0
    for i in range(1, len(sorted_desc) + 1):
        if i == len(sorted_desc) or sorted_desc[start] - sorted_desc[i] > tol:
            groups.append(list(range(start, i)))
            start = i
    return groups


def _ky_fan_points(values, masses):
    """Breakpoints of the running integral of the decreasing rearrangement."""
    order = np.argsort(-np.asarray(values), kind="stable")
    v, m = np.asarray(values)[order], np.asarray(masses)[order]
    x = np.concatenate(([0.0], np.cumsum(m)))
    y = np.concatenate(([0.0], np.cumsum(v * m)))
    return x, y


def measure_majorized(nu, mu, tol: float = MEAN_TOL, balanced: bool = True):
    """Check that the step scale of ``nu`` is majorized by that of ``mu``.

    ``nu`` may be an :class:`AtomicMeasure` or a :class:`SplitTarget`. With
    ``balanced=False`` only submajorization is required (the first moments
    may differ). Returns ``(ok, index)`` where ``index`` is the first
    violated breakpoint of ``nu``'s running integral.
    """
    if isinstance(nu, SplitTarget):
        nv, nm = [c for _, c in nu.parts], [m for m, _ in nu.parts]
    else:
        nv, nm = nu.values, nu.masses
    xa, ya = _ky_fan_points(nv, nm)
    xs, ys = _ky_fan_points(mu.values, mu.masses)
    if abs(xa[-1] - xs[-1]) > MASS_TOL:
        return False, len(xa) - 1
    if balanced and abs(ya[-1] - ys[-1]) > tol:
        return False, len(xa) - 1
    # concave piecewise-linear curves: comparing at all breakpoints suffices
    grid = np.union1d(xa, xs)
    fa = np.interp(grid, xa, ya)
    fs = np.interp(grid, xs, ys)
    bad = np.flatnonzero(fa > fs + tol)
    if bad.size:
        index = int(np.searchsorted(xa, grid[bad[0]], side="left"))
        return False, index
    return True, None


def _window_start(x, y, width: float, target_mean: float) -> float:
    """Smallest ``u`` with mean of the quantile window ``[u, u + width]`` equal to ``target_mean``."""
    total = x[-1]
    hi_u = max(0.0, total - width)
    cands = np.concatenate((x, x - width, [0.0, hi_u]))
    cands = np.unique(np.clip(cands, 0.0, hi_u))

    def avg(u):
        return (np.interp(u + width, x, y) - np.interp(u, x, y)) / width

    vals = np.array([avg(u) for u in cands])
    if vals[0] <= target_mean:
        return 0.0
    for i in range(1, cands.size):
        if vals[i] <= target_mean:
            u0, u1, v0, v1 = cands[i - 1], cands[i], vals[i - 1], vals[i]
            if v0 == v1:
                return float(u0)
            return float(u0 + (v0 - target_mean) * (u1 - u0) / (v0 - v1))
    return float(hi_u)


def measure_split(mu: AtomicMeasure, target: SplitTarget, tol: float = MEAN_TOL):
    """Cut ``mu`` into pieces with the masses and means of ``target``.

    Targets are handled by decreasing mean. Each piece is a contiguous
    quantile window of what is left of ``mu`` (values sorted downward),
    placed as high as possible subject to having the prescribed mean; the
    last piece takes the exact remainder. The result is checked before it
    is returned. Pieces are listed in the order of ``target.parts``; every
    piece is an :class:`AtomicMeasure` over a subset of ``mu``'s values.
    """
    if abs(target.mass - mu.mass) > MASS_TOL:
        raise InfeasibleSplitError(
            f"target masses sum to {target.mass:.12g}, the measure has mass {mu.mass:.12g}", index=None
        )
    if abs(target.first_moment - mu.first_moment) > tol:
        raise InfeasibleSplitError("target barycenter differs from the measure's barycenter", index=None)
    ok, index = measure_majorized(target, mu, tol)
    if not ok:
        raise InfeasibleSplitError(f"majorization fails at partial sum {index}", index=index)

    src = mu.sorted()
    values = src.values
    remaining = src.masses.copy()
    pieces = [None] * len(target.parts)
    order = sorted(range(len(target.parts)), key=lambda i: -target.parts[i][1])
    for step, i in enumerate(order):
        mass, mean = target.parts[i]
        if step == len(order) - 1:
            take = remaining.copy()
        else:
            live = remaining > 0
            x = np.concatenate(([0.0], np.cumsum(remaining[live])))
            y = np.concatenate(([0.0], np.cumsum(values[live] * remaining[live])))
            u = _window_start(x, y, mass, mean)
            overlap = np.clip(np.minimum(x[1:], u + mass) - np.maximum(x[:-1], u), 0.0, None)
            take = np.zeros_like(remaining)
            take[live] = np.minimum(overlap, remaining[live])
        remaining = remaining - take
        remaining[np.abs(remaining) < 1e-15] = 0.0
        pieces[i] = take

    _verify_split(src, target, pieces, tol)
    return [
        AtomicMeasure(tuple((float(v), float(m)) for v, m in zip(values, piece) if m > 0))
        for piece in pieces
    ]


def _verify_split(src, target, pieces, tol):
    total = np.sum(pieces, axis=0)
    if np.max(np.abs(total - src.masses)) > MASS_TOL or np.min(pieces) < -1e-15:
        raise InfeasibleSplitError("split does not conserve the source measure", index=None)
    for k, ((mass, mean), piece) in enumerate(zip(target.parts, pieces)):
        got = piece.sum()
        if abs(got - mass) > MASS_TOL or abs(np.dot(src.values, piece) - mass * mean) > tol * max(1.0, mass):
            raise InfeasibleSplitError(f"piece {k} misses its mass or mean", index=k)


@dataclass
class FiniteSpectrumSolution:
    """``diag(U S_r U*) = A_r`` with ``X_r = X (x) I_refinement``."""

    U: np.ndarray
    refinement: int
    A: np.ndarray
    S: np.ndarray
    residual: float


def _refinement_factor(piece_counts, cap: int) -> int:
    """Least ``r`` making every piece count (in slots) an integer."""
    r = 1
    for c in piece_counts:
        frac = Fraction(float(c)).limit_denominator(cap)
        if abs(float(frac) - c) > 1e-9:
            raise RefinementError(f"piece size {c:.12g} slots needs a refinement beyond {cap}")
        r = r * frac.denominator // math.gcd(r, frac.denominator)
        if r > cap:
            raise RefinementError(f"refinement factor {r} exceeds the cap {cap}")
    return r


def finite_spectrum_solve(A, S, cfg: SolveConfig | None = None, refine_cap: int = 64) -> FiniteSpectrumSolution:
    """Solve for a target diagonal with finitely many values through a measure split.

    The spectral measure of ``S`` is cut into pieces matching the level sets
    of ``A``. When a piece needs a fraction of an eigenvalue's multiplicity
    both operators are refined by ``X -> X (x) I_r``. Eigenvectors are then
    sent piecewise onto the level sets, and each block only needs a constant
    diagonal.
    """
    cfg = cfg or SolveConfig()
    a = _diag_target(A)
    S = as_operator(S)
    n = a.size
    if S.n != n:
        raise ResolutionMismatch(f"resolution mismatch: {n} vs {S.n}")
    lam, V = spectral_decomposition(S)
    groups = _group_levels(lam, 1e-9 * max(1.0, abs(lam[0])))
    mu = AtomicMeasure(tuple((float(lam[g].mean()), len(g) / n) for g in groups))
    level_groups = _group_levels(np.sort(a)[::-1], 1e-12)
    srt = np.sort(a)[::-1]
    target = SplitTarget(tuple((len(g) / n, float(srt[g].mean())) for g in level_groups))
    pieces = measure_split(mu, target, tol=max(MEAN_TOL, cfg.tol))

    # piece masses in slots of the original resolution, atoms in mu's (sorted) order
    mu_sorted = mu.sorted()
    counts = [[m * n for m in _masses_on(mu_sorted, piece)] for piece in pieces]
    r = _refinement_factor([c for row in counts for c in row], refine_cap)
    N = n * r
    a_r = np.repeat(a, r)
    S_r = np.kron(S.entries, np.eye(r))
    V_r = np.kron(V, np.eye(r))

    # eigen-columns of each atom at the refined resolution, in rank order
    atom_cols, start = [], 0
    for g in groups:
        atom_cols.append(list(range(start * r, (start + len(g)) * r)))
        start += len(g)
    cursor = [0] * len(groups)
    BS_cols, BA_cols, blocks = [], [], []
    for k, (mass, mean) in enumerate(target.parts):
        slots = [i for i in range(N) if abs(a_r[i] - mean) <= 1e-12 * max(1.0, abs(mean))]
        cols = []
        for j, c in enumerate(counts[k]):
            take = int(round(c * r))
            cols.extend(atom_cols[j][cursor[j]:cursor[j] + take])
            cursor[j] += take
        if len(cols) != len(slots):
            raise RefinementError(f"level set {k} has {len(slots)} slots but receives {len(cols)} eigenvectors")
        BS_cols.extend(cols)
        BA_cols.extend(slots)
        blocks.append((slots, mean))
    E = np.eye(N)
    U = E[:, BA_cols] @ V_r[:, BS_cols].conj().T
    T = U @ S_r @ U.conj().T
    T = (T + T.conj().T) / 2
    for slots, mean in blocks:
        corner = T[np.ix_(slots, slots)]
        Ub = solve_exact(np.full(len(slots), mean), corner, cfg)
        lift = np.eye(N, dtype=np.result_type(Ub, U))
        lift[np.ix_(slots, slots)] = Ub
        U = lift @ U
        T = lift @ T @ lift.conj().T
        T = (T + T.conj().T) / 2
    residual = float(np.max(np.abs(np.real(np.diag(U @ S_r @ U.conj().T)) - a_r)))
    return FiniteSpectrumSolution(U, r, np.diag(a_r), S_r, residual)


def _masses_on(mu_sorted: AtomicMeasure, piece: AtomicMeasure):
    lookup = {v: m for v, m in piece.atoms}
    return [lookup.get(v, 0.0) for v, _ in mu_sorted.atoms]
