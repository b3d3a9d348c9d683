"""Independent ground truth: instance generation, the classical rotation
construction of a matrix with given spectrum and diagonal, and definitional
checks of partial solutions.

Nothing here imports the solver; the rotation chain in particular is the
textbook finite-dimensional argument and is kept deliberately separate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import HermitianOperator, as_operator
from .errors import NotMajorizedError
from .majorization import classify


@dataclass
class InstanceSpec:
    """Eigenvalues of ``S`` and a target diagonal ``d`` with ``d`` majorized by them."""

    n: int
    eigenvalues: np.ndarray
    target_diagonal: np.ndarray
    seed: int | None = None
    transforms: int = 0

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        self.target_diagonal = np.asarray(self.target_diagonal, dtype=float)
        if self.eigenvalues.shape != (self.n,) or self.target_diagonal.shape != (self.n,):
            raise ValueError("eigenvalues and target_diagonal must both have length n")

    def source(self) -> np.ndarray:
        return np.diag(self.eigenvalues)

    def target(self) -> np.ndarray:
        return np.diag(self.target_diagonal)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "target_diagonal": [float(x) for x in self.target_diagonal],
            "seed": self.seed,
            "transforms": self.transforms,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "InstanceSpec":
        return cls(
            n=int(data["n"]),
            eigenvalues=data["eigenvalues"],
            target_diagonal=data["target_diagonal"],
            seed=data.get("seed"),
            transforms=int(data.get("transforms", 0)),
        )


def t_transform(d, i: int, j: int, t: float) -> np.ndarray:
    """Blend entries ``i`` and ``j``: ``(t d_i + (1-t) d_j, (1-t) d_i + t d_j)``."""
    d = np.array(d, dtype=float)
    di, dj = d[i], d[j]
    d[i] = t * di + (1 - t) * dj
    d[j] = (1 - t) * di + t * dj
    return d


def generate_instance(n: int, seed: int, transforms: int | None = None, scale: float = 1.0) -> InstanceSpec:
    """Random eigenvalues and a diagonal obtained from them by T-transforms.

    Each transform picks a random pair and a random blend in [0, 1], so the
    diagonal is majorized by the eigenvalues by construction.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    if transforms is None:
        transforms = 2 * n
    lam = np.sort(rng.uniform(0.0, scale, n))[::-1]
    d = lam.copy()
    if n > 1:
        for _ in range(transforms):
            i, j = rng.choice(n, size=2, replace=False)
            d = t_transform(d, i, j, rng.uniform())
    return InstanceSpec(n, lam, d, seed=seed, transforms=transforms if n > 1 else 0)


def strict_instance(n: int, seed: int, blend: float = 0.3, transforms: int | None = None) -> InstanceSpec:
    """Instance whose diagonal is strictly majorized by the eigenvalues.

    ``d = (1 - blend) lambda + blend * mean(lambda)`` followed by random
    T-transforms; with distinct eigenvalues the Ky Fan gap is positive at
    every interior grid point.
    """
    rng = np.random.default_rng(seed)
    lam = np.sort(rng.uniform(0.0, 1.0, n))[::-1]
    d = (1 - blend) * lam + blend * lam.mean()
    for _ in range(n if transforms is None else transforms):
        i, j = rng.choice(n, size=2, replace=False)
        d = t_transform(d, i, j, rng.uniform())
    return InstanceSpec(n, lam, d, seed=seed, transforms=n if transforms is None else transforms)


def haar_unitary(n: int, rng, complex_: bool = True) -> np.ndarray:
    """Haar-distributed unitary (orthogonal when ``complex_`` is false)."""
    X = rng.standard_normal((n, n))
    if complex_:
        X = X + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(X)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def is_majorized(d, lam, tol: float = 1e-9) -> bool:
    """Partial-sum test ``d`` majorized by ``lam`` for plain lists."""
    d = np.sort(np.asarray(d, dtype=float))[::-1]
    lam = np.sort(np.asarray(lam, dtype=float))[::-1]
    if d.shape != lam.shape:
        return False
    scale = max(1.0, float(np.abs(lam).max(initial=0.0)))
    if abs(d.sum() - lam.sum()) > tol * scale * d.size:
        return False
    return bool(np.all(np.cumsum(d) <= np.cumsum(lam) + tol * scale * d.size))


def _rotation_angle(x_j: float, x_k: float, b: float, target: float) -> float:
    """Angle with ``c^2 x_j + s^2 x_k + 2 c s b = target`` in [0, pi/2]."""
    # new entry = m + r cos(2 theta - phi)
    m = (x_j + x_k) / 2
    r = np.hypot((x_j - x_k) / 2, b)
    if r == 0:
        return 0.0
    phi = np.arctan2(b, (x_j - x_k) / 2)
    acos = np.arccos(np.clip((target - m) / r, -1.0, 1.0))
    for two_theta in (phi + acos, phi - acos, phi + acos - 2 * np.pi, phi - acos + 2 * np.pi):
        if -1e-12 <= two_theta <= np.pi + 1e-12:
            return float(np.clip(two_theta, 0.0, np.pi)) / 2
    raise NotMajorizedError("no rotation reaches the requested diagonal entry")


def classical_construct(spec: InstanceSpec, tol: float = 1e-9) -> HermitianOperator:
    """Real symmetric matrix with eigenvalues ``spec.eigenvalues`` and diagonal ``spec.target_diagonal``.

    Works on sorted lists: repeatedly take the last index ``j`` where the
    current diagonal exceeds the target and the first later index ``k``
    where it falls short, and rotate in the ``(j, k)`` plane to move
    ``min(x_j - d_j, d_k - x_k)`` from ``j`` to ``k``. Every rotation settles
    one more entry, so at most ``n - 1`` rotations are needed.
    """
    lam = np.sort(spec.eigenvalues)[::-1]
    order = np.argsort(-spec.target_diagonal, kind="stable")
    d = spec.target_diagonal[order]
    if not is_majorized(d, lam, tol):
        raise NotMajorizedError("target diagonal is not majorized by the eigenvalues")
    n = spec.n
    M = np.diag(lam).astype(float)
    scale = max(1.0, float(np.abs(lam).max(initial=0.0)))
    eps = tol * scale
    for _ in range(n):
        x = np.diag(M)
        over = np.flatnonzero(x - d > eps)
        if over.size == 0:
            break
        j = int(over[-1])
        under = [k for k in range(j + 1, n) if d[k] - x[k] > eps]
        if not under:
            break
        k = under[0]
        delta = min(x[j] - d[j], d[k] - x[k])
        theta = _rotation_angle(x[j], x[k], M[j, k], x[j] - delta)
        c, s = np.cos(theta), np.sin(theta)
        G = np.eye(n)
        G[j, j], G[j, k], G[k, j], G[k, k] = c, s, -s, c
        M = G @ M @ G.T
        M = (M + M.T) / 2
    # place the sorted diagonal into the requested slot order
    inverse = np.empty(n, dtype=int)
    inverse[order] = np.arange(n)
    M = M[np.ix_(inverse, inverse)]
    return HermitianOperator(M)


@dataclass
class CheckResult:
    name: str
    passed: bool
    residual: float


@dataclass
class PartialSolutionReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed(self):
        return [c.name for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {c.name: {"passed": c.passed, "residual": c.residual} for c in self.checks}


def _projection_matrix(P, n: int) -> np.ndarray:
    if hasattr(P, "matrix"):
        return P.matrix()
    P = np.asarray(P)
    if P.ndim == 1:
        return np.diag(P.astype(float))
    return P


def check_partial_solution(A, S, ps, tol: float = 1e-8) -> PartialSolutionReport:
    """Recompute the partial-solution contract from scratch.

    ``ps`` needs attributes ``U``, ``P`` (slot projection) and ``Q``
    (projection matrix or slot projection). Checks: unitarity, the
    diagonal on ``P``, majorization of the remainder corner, the trace
    bound ``tau(Q) <= 4 tau(P) + 1/n``, ``P <= Q``, and that ``U - I`` is
    supported in ``Q``.
    """
    A, S = as_operator(A), as_operator(S)
    n = A.n
    U = np.asarray(ps.U)
    Pm = _projection_matrix(ps.P, n)
    Qm = _projection_matrix(ps.Q, n)
    p_mask = np.real(np.diag(Pm)) > 0.5
    I = np.eye(n)
    report = PartialSolutionReport()

    unit = float(np.max(np.abs(U.conj().T @ U - I)))
    report.checks.append(CheckResult("unitary", unit <= tol, unit))

    T = U @ S.entries @ U.conj().T
    a = A.diagonal()
    diag_err = float(np.max(np.abs(np.real(np.diag(T))[p_mask] - a[p_mask]), initial=0.0))
    report.checks.append(CheckResult("diagonal", diag_err <= tol, diag_err))

    rest = ~p_mask
    if rest.any():
        corner = T[np.ix_(rest, rest)]
        rel = classify(np.diag(a[rest]), (corner + corner.conj().T) / 2, tol=tol)
        ok = rel.relation.majorized
        report.checks.append(CheckResult("remainder_majorized", ok, float(rel.slack)))
    else:
        report.checks.append(CheckResult("remainder_majorized", True, 0.0))

    tau_P = p_mask.sum() / n
    tau_Q = float(np.real(np.trace(Qm))) / n
    excess = tau_Q - 4 * tau_P
    report.checks.append(CheckResult("locality_trace", excess <= 1.0 / n + 1e-12, excess))

    below = float(np.max(np.abs(Qm @ Pm - Pm)))
    report.checks.append(CheckResult("P_below_Q", below <= tol, below))

    support = float(np.max(np.abs((I - Qm) @ (U - I))))
    report.checks.append(CheckResult("locality_support", support <= tol, support))
    return report


def level_instance(n: int, k: int, seed: int, max_tries: int = 1000) -> InstanceSpec:
    """Instance whose diagonal takes at most ``k`` values, reachable with a half-slot refinement.

    Eigenvalues are distinct. Level set ``m`` (``c_m`` slots) receives the
    quantile window ``[u_m, u_m + c_m/n]`` of what remains of the sorted
    eigenvalue distribution, with ``u_m`` on the grid ``1/(2n)``; windows are
    drawn until their means come out strictly decreasing. The diagonal is
    then an average of the eigenvalues over pieces of the spectral measure,
    hence majorized by them.
    """
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    rng = np.random.default_rng(seed)
    lam = np.sort(rng.uniform(0.0, 1.0, n))[::-1]
    half = 2 * n  # quantile grid in half slots
    for _ in range(max_tries):
        cuts = np.sort(rng.choice(np.arange(1, n), size=k - 1, replace=False)) if k > 1 else np.array([], int)
        sizes = np.diff(np.concatenate(([0], cuts, [n])))
        halves = np.repeat(lam, 2)  # each eigenvalue as two half-slot atoms
        alive = np.ones(half, dtype=bool)
        means = []
        for m, c in enumerate(sizes):
            live = np.flatnonzero(alive)
            if m == len(sizes) - 1:
                take = live
            else:
                start = int(rng.integers(0, live.size - 2 * c + 1))
                take = live[start:start + 2 * c]
            means.append(halves[take].mean())
            alive[take] = False
        if np.all(np.diff(means) < -1e-9):
            d = np.repeat(means, sizes)
            return InstanceSpec(n, lam, rng.permutation(d), seed=seed, transforms=0)
    raise RuntimeError("could not draw decreasing window means")
