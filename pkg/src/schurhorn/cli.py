"""Command-line front end.

Subcommands: ``scale``, ``classify``, ``solve``, ``carpenter``, ``split``,
``generate`` and ``verify``. Exit status: 0 success, 1 a contract check
failed, 2 invalid input, 3 an iteration or refinement budget ran out.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import formats
from .choquet import AtomicMeasure, SplitTarget, finite_spectrum_solve, measure_split
from .core import eigenvalues
from .errors import IterationLimitError, RefinementError, SchurHornError
from .majorization import classify, spectral_scale
from .oracle import generate_instance, is_majorized
from .solver import SolveConfig, carpenter, solve_exact, solve_orbit

EXIT_OK, EXIT_CONTRACT, EXIT_INPUT, EXIT_EXHAUSTED = 0, 1, 2, 3

COMMANDS = ("scale", "classify", "solve", "carpenter", "split", "generate", "verify")
SCALE_HEADER = ["t", "value"]
CURVE_HEADER = ["t", "F_A", "F_S", "gap"]


@dataclass
class RunManifest:
    command: str
    input: str | None
    output: str | None
    report: str | None
    cfg: SolveConfig
    mode: str = "exact"
    n: int | None = None
    seed: int = 0
    refine_cap: int = 64

    @classmethod
    def from_args(cls, args) -> "RunManifest":
        cfg = SolveConfig(tol=args.tol, max_outer_iterations=args.max_iters)
        if args.refine_cap < 1:
            raise ValueError("--refine-cap must be at least 1")
        if args.command in ("scale", "classify", "solve", "carpenter", "split", "verify") and not args.input:
            raise ValueError(f"{args.command} needs --input")
        if args.command == "generate" and (args.n is None or args.n < 1):
            raise ValueError("generate needs --n >= 1")
        return cls(args.command, args.input, args.output, args.report, cfg,
                   args.mode, args.n, args.seed, args.refine_cap)


class ContractFailure(Exception):
    def __init__(self, report: dict):
        self.report = report
        super().__init__("contract check failed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="schurhorn", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--input", help="input document (- for stdin)")
    parser.add_argument("--output", help="output file (default: stdout)")
    parser.add_argument("--report", help="summary / diagnostics document")
    parser.add_argument("--n", type=int, help="resolution for generate")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--tol", type=float, default=1e-8)
    parser.add_argument("--mode", choices=("exact", "orbit", "levels"), default="exact")
    parser.add_argument("--max-iters", type=int, default=None,
                        help="iteration budget (default 64*ceil(log2 n))")
    parser.add_argument("--refine-cap", type=int, default=64)
    return parser


# ------------------------------------------------------------------ checks


def _check(checks: dict, name: str, residual: float, limit: float):
    checks[name] = {"passed": bool(residual <= limit), "residual": float(residual)}


def _report(artifact: str, checks: dict) -> dict:
    return {"artifact": artifact, "passed": all(c["passed"] for c in checks.values()), "checks": checks}


def _solution_checks(U, A, S, tol: float) -> dict:
    n = U.shape[0]
    T = U @ S @ U.conj().T
    checks = {}
    _check(checks, "unitary", float(np.max(np.abs(U.conj().T @ U - np.eye(n)))), tol)
    _check(checks, "diagonal", float(np.max(np.abs(np.real(np.diag(T)) - np.real(np.diag(A))))), tol)
    scale = max(1.0, float(np.max(np.abs(np.diag(A)))))
    spec = float(np.max(np.abs(eigenvalues((T + T.conj().T) / 2) - eigenvalues(S))))
    _check(checks, "spectrum", spec, tol * scale)
    return checks


def verify_solution(doc: dict) -> dict:
    tol = float(doc.get("tol", 1e-8))
    A, S = formats.load_problem(doc["instance"])
    r = int(doc.get("refinement", 1))
    if r > 1:
        A, S = np.kron(A, np.eye(r)), np.kron(S, np.eye(r))
    U = formats.matrix_from_doc(doc["unitary"])
    if U.shape != S.shape:
        raise formats.FormatError("unitary does not match the instance resolution")
    checks = _solution_checks(U, A, S, tol)
    measured = checks["diagonal"]["residual"]
    _check(checks, "claimed_residual", abs(float(doc["residual"]) - measured), 1e-10)
    return _report("solve", checks)


def verify_projection(doc: dict) -> dict:
    P = formats.matrix_from_doc(doc)
    tol = float(doc.get("tol", 1e-8))
    checks = {}
    _check(checks, "hermitian", float(np.max(np.abs(P - P.conj().T))), 1e-12)
    _check(checks, "idempotent", float(np.max(np.abs(P @ P - P))), 1e-9)
    if "target_diagonal" in doc:
        d = np.asarray(doc["target_diagonal"], dtype=float)
        _check(checks, "diagonal", float(np.max(np.abs(np.real(np.diag(P)) - d))), tol)
    return _report("projection", checks)


def verify_split(doc: dict) -> dict:
    source = AtomicMeasure.from_dict(doc["source"])
    parts = [(float(m), float(c)) for m, c in doc["parts"]]
    pieces = [np.asarray(p["atoms"], dtype=float).reshape(-1, 2) for p in doc["pieces"]]
    if len(pieces) != len(parts):
        raise formats.FormatError("split document has a different number of parts and pieces")
    checks = {}
    worst = min((float(p[:, 1].min()) for p in pieces if p.size), default=0.0)
    _check(checks, "nonnegative", max(0.0, -worst), 0.0)
    total = {v: 0.0 for v, _ in source.atoms}
    stray = 0.0
    for p in pieces:
        for v, m in p:
            if v in total:
                total[v] += m
            else:
                stray += abs(m)
    conservation = max([abs(total[v] - m) for v, m in source.atoms] + [stray])
    _check(checks, "conservation", conservation, 1e-10)
    _check(checks, "masses", max(abs(p[:, 1].sum() - m) for p, (m, _) in zip(pieces, parts)), 1e-10)
    _check(checks, "means", max(abs(p[:, 0] @ p[:, 1] - m * c) for p, (m, c) in zip(pieces, parts)), 1e-9)
    return _report("split", checks)


def verify_instance(doc: dict) -> dict:
    spec = formats.instance_from_doc(doc)
    checks = {}
    lam, d = np.sort(spec.eigenvalues)[::-1], np.sort(spec.target_diagonal)[::-1]
    scale = max(1.0, float(np.max(np.abs(lam))))
    _check(checks, "trace", abs(lam.sum() - d.sum()), 1e-9 * scale * spec.n)
    deficit = float(np.max(np.cumsum(d) - np.cumsum(lam)))
    checks["majorized"] = {"passed": is_majorized(d, lam), "residual": max(0.0, deficit)}
    return _report("instance", checks)


def verify_classification(doc: dict) -> dict:
    A, S = formats.load_problem(doc["instance"])
    rep = classify(A, S, tol=float(doc.get("tol", 1e-9)))
    checks = {
        "relation": {"passed": rep.relation.value == doc["relation"], "residual": 0.0},
    }
    _check(checks, "slack", abs(rep.slack - float(doc["slack"])), 1e-12)
    _check(checks, "trace_gap", abs(rep.trace_gap - float(doc["trace_gap"])), 1e-12)
    return _report("classification", checks)


def _concavity_defect(F):
    inc = np.diff(F)
    return float(np.max(np.diff(inc), initial=0.0))


def verify_csv(text: str) -> dict:
    header, rows = formats.read_csv(text)
    checks = {}
    if header == SCALE_HEADER:
        n = rows.shape[0]
        _check(checks, "grid", float(np.max(np.abs(rows[:, 0] - np.arange(n) / n), initial=0.0)), 1e-15)
        _check(checks, "non_increasing", float(np.max(np.diff(rows[:, 1]), initial=0.0)), 0.0)
        return _report("scale", checks)
    if header == CURVE_HEADER:
        n = rows.shape[0] - 1
        if n < 1:
            raise formats.FormatError("Ky Fan CSV needs at least two rows")
        t, FA, FS, gap = rows.T
        _check(checks, "grid", float(np.max(np.abs(t - np.arange(n + 1) / n))), 1e-15)
        _check(checks, "origin", max(abs(FA[0]), abs(FS[0])), 0.0)
        _check(checks, "gap", float(np.max(np.abs(FS - FA - gap))), 1e-12)
        _check(checks, "concave", max(_concavity_defect(FA), _concavity_defect(FS)), 1e-12)
        return _report("ky_fan_curve", checks)
    raise formats.FormatError(f"unrecognised CSV header {header}")


def verify_document(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        return verify_csv(text)
    if not isinstance(doc, dict):
        raise formats.FormatError("expected a JSON object")
    try:
        if "unitary" in doc and "instance" in doc:
            return verify_solution(doc)
        if doc.get("kind") == "projection":
            return verify_projection(doc)
        if "pieces" in doc:
            return verify_split(doc)
        if "relation" in doc:
            return verify_classification(doc)
        if "eigenvalues" in doc:
            return verify_instance(doc)
    except (KeyError, TypeError) as exc:
        raise formats.FormatError(f"malformed document: missing {exc}") from None
    raise formats.FormatError("cannot tell what kind of artifact this is")


# ---------------------------------------------------------------- commands


def cmd_scale(m: RunManifest):
    doc = formats.read_json(m.input)
    S = formats.load_problem(doc)[1] if ("S" in doc or "eigenvalues" in doc) else formats.matrix_from_doc(doc)
    values = spectral_scale(S).values
    n = values.size
    formats.atomic_write(m.output, formats.csv_text(SCALE_HEADER, ((i / n, v) for i, v in enumerate(values))))


def cmd_classify(m: RunManifest):
    doc = formats.read_json(m.input)
    A, S = formats.load_problem(doc)
    tol = 1e-9
    rep = classify(A, S, tol=tol)
    formats.atomic_write(m.output, formats.csv_text(CURVE_HEADER, rep.csv_rows()))
    summary = dict(rep.summary(), tol=tol, instance=formats.pair_to_doc(A, S))
    if m.report:
        formats.write_json(m.report, summary)
    elif m.output:
        formats.write_json(None, rep.summary())


def cmd_solve(m: RunManifest):
    A, S = formats.load_problem(formats.read_json(m.input))
    cfg = m.cfg
    history, refinement = [], 1
    if m.mode == "exact":
        U, info = solve_exact(A, S, cfg, return_info=True)
        iterations, history = info.iterations, info.tau_P_history
    elif m.mode == "orbit":
        history = [0.0]
        U, _, W = solve_orbit(A, S, cfg, callback=lambda k, U_k, P_k: history.append(P_k.trace))
        U = W @ U
        iterations = len(history) - 1
    else:
        sol = finite_spectrum_solve(A, S, cfg, refine_cap=m.refine_cap)
        U, refinement, iterations = sol.U, sol.refinement, 0
    A_r, S_r = (np.kron(A, np.eye(refinement)), np.kron(S, np.eye(refinement))) if refinement > 1 else (A, S)
    checks = _solution_checks(U, A_r, S_r, cfg.tol)
    doc = {
        "mode": m.mode,
        "tol": cfg.tol,
        "residual": checks["diagonal"]["residual"],
        "iterations": int(iterations),
        "tau_P_history": [float(x) for x in history],
        "refinement": int(refinement),
        "unitary": formats.matrix_to_doc(U, "unitary"),
        "instance": formats.pair_to_doc(A, S),
    }
    formats.write_json(m.output, doc)
    rep = _report("solve", checks)
    if not rep["passed"]:
        raise ContractFailure(rep)


def cmd_carpenter(m: RunManifest):
    D = formats.matrix_from_doc(formats.read_json(m.input))
    d = np.real(np.diag(D))
    P = carpenter(d, m.cfg)
    doc = formats.matrix_to_doc(P, "projection")
    doc["target_diagonal"] = [float(x) for x in d]
    doc["tol"] = m.cfg.tol
    formats.write_json(m.output, doc)
    rep = verify_projection(doc)
    if not rep["passed"]:
        raise ContractFailure(rep)


def cmd_split(m: RunManifest):
    doc = formats.read_json(m.input)
    try:
        mu = AtomicMeasure.from_dict(doc)
        target = SplitTarget(tuple((m_, c) for m_, c in doc["parts"]))
    except (KeyError, TypeError) as exc:
        raise formats.FormatError(f"split input needs atoms and parts: {exc}") from None
    pieces = measure_split(mu, target)
    out = {
        "source": mu.to_dict(),
        "parts": [[m_, c] for m_, c in target.parts],
        "pieces": [p.to_dict() for p in pieces],
    }
    formats.write_json(m.output, out)


def cmd_generate(m: RunManifest):
    formats.write_json(m.output, generate_instance(m.n, m.seed).to_dict())


def cmd_verify(m: RunManifest):
    rep = verify_document(formats.read_text(m.input))
    formats.write_json(m.report, rep)
    if not rep["passed"]:
        raise ContractFailure(rep)


HANDLERS = {
    "scale": cmd_scale,
    "classify": cmd_classify,
    "solve": cmd_solve,
    "carpenter": cmd_carpenter,
    "split": cmd_split,
    "generate": cmd_generate,
    "verify": cmd_verify,
}


def _diagnostic(kind: str, message: str, **extra):
    sys.stderr.write(json.dumps({"error": kind, "message": message, **extra}, sort_keys=True) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = RunManifest.from_args(args)
        HANDLERS[manifest.command](manifest)
    except ContractFailure as exc:
        failed = [k for k, c in exc.report["checks"].items() if not c["passed"]]
        _diagnostic("contract", "contract check failed", failed=failed)
        return EXIT_CONTRACT
    except (IterationLimitError, RefinementError) as exc:
        _diagnostic("exhausted", str(exc))
        return EXIT_EXHAUSTED
    except (SchurHornError, ValueError, OSError) as exc:
        _diagnostic("invalid_input", str(exc))
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
