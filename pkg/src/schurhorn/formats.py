"""File formats: matrices, problem instances, measures, reports.

Every document is JSON. Floats are written with ``repr`` so they read back
bit-for-bit, and every write goes to a temporary file in the target
directory that is then renamed into place.
"""
from __future__ import annotations

import csv
import io
import json
import os
import sys
import tempfile

import numpy as np

from .oracle import InstanceSpec

MATRIX_KINDS = ("hermitian", "diagonal", "projection", "unitary")


class FormatError(ValueError):
    """A document does not have the expected shape."""


# ----------------------------------------------------------------- matrices


def matrix_to_doc(M, kind: str = "hermitian") -> dict:
    """``{"n", "kind", "entries"}``; diagonal kind stores a flat list of reals."""
    if kind not in MATRIX_KINDS:
        raise FormatError(f"unknown matrix kind {kind!r}")
    M = np.asarray(M)
    if kind == "diagonal":
        d = M if M.ndim == 1 else np.diag(M)
        return {"n": int(d.size), "kind": kind, "entries": [float(np.real(x)) for x in d]}
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise FormatError("matrix must be square")
    flat = M.reshape(-1)
    return {
        "n": int(M.shape[0]),
        "kind": kind,
        "entries": [[float(np.real(z)), float(np.imag(z))] for z in flat],
    }


def matrix_from_doc(doc: dict) -> np.ndarray:
    try:
        n, kind, entries = int(doc["n"]), doc["kind"], doc["entries"]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"matrix document needs n, kind and entries: {exc}") from None
    if kind not in MATRIX_KINDS:
        raise FormatError(f"unknown matrix kind {kind!r}")
    if kind == "diagonal":
        d = np.asarray(entries, dtype=float)
        if d.shape != (n,):
            raise FormatError(f"diagonal document with n={n} has {d.size} entries")
        return np.diag(d)
    z = np.asarray(entries, dtype=float)
    if z.shape != (n * n, 2):
        raise FormatError(f"matrix document with n={n} needs {n * n} [re, im] pairs")
    M = (z[:, 0] + 1j * z[:, 1]).reshape(n, n)
    if not np.any(z[:, 1]):
        M = M.real
    return M


# ----------------------------------------------------------------- problems


def pair_to_doc(A, S) -> dict:
    """A problem: target diagonal ``A`` and source operator ``S``."""
    return {"A": matrix_to_doc(A, "diagonal"), "S": matrix_to_doc(S, "hermitian")}


def load_problem(doc: dict):
    """``(A, S)`` from a pair document or an instance document."""
    if "A" in doc and "S" in doc:
        A, S = matrix_from_doc(doc["A"]), matrix_from_doc(doc["S"])
    elif "eigenvalues" in doc and "target_diagonal" in doc:
        spec = instance_from_doc(doc)
        A, S = spec.target(), spec.source()
    else:
        raise FormatError("expected a pair document (A, S) or an instance document")
    if A.shape != S.shape:
        raise FormatError(f"A is {A.shape[0]}x{A.shape[0]} but S is {S.shape[0]}x{S.shape[0]}")
    return A, S


def instance_from_doc(doc: dict) -> InstanceSpec:
    try:
        return InstanceSpec.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad instance document: {exc}") from None


# --------------------------------------------------------------- plain I/O


def read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def read_json(path: str) -> dict:
    try:
        return json.loads(read_text(path))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from None


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n"


def atomic_write(path: str | None, text: str) -> None:
    """Write ``text`` to ``path`` (stdout for ``None`` or ``-``) via rename."""
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: str | None, obj) -> None:
    atomic_write(path, dumps(obj))


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def read_csv(text: str):
    """``(header, rows)`` with rows parsed as floats."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty CSV document") from None
    try:
        rows = [[float(x) for x in row] for row in reader if row]
    except ValueError as exc:
        raise FormatError(f"non-numeric CSV entry: {exc}") from None
    if any(len(r) != len(header) for r in rows):
        raise FormatError("CSV rows do not match the header width")
    return header, np.asarray(rows, dtype=float).reshape(-1, len(header))
