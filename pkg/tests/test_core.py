import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from schurhorn.core import (
    DiagonalProjection,
    HermitianOperator,
    TraceContext,
    equimeasurable,
    pinch,
    spectral_decomposition,
    spectral_projection,
    trace,
)
from schurhorn.errors import NegativeSpectrumError, NotHermitianError, ResolutionMismatch
from schurhorn.majorization import classify, ky_fan, spectral_scale

from conftest import random_psd, random_unitary


def test_trace_identity_and_diagonal_mean():
    assert trace(np.eye(4)) == 1
    assert trace(np.diag([3.0, 1.0])) == 2


def test_trace_matches_eigenvalue_mean(rng):
    M = random_psd(rng, 8, complex_=True)
    assert abs(trace(M) - np.mean(np.linalg.eigvalsh(M))) <= 1e-12


def test_trace_context_normalized():
    assert TraceContext(5)(np.eye(5)) == 1.0
    with pytest.raises(ValueError):
        TraceContext(0)


def test_non_hermitian_rejected():
    with pytest.raises(NotHermitianError):
        HermitianOperator(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(NotHermitianError):
        HermitianOperator(np.ones((2, 3)))


def test_negative_spectrum_detected():
    with pytest.raises(NegativeSpectrumError):
        HermitianOperator.diag([1.0, -0.5]).check_positive()


def test_real_input_stays_real():
    assert HermitianOperator(np.array([[2.0, -1.0], [-1.0, 2.0]])).entries.dtype == float


def test_pinch_examples():
    D = np.diag([4.0, 1.0, 2.0])
    assert np.array_equal(pinch(D).entries, D)
    assert np.array_equal(pinch([[2, -1], [-1, 2]]).entries, np.diag([2.0, 2.0]))


def test_pinch_is_majorized(rng):
    S = random_psd(rng, 16)
    assert classify(pinch(S), S).relation.value in {"exact", "strict", "equimeasurable"}


@settings(max_examples=200, deadline=None)
@given(n=st.integers(2, 32), seed=st.integers(0, 2**32 - 1))
def test_pinch_trace_preserving_idempotent_positive(n, seed):
    rng = np.random.default_rng(seed)
    S = random_psd(rng, n, complex_=bool(seed % 2))
    E = pinch(S)
    assert abs(trace(E) - trace(S)) <= 1e-12 * max(1, trace(S))
    assert np.array_equal(pinch(E).entries, E.entries)
    assert np.min(np.diag(E.entries)) >= -1e-12


def test_spectral_decomposition_examples():
    w, V = spectral_decomposition(np.diag([1.0, 3.0]))
    assert np.array_equal(w, [3.0, 1.0])
    assert np.array_equal(V, [[0.0, 1.0], [1.0, 0.0]])
    w, V = spectral_decomposition(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    assert np.allclose(w, [3.0, 1.0], atol=1e-12)
    w, V = spectral_decomposition(np.eye(3))
    assert np.array_equal(w, np.ones(3)) and np.array_equal(V, np.eye(3))


def test_spectral_decomposition_reconstructs(rng):
    M = random_psd(rng, 12, complex_=True)
    w, V = spectral_decomposition(M)
    assert np.all(np.diff(w) <= 0)
    assert np.max(np.abs(V @ np.diag(w) @ V.conj().T - M)) <= 1e-10
    assert np.max(np.abs(V.conj().T @ V - np.eye(12))) <= 1e-10


def test_equimeasurable_examples(rng):
    A = random_psd(rng, 6)
    W = random_unitary(rng, 6, complex_=True)
    assert equimeasurable(A, W @ A @ W.conj().T)
    assert equimeasurable(np.diag([3.0, 1.0]), np.diag([1.0, 3.0]))
    assert not equimeasurable(np.diag([2.0, 2.0]), np.diag([3.0, 1.0]))
    with pytest.raises(ResolutionMismatch):
        equimeasurable(np.eye(2), np.eye(3))


def test_equimeasurable_equivalence_relation():
    A, B, C = np.diag([3.0, 1, 0]), np.diag([0.0, 3, 1]), np.diag([1.0, 0, 3])
    assert equimeasurable(A, A, tol=0)
    assert equimeasurable(A, B, tol=0) and equimeasurable(B, A, tol=0)
    assert equimeasurable(B, C, tol=0) and equimeasurable(A, C, tol=0)


def test_spectral_projection_examples(rng):
    P = spectral_projection(np.diag([3.0, 1.0]), (0.0, 0.5))
    assert np.array_equal(P, np.diag([1.0, 0.0]))
    assert np.allclose(spectral_projection(np.diag([3.0, 1.0]), (0.0, 1.0)), np.eye(2))
    A = random_psd(rng, 8)
    P = spectral_projection(A, (0.0, 0.25))
    assert np.linalg.matrix_rank(P) == 2
    assert np.max(np.abs(P @ A - A @ P)) <= 1e-10
    F = ky_fan(spectral_scale(A))
    assert abs(trace(A @ P) - F(0.25)) <= 1e-12


def test_spectral_projection_additive(rng):
    A = random_psd(rng, 10, complex_=True)
    P1 = spectral_projection(A, (0.0, 0.3))
    P2 = spectral_projection(A, (0.3, 1.0))
    assert np.allclose(P1 + P2, np.eye(10), atol=1e-10)
    assert abs(trace(P1) - 0.3) < 1e-12


def test_unitary_invariance(rng):
    A = random_psd(rng, 9, complex_=True)
    W = random_unitary(rng, 9, complex_=True)
    B = W @ A @ W.conj().T
    assert abs(trace(A) - trace(B)) <= 1e-10
    assert np.max(np.abs(spectral_scale(A).values - spectral_scale(B).values)) <= 1e-10


def test_diagonal_projection():
    P = DiagonalProjection(4, (2, 0))
    assert P.slots == (0, 2)
    assert P.trace == 0.5
    M = P.matrix()
    assert np.array_equal(M @ M, M) and np.array_equal(M, M.T)
    assert P.complement().slots == (1, 3)
    assert DiagonalProjection(4, (0,)) <= P
