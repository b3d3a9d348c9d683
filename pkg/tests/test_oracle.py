from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from schurhorn.core import DiagonalProjection, eigenvalues
from schurhorn.errors import NotMajorizedError
from schurhorn.majorization import Relation, classify
from schurhorn.oracle import (
    InstanceSpec,
    check_partial_solution,
    classical_construct,
    generate_instance,
    haar_unitary,
    is_majorized,
    level_instance,
    strict_instance,
    t_transform,
)


def test_zero_transforms_is_equimeasurable():
    spec = generate_instance(6, seed=3, transforms=0)
    assert np.array_equal(spec.eigenvalues, spec.target_diagonal)
    assert classify(spec.target(), spec.source()).relation is Relation.EQUIMEASURABLE


def test_single_half_blend():
    assert np.array_equal(t_transform([3.0, 1.0], 0, 1, 0.5), [2.0, 2.0])


def test_generated_instances_are_majorized():
    for seed in range(1000):
        spec = generate_instance(16, seed=seed, transforms=50)
        rel = classify(spec.target(), spec.source()).relation
        assert rel is not Relation.NONE and rel is not Relation.WEAK


def test_strict_instance_is_strict():
    for seed in range(20):
        spec = strict_instance(12, seed)
        assert classify(spec.target(), spec.source()).relation is Relation.STRICT


def test_instance_roundtrip_dict():
    spec = generate_instance(5, seed=1)
    again = InstanceSpec.from_dict(spec.to_dict())
    assert np.array_equal(again.eigenvalues, spec.eigenvalues)
    assert again.seed == 1


def test_classical_two_by_two():
    M = classical_construct(InstanceSpec(2, [3.0, 1.0], [2.0, 2.0])).entries
    assert np.allclose(np.abs(M), [[2, 1], [1, 2]])
    assert np.allclose(np.diag(M), [2, 2])


def test_classical_no_rotation_needed():
    M = classical_construct(InstanceSpec(3, [3.0, 2.0, 1.0], [1.0, 3.0, 2.0])).entries
    assert np.array_equal(M, np.diag([1.0, 3.0, 2.0]))


def test_classical_rejects_infeasible():
    with pytest.raises(NotMajorizedError):
        classical_construct(InstanceSpec(2, [2.0, 2.0], [3.0, 1.0]))


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 64), seed=st.integers(0, 2**32 - 1))
def test_classical_roundtrip(n, seed):
    spec = generate_instance(n, seed)
    M = classical_construct(spec)
    assert np.max(np.abs(eigenvalues(M) - np.sort(spec.eigenvalues)[::-1])) <= 1e-9
    assert np.max(np.abs(M.diagonal() - spec.target_diagonal)) <= 1e-9


def test_is_majorized():
    assert is_majorized([2, 1, 1], [3, 1, 0])
    assert not is_majorized([3, 1, 0], [2, 1, 1])
    assert not is_majorized([1, 1], [3, 1])


def test_haar_unitary_is_unitary(rng):
    W = haar_unitary(7, rng)
    assert np.allclose(W.conj().T @ W, np.eye(7), atol=1e-12)


def test_check_partial_solution_vacuous():
    A, S = np.diag([2.0, 1, 1]), np.diag([3.0, 1, 0])
    ps = SimpleNamespace(U=np.eye(3), P=DiagonalProjection(3), Q=np.zeros((3, 3)))
    report = check_partial_solution(A, S, ps)
    assert report.passed, report.as_dict()


def test_check_partial_solution_detects_corruption():
    A, S = np.diag([2.0, 2.0]), np.diag([3.0, 1.0])
    U = np.array([[1.0, 1.0], [-1.0, 1.0]]) / np.sqrt(2)
    good = SimpleNamespace(U=U, P=DiagonalProjection(2, (0,)), Q=np.eye(2))
    assert check_partial_solution(A, S, good).passed
    bad_U = U.copy()
    bad_U[0, 0] += 1e-3
    report = check_partial_solution(A, S, SimpleNamespace(U=bad_U, P=good.P, Q=good.Q))
    assert not report["unitary"].passed
    assert not report["diagonal"].passed


def test_check_partial_solution_detects_locality_breach():
    A, S = np.diag([2.0, 2.0, 1.0]), np.diag([3.0, 1.0, 1.0])
    U = np.eye(3)
    U[:2, :2] = np.array([[1.0, 1.0], [-1.0, 1.0]]) / np.sqrt(2)
    ps = SimpleNamespace(U=U, P=DiagonalProjection(3, (0,)), Q=np.diag([1.0, 0.0, 0.0]))
    report = check_partial_solution(A, S, ps)
    assert not report["locality_support"].passed
    assert report.failed() == ["locality_support"]


@pytest.mark.parametrize("seed", range(30))
def test_level_instance_is_majorized_with_few_values(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 33))
    k = int(rng.integers(1, min(4, n) + 1))
    spec = level_instance(n, k, seed)
    assert is_majorized(spec.target_diagonal, spec.eigenvalues)
    assert len(np.unique(np.round(spec.target_diagonal, 12))) <= k
    assert np.all(np.diff(np.sort(spec.eigenvalues)) > 0)


def test_level_instance_rejects_bad_k():
    with pytest.raises(ValueError):
        level_instance(3, 4, 0)
