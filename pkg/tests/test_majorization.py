import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import block_diag

from schurhorn.core import pinch, trace
from schurhorn.errors import HypothesisError, NegativeSpectrumError, ResolutionMismatch
from schurhorn.majorization import (
    Relation,
    classify,
    compare_scales,
    ky_fan,
    scale_of,
    slack,
    slack_block_formula,
    spectral_scale,
    verify_block_majorization,
)

from conftest import random_psd, random_unitary


def test_spectral_scale_examples():
    assert np.array_equal(spectral_scale(np.eye(3)).values, np.ones(3))
    assert np.array_equal(spectral_scale(np.diag([1.0, 3.0])).values, [3.0, 1.0])


def test_spectral_scale_moments(rng):
    A = random_psd(rng, 16)
    f = spectral_scale(A)
    for k in (1, 2, 3):
        assert abs(f.moment(k) - trace(np.linalg.matrix_power(A, k))) <= 1e-9


def test_spectral_scale_step_evaluation():
    f = scale_of([1.0, 3.0])
    assert f(0.0) == 3.0 and f(0.49) == 3.0 and f(0.5) == 1.0
    with pytest.raises(ValueError):
        f(1.0)


def test_ky_fan_examples():
    assert np.allclose(ky_fan(scale_of([1, 1])).samples, [0, 0.5, 1])
    assert np.allclose(ky_fan(scale_of([3, 1])).samples, [0, 1.5, 2])
    assert np.allclose(ky_fan(scale_of([3, 1, 0])).samples, [0, 1, 4 / 3, 4 / 3])


def test_ky_fan_concave_and_endpoints(rng):
    f = spectral_scale(random_psd(rng, 10))
    F = ky_fan(f).samples
    assert F[0] == 0
    assert np.all(np.diff(F, 2) <= 1e-15)
    assert abs(F[-1] - f.values.mean()) < 1e-14


def test_classify_examples(rng):
    S = random_psd(rng, 8)
    assert classify(pinch(S), S).relation in {Relation.EXACT, Relation.STRICT, Relation.EQUIMEASURABLE}
    assert classify(S, S).relation is Relation.EQUIMEASURABLE
    rep = classify(np.diag([2.0, 1, 1]), np.diag([3.0, 1, 0]))
    assert rep.relation is Relation.STRICT
    assert np.allclose(rep.gap_curve, [0, 1 / 3, 1 / 3, 0])


def test_classify_weak_and_none():
    assert classify(np.diag([1.0, 1.0]), np.diag([3.0, 1.0])).relation is Relation.WEAK
    assert classify(np.diag([3.0, 1.0]), np.diag([2.0, 2.0])).relation is Relation.NONE


def test_classify_errors():
    with pytest.raises(ResolutionMismatch):
        classify(np.eye(2), np.eye(3))
    with pytest.raises(NegativeSpectrumError):
        classify(np.diag([1.0, -1.0]), np.eye(2))


def test_report_export():
    rep = classify(np.diag([2.0, 1, 1]), np.diag([3.0, 1, 0]))
    assert rep.summary() == {"relation": "strict", "slack": 0.0, "trace_gap": 0.0}
    rows = list(rep.csv_rows())
    assert len(rows) == 4 and rows[1][0] == pytest.approx(1 / 3)


def test_slack_examples():
    S = np.diag([3.0, 1, 0])
    assert slack(S, S) == 0
    assert slack(np.diag([2.0, 1, 1]), S) == 0
    assert slack(np.diag([3.0, 0]), np.diag([1.0, 1])) == pytest.approx(-1.0)


def test_slack_block_formula_examples(rng):
    A, S = np.diag([3.0, 1, 0]), np.diag([3.0, 2, 1])
    assert slack_block_formula([(A, S, 1.0)]) == pytest.approx(slack(A, S))
    val = slack_block_formula([([3.0], [4.0], 0.5), ([1.0], [0.0], 0.5)])
    assert val == pytest.approx(slack(np.diag([3.0, 1.0]), np.diag([4.0, 0.0])), abs=1e-10)


def _ordered_blocks(rng, sizes, complex_=False):
    vals = np.sort(rng.uniform(0, 5, sum(sizes)))[::-1]
    out, start = [], 0
    for k in sizes:
        W = random_unitary(rng, k, complex_)
        out.append(W @ np.diag(vals[start:start + k]) @ W.conj().T)
        start += k
    return out


def test_slack_block_formula_random_three_blocks(rng):
    sizes = [3, 5, 4]
    A_blocks = _ordered_blocks(rng, sizes)
    S_blocks = _ordered_blocks(rng, sizes, complex_=True)
    blocks = [(a, s, k / 12) for a, s, k in zip(A_blocks, S_blocks, sizes)]
    direct = slack(block_diag(*A_blocks), block_diag(*S_blocks))
    assert abs(slack_block_formula(blocks) - direct) <= 1e-10


def test_slack_block_formula_rejects_unordered():
    with pytest.raises(HypothesisError) as err:
        slack_block_formula([([1.0], [4.0], 0.5), ([3.0], [0.0], 0.5)])
    assert any("A-blocks" in v for v in err.value.violations)
    with pytest.raises(HypothesisError):
        slack_block_formula([([3.0], [4.0], 0.5), ([1.0], [0.0], 0.4)])


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 24), seed=st.integers(0, 2**32 - 1))
def test_slack_lower_bound_and_superadditivity(n, seed):
    rng = np.random.default_rng(seed)
    A, S = random_psd(rng, n), random_psd(rng, n, complex_=True)
    assert slack(A, S) >= -trace(A) - 1e-12
    cut = int(rng.integers(1, n)) if n > 1 else 1
    A2, S2 = random_psd(rng, n - cut), random_psd(rng, n - cut)
    A1, S1 = A[:cut, :cut], S[:cut, :cut]
    whole = slack(block_diag(A1, A2), block_diag(S1, S2))
    parts = cut / n * slack(A1, S1) + (n - cut) / n * slack(A2, S2)
    assert whole >= parts - 1e-10


def test_transitivity_by_double_pinching(rng):
    for _ in range(20):
        n = int(rng.integers(2, 12))
        C = random_psd(rng, n, complex_=True)
        B = pinch(C).entries
        V = random_unitary(rng, n)
        A = pinch(V @ B @ V.T).entries
        assert classify(A, B).relation is not Relation.NONE
        assert classify(A, C).relation is not Relation.NONE


def test_dilation_consistency():
    vals = np.array([7.0, 3.0, 2.0, 0.0])
    f = scale_of(vals)
    g = scale_of(np.repeat(vals, 2))
    assert np.array_equal(g.values[::2], f.values)
    assert np.array_equal(ky_fan(g).samples[::2], ky_fan(f).samples)


def test_compare_scales_precedence():
    assert compare_scales([1.0, 1.0], [1.0, 1.0]).relation is Relation.EQUIMEASURABLE
    assert compare_scales([2.0, 1.0, 0.0], [3.0, 0.0, 0.0]).relation is Relation.EXACT


def _block_replacement_instance(rng, T_spread=0.4):
    A1, S1 = np.diag([1.0, 1.0]), np.diag([2.2, 2.1])
    A2 = S2 = np.diag([0.8, 0.7])
    A3 = np.diag(0.5 + rng.uniform(-0.05, 0.05, 8))
    A3 = A3 - (np.trace(A3) - 4.0) / 8 * np.eye(8)
    S3 = np.diag(rng.uniform(0.15, 0.27, 8))
    S3 = S3 - (np.trace(S3) - (4.0 - 2.3)) / 8 * np.eye(8)
    t = 0.75 + rng.uniform(-T_spread, T_spread)
    W = random_unitary(rng, 2)
    T = W @ np.diag([max(t, 1.5 - t), min(t, 1.5 - t)]) @ W.T
    return (A1, A2, A3), (S1, S2, S3), T


def test_verify_block_majorization_identity_replacement(rng):
    A_b, S_b, _ = _block_replacement_instance(rng)
    assert verify_block_majorization(A_b, S_b, S_b[1]) is True


def test_verify_block_majorization_random_matches_classify(rng):
    for _ in range(20):
        A_b, S_b, T = _block_replacement_instance(rng)
        got = verify_block_majorization(A_b, S_b, T)
        direct = classify(block_diag(*A_b), block_diag(S_b[0], T, S_b[2]))
        assert got is True
        assert direct.relation.majorized


def test_verify_block_majorization_hypothesis_gate(rng):
    A_b, S_b, T = _block_replacement_instance(rng)
    weak_head = (np.diag([2.0, 2.0]),) + S_b[1:]
    shifted = (A_b[0], A_b[1], A_b[2] + np.diag(np.full(8, 0.2 / 8 * 2.5)))
    with pytest.raises(HypothesisError) as err:
        verify_block_majorization(shifted, weak_head, T)
    assert any("head excess" in v for v in err.value.violations)
