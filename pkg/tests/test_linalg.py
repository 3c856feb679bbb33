"""Core linear algebra: eigenvalues, principal square roots, resolvent traces.

Expected values here are hand arithmetic or independent dense recomputation
(full eigendecomposition / explicit inverse), never the code path under test.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covspectra.errors import (
    DimensionMismatch,
    InvalidInput,
    InvalidParameter,
    NotPSD,
)
from covspectra.linalg import (
    SymMatrix,
    UpperHalfPoint,
    principal_sqrt,
    resolvent_stieltjes,
    smw_rank1_trace_delta,
    smw_rankq_trace,
    spectral_norm,
    sym_eigenvalues,
)


def random_psd(rng, p, rank=None):
    g = rng.standard_normal((p, rank or p))
    a = g @ g.T
    return (a + a.T) / 2.0


# ---------------------------------------------------------------- types

def test_symmatrix_rejects_asymmetry():
    with pytest.raises(InvalidInput):
        SymMatrix([[1.0, 2.0], [2.0 + 1e-12, 1.0]])


def test_symmatrix_rejects_nonsquare_and_nonfinite():
    with pytest.raises(InvalidInput):
        SymMatrix(np.zeros((2, 3)))
    with pytest.raises(InvalidInput):
        SymMatrix([[np.nan, 0.0], [0.0, 1.0]])


def test_symmatrix_symmetrized_constructor():
    raw = np.array([[1.0, 3.0], [1.0, 2.0]])
    s = SymMatrix.symmetrized(raw)
    assert np.array_equal(s.a, np.array([[1.0, 2.0], [2.0, 2.0]]))
    assert s.dim == 2


def test_upper_half_point_validation():
    z = UpperHalfPoint(0.5, 1.0)
    assert z.z == 0.5 + 1.0j
    with pytest.raises(InvalidParameter):
        UpperHalfPoint(1.0, -0.1)
    with pytest.raises(InvalidParameter):
        UpperHalfPoint(1.0, 0.0)


# ---------------------------------------------------------- eigenvalues

def test_sym_eigenvalues_diagonal_is_sorted():
    out = sym_eigenvalues(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(out, [1.0, 2.0, 3.0], atol=1e-14)


def test_sym_eigenvalues_two_by_two_exchange():
    # [[0,1],[1,0]] has eigenvalues -1, +1.
    out = sym_eigenvalues(np.array([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_allclose(out, [-1.0, 1.0], atol=1e-14)


def test_sym_eigenvalue_sum_matches_trace():
    rng = np.random.default_rng(7)
    g = rng.standard_normal((8, 8))
    s = (g + g.T) / 2.0
    out = sym_eigenvalues(s)
    assert abs(out.sum() - np.trace(s)) <= 1e-9 * max(1.0, abs(np.trace(s)))


# ------------------------------------------------------- principal sqrt

def test_principal_sqrt_diagonal():
    r = principal_sqrt(np.diag([4.0, 9.0]))
    assert np.array_equal(r.a, np.diag([2.0, 3.0]))


def test_principal_sqrt_projector():
    e = np.array([0.6, 0.8])
    s = np.outer(e, e)
    r = principal_sqrt(SymMatrix.symmetrized(s))
    np.testing.assert_allclose(r.a, s, atol=1e-12)


def test_principal_sqrt_squares_back():
    rng = np.random.default_rng(11)
    s = random_psd(rng, 6)
    r = principal_sqrt(SymMatrix.symmetrized(s)).a
    np.testing.assert_allclose(r @ r, s, atol=1e-10 * spectral_norm(s))


def test_principal_sqrt_rejects_indefinite():
    with pytest.raises(NotPSD):
        principal_sqrt(np.diag([1.0, -1.0]))


def test_principal_sqrt_clips_roundoff_negatives():
    # Eigenvalues in [-1e-10*norm, 0) are clipped, not fatal.
    s = np.diag([1.0, -1e-11])
    r = principal_sqrt(s)
    assert r.a[1, 1] == 0.0


@given(st.integers(0, 10_000), st.floats(0.0, 4.0))
@settings(max_examples=25, deadline=None)
def test_principal_sqrt_scaling(seed, c):
    rng = np.random.default_rng(seed)
    s = random_psd(rng, 5)
    lhs = principal_sqrt(c * c * s).a
    rhs = c * principal_sqrt(s).a
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * (1.0 + c * c * spectral_norm(s))


# -------------------------------------------------------- spectral norm

def test_spectral_norm_values():
    assert spectral_norm(np.array([[0.0, 3.0], [3.0, 0.0]])) == pytest.approx(3.0)
    assert spectral_norm(np.array([3.0, 4.0])) == pytest.approx(5.0)


def test_spectral_norm_matches_gram_route():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((7, 4))
    gram_top = np.sqrt(np.max(np.linalg.eigvalsh(a.T @ a)))
    assert spectral_norm(a) == pytest.approx(gram_top, rel=1e-10)


# ---------------------------------------------------- resolvent traces

def test_resolvent_stieltjes_all_zero_eigs():
    assert resolvent_stieltjes(np.zeros(4), 1j) == pytest.approx(1j)


def test_resolvent_stieltjes_single_eig():
    assert resolvent_stieltjes(np.array([1.0]), 1j) == pytest.approx(0.5 + 0.5j)


def test_resolvent_stieltjes_hand_value():
    # eigs {0,2}, z=0.5+i: 1/(-0.5-i) = -0.4+0.8i, 1/(1.5-i) = (1.5+i)/3.25.
    got = resolvent_stieltjes(np.array([0.0, 2.0]), UpperHalfPoint(0.5, 1.0))
    want = 0.03076923076923077 + 0.5538461538461539j
    assert got == pytest.approx(want, abs=1e-14)


def test_resolvent_stieltjes_rejects_lower_half():
    with pytest.raises(InvalidParameter):
        resolvent_stieltjes(np.array([1.0]), 1.0 - 1j)


@given(st.integers(0, 10_000), st.floats(-3.0, 3.0), st.floats(0.05, 2.0))
@settings(max_examples=50, deadline=None)
def test_resolvent_stieltjes_upper_half_and_bounded(seed, u, v):
    rng = np.random.default_rng(seed)
    eigs = np.sort(rng.uniform(0.0, 5.0, size=rng.integers(1, 12)))
    s = resolvent_stieltjes(eigs, complex(u, v))
    assert s.imag > 0.0
    assert abs(s) <= 1.0 / v + 1e-12


# ------------------------------------------------------- rank-1 update

def test_smw_rank1_hand_value():
    c = np.zeros((2, 2))
    got = smw_rank1_trace_delta(c, np.array([1.0, 0.0]), 1j)
    assert got == pytest.approx(0.5 - 0.5j, abs=1e-14)


def test_smw_rank1_zero_vector_is_noop():
    c = np.diag([1.0, 2.0])
    assert smw_rank1_trace_delta(c, np.zeros(2), 1j) == 0.0


def test_smw_rank1_matches_direct_recomputation():
    rng = np.random.default_rng(23)
    for _ in range(20):
        p = int(rng.integers(2, 9))
        c = random_psd(rng, p)
        w = rng.standard_normal(p)
        z = complex(rng.uniform(-2, 2), rng.uniform(0.1, 2.0))
        # Oracle: full complex inverses of both matrices.
        direct = (
            np.trace(np.linalg.inv(c + np.outer(w, w) - z * np.eye(p)))
            - np.trace(np.linalg.inv(c - z * np.eye(p)))
        )
        got = smw_rank1_trace_delta(c, w, z)
        assert abs(got - direct) <= 1e-8 * max(1.0, abs(direct))


def test_smw_rank1_magnitude_bound():
    rng = np.random.default_rng(5)
    for _ in range(20):
        p = int(rng.integers(1, 10))
        c = random_psd(rng, p)
        w = rng.standard_normal(p) * rng.uniform(0.1, 3.0)
        v = rng.uniform(0.05, 2.0)
        got = smw_rank1_trace_delta(c, w, complex(rng.uniform(-2, 2), v))
        assert abs(got) <= 1.0 / v * (1.0 + 1e-10)


def test_smw_rank1_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        smw_rank1_trace_delta(np.eye(3), np.ones(2), 1j)


# ------------------------------------------------------- rank-q update

def test_smw_rankq_zero_update():
    c = np.diag([1.0, 2.0, 3.0])
    want = sum(1.0 / (lam - 1j) for lam in (1.0, 2.0, 3.0))
    got = smw_rankq_trace(c, np.zeros((3, 2)), 1j)
    assert got == pytest.approx(want, abs=1e-12)


def test_smw_rankq_single_column_matches_rank1_path():
    rng = np.random.default_rng(41)
    c = random_psd(rng, 6)
    w = rng.standard_normal(6)
    z = 0.7 + 0.9j
    base = np.sum(1.0 / (np.linalg.eigvalsh(c) - z))
    via_rank1 = base + smw_rank1_trace_delta(c, w, z)
    via_rankq = smw_rankq_trace(c, w[:, None], z)
    assert via_rankq == pytest.approx(via_rank1, abs=1e-10)


def test_smw_rankq_matches_direct_recomputation():
    rng = np.random.default_rng(91)
    for _ in range(20):
        p = int(rng.integers(2, 12))
        q = int(rng.integers(1, min(p, 4) + 1))
        c = random_psd(rng, p)
        u = rng.standard_normal((p, q))
        z = complex(rng.uniform(-2, 2), rng.uniform(0.1, 2.0))
        direct = np.sum(1.0 / (np.linalg.eigvalsh(c + u @ u.T) - z))
        got = smw_rankq_trace(c, u, z)
        assert abs(got - direct) <= 1e-8 * max(1.0, abs(direct))


def test_smw_rankq_rejects_wide_u():
    with pytest.raises(DimensionMismatch):
        smw_rankq_trace(np.eye(3), np.zeros((3, 4)), 1j)
