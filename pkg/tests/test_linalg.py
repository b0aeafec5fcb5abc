"""
Tests for the dense matrix kernels.
"""

import numpy as np
import pytest
import scipy.linalg as la
from numpy.testing import assert_allclose

from drift_strichartz.core.linalg import (
    as_matrix,
    cholesky_logdet,
    equilibrated_min_eigenvalue,
    expm,
    expm_series,
    is_similar_skew,
    krylov_rank_profile,
    numerical_rank,
    spectrum,
    sqrt_psd,
)
from drift_strichartz.errors import DimensionError, DomainError


def test_expm_of_zero_scale_is_identity():
    assert_allclose(expm(np.array([[1.0, 2.0], [3.0, 4.0]]), 0.0), np.eye(2))


def test_expm_rotation():
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    t = 0.7
    assert_allclose(expm(J, t), [[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]], atol=1e-14)


def test_expm_series_matches_pade():
    rng = np.random.default_rng(7)
    M = rng.standard_normal((4, 4))
    M *= 0.4 / np.linalg.norm(M, 1)
    assert_allclose(expm_series(M), la.expm(M), rtol=1e-14, atol=1e-15)


def test_expm_rejects_bad_input():
    with pytest.raises(DimensionError):
        expm(np.ones((2, 3)))
    with pytest.raises(DomainError):
        expm(np.eye(2), float("inf"))
    with pytest.raises(DomainError):
        as_matrix([[1.0, np.nan], [0.0, 1.0]])


@pytest.mark.parametrize("M, rank", [
    (np.zeros((3, 3)), 0),
    (np.diag([1.0, 1e-12, 0.0]), 1),
    (np.diag([1.0, 1e-6, 0.0]), 2),
    (np.eye(3), 3),
])
def test_numerical_rank(M, rank):
    assert numerical_rank(M) == rank


def test_numerical_rank_rejects_tolerance_outside_unit_interval():
    with pytest.raises(DomainError):
        numerical_rank(np.eye(2), rel_tol=1.5)


def test_spectrum_of_jordan_block():
    spec = spectrum(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert spec.eigenvalues == [(0.0, 0.0)]
    assert spec.algebraic_multiplicities == [2]
    assert spec.geometric_multiplicities == [1]


def test_spectrum_pairs_conjugates():
    spec = spectrum(np.array([[-2.0, -2.0], [1.0, 0.0]]))
    assert_allclose(sorted(spec.values, key=lambda z: z.imag), [-1 - 1j, -1 + 1j], atol=1e-12)
    assert spec.algebraic_multiplicities == [1, 1]
    assert spec.max_real_part() == pytest.approx(-1.0)


def test_spectrum_of_identity_is_semisimple():
    spec = spectrum(np.eye(3))
    assert spec.algebraic_multiplicities == [3]
    assert spec.geometric_multiplicities == [3]
    assert spec.n == 3


@pytest.mark.parametrize("M, expected", [
    (np.array([[0.0, -1.0], [1.0, 0.0]]), True),
    (np.array([[0.0, -3.0], [1.0, 0.0]]), True),
    (np.zeros((2, 2)), True),
    (np.array([[0.0, 0.0], [1.0, 0.0]]), False),
    (np.array([[1.0, 0.0], [0.0, -1.0]]), False),
])
def test_is_similar_skew(M, expected):
    assert is_similar_skew(M) is expected


def test_cholesky_logdet_on_graded_matrix():
    t = 1e-2
    i = np.arange(1, 5)[:, None]
    j = np.arange(1, 5)[None, :]
    H = t ** (i + j - 1) / (i + j - 1)
    sign, expected = np.linalg.slogdet(H)
    assert sign > 0
    assert cholesky_logdet(H) == pytest.approx(expected, rel=1e-8)


def test_cholesky_logdet_rejects_indefinite():
    with pytest.raises(np.linalg.LinAlgError):
        cholesky_logdet(np.diag([1.0, -1.0]))


def test_equilibrated_min_eigenvalue_ignores_grading():
    M = np.diag([1e6, 1e-6])
    assert equilibrated_min_eigenvalue(M) == pytest.approx(1.0)
    assert equilibrated_min_eigenvalue(np.diag([1.0, 0.0])) == 0.0


def test_sqrt_psd_squares_back():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((3, 2))
    M = A @ A.T
    R = sqrt_psd(M)
    assert_allclose(R @ R, M, atol=1e-12)
    assert numerical_rank(R) == 2


def test_krylov_rank_profile_kolmogorov():
    B = np.array([[0.0, 0.0], [1.0, 0.0]])
    A = np.array([[1.0], [0.0]])
    assert krylov_rank_profile(B, A) == [1, 2]


def test_krylov_rank_profile_stalls_on_invariant_kernel():
    assert krylov_rank_profile(np.zeros((2, 2)), np.diag([1.0, 0.0])) == [1]
