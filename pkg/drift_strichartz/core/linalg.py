"""
Dense matrix kernels shared by every other module.
Matrix exponentials, tolerance-based ranks, spectra with multiplicities
and positive-definiteness tests. All functions are pure.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as la
from pydantic import BaseModel, ConfigDict

from drift_strichartz.config import get_settings
from drift_strichartz.errors import DimensionError, DomainError, NumericalError

logger = logging.getLogger(__name__)


class Spectrum(BaseModel):
    """
    Distinct eigenvalues with their algebraic and geometric multiplicities.
    Conjugate pairs are stored explicitly and share multiplicities.
    """

    model_config = ConfigDict(frozen=True)

    eigenvalues: List[Tuple[float, float]]
    algebraic_multiplicities: List[int]
    geometric_multiplicities: List[int]

    @property
    def values(self) -> np.ndarray:
        return np.array([complex(re, im) for re, im in self.eigenvalues])

    @property
    def n(self) -> int:
        return int(sum(self.algebraic_multiplicities))

    def max_real_part(self) -> float:
        return max(re for re, _ in self.eigenvalues)

    def to_dict(self) -> List[dict]:
        return [
            {"re": re, "im": im, "algebraic": a, "geometric": g}
            for (re, im), a, g in zip(self.eigenvalues, self.algebraic_multiplicities,
                                      self.geometric_multiplicities)
        ]


def as_matrix(M, name: str = "matrix", square: bool = True) -> np.ndarray:
    """
    Convert input to a finite 2-D float64 array.

    Args:
        M: Array-like input
        name: Name used in error messages
        square: Whether to insist on a square matrix

    Returns:
        A new float64 array
    """
    A = np.array(M, dtype=float)
    if A.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {A.shape}")
    if square and A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError(f"{name} has non-finite entries")
    return A


def expm(M, s: float = 1.0) -> np.ndarray:
    """
    Matrix exponential e^{sM} by scaling and squaring with a Pade approximant.

    Args:
        M: Square matrix
        s: Finite scalar multiplier

    Returns:
        e^{sM}
    """
    A = as_matrix(M, "M")
    if not np.isfinite(s):
        raise DomainError(f"exponent scale must be finite, got {s}")
    if s == 0.0:
        return np.eye(A.shape[0])
    return la.expm(s * A)


def expm_series(M: np.ndarray, min_terms: int = 0, max_terms: int = 200) -> np.ndarray:
    """
    Matrix exponential by the plain Taylor series, for ||M|| <= 1/2.

    Terms are summed until they stop contributing, but never fewer than
    ``min_terms``. Structured inputs whose small entries first appear at a
    high power (graded Gramian blocks) keep those entries to full relative
    accuracy, which a low-order Pade approximant does not.

    Args:
        M: Square matrix of modest norm
        min_terms: Lower bound on the number of series terms
        max_terms: Hard cap on the number of series terms

    Returns:
        e^M
    """
    n = M.shape[0]
    E = np.eye(n, dtype=M.dtype)
    term = np.eye(n, dtype=M.dtype)
    for j in range(1, max_terms + 1):
        term = term @ M / j
        E = E + term
        if j >= min_terms and np.abs(term).max() <= 1e-17 * np.abs(E).max():
            return E
    raise NumericalError(f"Taylor series for expm did not converge in {max_terms} terms")


def numerical_rank(M, rel_tol: Optional[float] = None) -> int:
    """
    Number of singular values above rel_tol times the largest one.

    Args:
        M: Matrix (real or complex, any shape)
        rel_tol: Relative threshold in (0, 1); defaults to settings.rank_tol

    Returns:
        The numerical rank; 0 for the zero matrix
    """
    if rel_tol is None:
        rel_tol = get_settings().rank_tol
    if not 0 < rel_tol < 1:
        raise DomainError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    A = np.asarray(M)
    if A.size == 0:
        return 0
    sv = la.svdvals(A)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rel_tol * sv[0]))


def _cluster(values: Sequence[complex], tol: float) -> List[List[complex]]:
    clusters: List[List[complex]] = []
    for value in sorted(values, key=lambda z: (z.real, z.imag)):
        for members in clusters:
            if abs(np.mean(members) - value) <= tol:
                members.append(value)
                break
        else:
            clusters.append([value])
    return clusters


def spectrum(M, cluster_tol: Optional[float] = None, rank_tol: Optional[float] = None) -> Spectrum:
    """
    Eigenvalues of a real matrix with algebraic and geometric multiplicities.

    Eigenvalues closer than cluster_tol*(1+||M||) are merged. Eigenvalues with
    |Im| below the same threshold are treated as real, and the lower half-plane
    is rebuilt from the upper one so conjugate pairs match exactly.

    Args:
        M: Square real matrix
        cluster_tol: Relative clustering threshold (settings.cluster_tol)
        rank_tol: Rank threshold for geometric multiplicities (settings.rank_tol)

    Returns:
        Spectrum
    """
    settings = get_settings()
    cluster_tol = settings.cluster_tol if cluster_tol is None else cluster_tol
    rank_tol = settings.rank_tol if rank_tol is None else rank_tol
    A = as_matrix(M, "M")
    n = A.shape[0]
    try:
        raw = la.eigvals(A)
    except la.LinAlgError as e:
        raise NumericalError(f"eigensolver failed: {str(e)}")
    tol = cluster_tol * (1.0 + np.linalg.norm(A, 2))

    real_part = [complex(z.real, 0.0) for z in raw if abs(z.imag) <= tol]
    upper = [z for z in raw if z.imag > tol]

    distinct: List[complex] = []
    algebraic: List[int] = []
    for members in _cluster(real_part, tol):
        distinct.append(complex(np.mean(members).real, 0.0))
        algebraic.append(len(members))
    for members in _cluster(upper, tol):
        center = complex(np.mean(members))
        distinct.extend([center, center.conjugate()])
        algebraic.extend([len(members), len(members)])

    geometric: List[int] = []
    for lam, alg in zip(distinct, algebraic):
        shifted = A - lam * np.eye(n)
        geo = n - numerical_rank(shifted, rank_tol)
        # lam is an eigenvalue, so at least one eigenvector exists
        geometric.append(int(min(max(geo, 1), alg)))

    order = sorted(range(len(distinct)), key=lambda i: (distinct[i].real, distinct[i].imag))
    return Spectrum(
        eigenvalues=[(float(distinct[i].real), float(distinct[i].imag)) for i in order],
        algebraic_multiplicities=[algebraic[i] for i in order],
        geometric_multiplicities=[geometric[i] for i in order],
    )


def is_similar_skew(M, tol: Optional[float] = None) -> bool:
    """
    True iff M is diagonalizable with purely imaginary spectrum.

    Args:
        M: Square real matrix
        tol: Absolute bound on |Re lambda|; defaults to imag_axis_tol*(1+||M||)

    Returns:
        Whether M is similar to a skew-symmetric matrix
    """
    A = as_matrix(M, "M")
    if tol is None:
        tol = get_settings().imag_axis_tol * (1.0 + np.linalg.norm(A, 2))
    spec = spectrum(A)
    on_axis = all(abs(re) <= tol for re, _ in spec.eigenvalues)
    semisimple = all(a == g for a, g in zip(spec.algebraic_multiplicities,
                                            spec.geometric_multiplicities))
    return bool(on_axis and semisimple)


def is_symmetric(M: np.ndarray, tol: float) -> bool:
    return bool(np.max(np.abs(M - M.T), initial=0.0) <= tol)


def sqrt_psd(M: np.ndarray, rel_tol: float = 1e-12) -> np.ndarray:
    """Symmetric square root of a PSD matrix; eigenvalues below rel_tol*max are clamped to zero."""
    w, V = la.eigh(0.5 * (M + M.T))
    top = max(float(np.max(np.abs(w), initial=0.0)), np.finfo(float).tiny)
    w = np.where(w > rel_tol * top, w, 0.0)
    return (V * np.sqrt(w)) @ V.T


def equilibrated_min_eigenvalue(M: np.ndarray) -> float:
    """
    Smallest eigenvalue of D^{-1} M D^{-1}, D = sqrt(diag M).

    Graded Gramians have entries spanning many orders of magnitude; the
    diagonal scaling removes the grading so the threshold is meaningful.
    A zero diagonal entry means the matrix is singular.
    """
    d = np.diag(M).astype(float)
    if np.any(d <= 0.0):
        return 0.0
    s = 1.0 / np.sqrt(d)
    scaled = M * np.outer(s, s)
    return float(la.eigvalsh(0.5 * (scaled + scaled.T))[0])


def cholesky_logdet(M: np.ndarray) -> float:
    """
    log det of a symmetric positive definite matrix via an equilibrated Cholesky factor.

    Raises:
        numpy.linalg.LinAlgError: if M is not positive definite
    """
    d = np.diag(M).astype(float)
    if np.any(d <= 0.0) or not np.all(np.isfinite(M)):
        raise np.linalg.LinAlgError("non-positive or non-finite diagonal")
    s = 1.0 / np.sqrt(d)
    scaled = M * np.outer(s, s)
    L = la.cholesky(0.5 * (scaled + scaled.T), lower=True)
    return float(2.0 * np.sum(np.log(np.diag(L))) + np.sum(np.log(d)))


def krylov_rank_profile(B: np.ndarray, A: np.ndarray, rel_tol: Optional[float] = None,
                        max_blocks: Optional[int] = None) -> List[int]:
    """
    Cumulative ranks of [A], [A, BA], [A, BA, B^2 A], ...

    Stops when the rank reaches n or stops increasing.

    Args:
        B: n x n drift
        A: n x m input matrix
        rel_tol: Rank threshold
        max_blocks: Maximum number of blocks (defaults to n)

    Returns:
        List of cumulative ranks, one per block
    """
    n = B.shape[0]
    max_blocks = n if max_blocks is None else max_blocks
    blocks = [A]
    profile = [numerical_rank(A, rel_tol)]
    while len(profile) < max_blocks and 0 < profile[-1] < n:
        blocks.append(B @ blocks[-1])
        rank = numerical_rank(np.hstack(blocks), rel_tol)
        if rank == profile[-1]:
            break
        profile.append(rank)
    return profile
