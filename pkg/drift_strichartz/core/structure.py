"""
Canonical block structure of (Q, B): block ranks p_0..p_r, the local
homogeneous dimension D, the principal part B_bar of the drift and the
non-isotropic dilations that B_bar commutes with.

Inputs are expected in the canonical block layout (Q supported on the
leading p_0 block, B block lower Hessenberg). Other layouts are accepted
but reported through canonical_layout_check.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from drift_strichartz.config import get_settings
from drift_strichartz.core.gramian import OperatorSpec
from drift_strichartz.core.linalg import krylov_rank_profile, numerical_rank, sqrt_psd
from drift_strichartz.errors import CanonicalFormError, DimensionError

logger = logging.getLogger(__name__)


class StructureReport(BaseModel):
    """Everything the canonical form tells us about (Q, B)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    ranks: List[int]
    D: int
    dilation_weights: List[int]
    B_bar: np.ndarray
    is_dilation_invariant: bool
    layout_warnings: List[str] = []

    def to_dict(self) -> dict:
        return {
            "ranks": list(self.ranks),
            "D": self.D,
            "dilation_weights": list(self.dilation_weights),
            "B_bar": self.B_bar.tolist(),
            "is_dilation_invariant": self.is_dilation_invariant,
            "layout_warnings": list(self.layout_warnings),
        }


def _offsets(ranks: Sequence[int]) -> List[int]:
    return [int(v) for v in np.concatenate([[0], np.cumsum(ranks)])]


def canonical_ranks(spec: OperatorSpec, rel_tol: Optional[float] = None) -> List[int]:
    """
    Block ranks p_j as increments of the Krylov ranks of [A, BA, ..., B^j A], A = Q^{1/2}.

    Args:
        spec: Operator specification satisfying (H)
        rel_tol: Rank threshold (settings.rank_tol)

    Returns:
        [p_0, ..., p_r], positive, non-increasing, summing to n
    """
    profile = krylov_rank_profile(spec.B, sqrt_psd(spec.Q), rel_tol)
    increments = [profile[0]] + [b - a for a, b in zip(profile, profile[1:])]
    n = spec.n
    if sum(increments) != n or any(p <= 0 for p in increments):
        raise CanonicalFormError(
            f"Krylov increments {increments} of '{spec.label}' do not sum to n={n}", increments=increments
        )
    if any(b > a for a, b in zip(increments, increments[1:])):
        raise CanonicalFormError(
            f"Krylov increments {increments} of '{spec.label}' increase; check rank_tol", increments=increments
        )
    logger.debug(f"Canonical ranks of '{spec.label}': {increments}")
    return increments


def homogeneous_dimension(ranks: Sequence[int]) -> int:
    """D = p_0 + 3 p_1 + ... + (2r+1) p_r."""
    return int(sum((2 * j + 1) * p for j, p in enumerate(ranks)))


def dilation_weights(ranks: Sequence[int]) -> List[int]:
    """Per-coordinate exponents of delta_lambda: weight 2j+1 on every coordinate of block j."""
    weights: List[int] = []
    for j, p in enumerate(ranks):
        weights.extend([2 * j + 1] * int(p))
    return weights


def dilation_matrix(ranks: Sequence[int], lam: float) -> np.ndarray:
    """delta_lambda = diag(lambda^{w_i})."""
    return np.diag(float(lam) ** np.asarray(dilation_weights(ranks), dtype=float))


def dilate_matrix(M: np.ndarray, ranks: Sequence[int], lam: float) -> np.ndarray:
    """
    delta_lambda M delta_lambda^{-1}.

    For a principal drift B_bar this equals lambda^2 B_bar, which is what makes
    its volume function homogeneous.
    """
    w = np.asarray(dilation_weights(ranks), dtype=float)
    if M.shape != (len(w), len(w)):
        raise DimensionError(f"matrix of shape {M.shape} does not match ranks {list(ranks)}")
    return M * (float(lam) ** (w[:, None] - w[None, :]))


def shifted_drift(spec: OperatorSpec, ranks: Sequence[int],
                  rel_tol: Optional[float] = None) -> Tuple[np.ndarray, bool]:
    """
    Principal part B_bar of B: keep the subdiagonal blocks B_j, zero every free block.

    Args:
        spec: Operator specification in canonical layout
        ranks: Output of canonical_ranks
        rel_tol: Relative Frobenius tolerance for B = B_bar (settings.zero_block_tol)

    Returns:
        (B_bar, is_dilation_invariant)
    """
    rel_tol = get_settings().zero_block_tol if rel_tol is None else rel_tol
    if sum(ranks) != spec.n or any(p <= 0 for p in ranks):
        raise DimensionError(f"ranks {list(ranks)} are inconsistent with n={spec.n}")
    off = _offsets(ranks)
    B_bar = np.zeros_like(spec.B)
    for j in range(1, len(ranks)):
        rows = slice(off[j], off[j + 1])
        cols = slice(off[j - 1], off[j])
        B_bar[rows, cols] = spec.B[rows, cols]
    defect = np.linalg.norm(spec.B - B_bar)
    invariant = bool(defect <= rel_tol * (1.0 + np.linalg.norm(spec.B)))
    return B_bar, invariant


def canonical_layout_check(spec: OperatorSpec, ranks: Sequence[int],
                           rel_tol: Optional[float] = None) -> List[str]:
    """
    List the ways (Q, B) departs from the canonical block layout for these ranks.

    Checked: Q vanishes outside the leading p_0 block, B vanishes below its
    block subdiagonal, and each subdiagonal block B_j has full row rank p_j.
    """
    settings = get_settings()
    rel_tol = settings.zero_block_tol if rel_tol is None else rel_tol
    off = _offsets(ranks)
    p0 = ranks[0]
    warnings: List[str] = []

    outside = spec.Q.copy()
    outside[:p0, :p0] = 0.0
    if np.linalg.norm(outside) > rel_tol * (1.0 + np.linalg.norm(spec.Q)):
        warnings.append(f"Q has entries outside its leading {p0}x{p0} block")

    scale = rel_tol * (1.0 + np.linalg.norm(spec.B))
    for i in range(len(ranks)):
        for j in range(i - 1):
            block = spec.B[off[i]:off[i + 1], off[j]:off[j + 1]]
            if np.linalg.norm(block) > scale:
                warnings.append(f"B block ({i},{j}) below the subdiagonal is nonzero")
        if i >= 1:
            block = spec.B[off[i]:off[i + 1], off[i - 1]:off[i]]
            if numerical_rank(block, settings.rank_tol) != ranks[i]:
                warnings.append(f"B block ({i},{i - 1}) does not have full rank {ranks[i]}")
    for w in warnings:
        logger.warning(f"Non-canonical layout for '{spec.label}': {w}")
    return warnings


def analyze_structure(spec: OperatorSpec, rel_tol: Optional[float] = None) -> StructureReport:
    """
    Ranks, homogeneous dimension, principal drift and dilation weights in one report.

    Args:
        spec: Operator specification
        rel_tol: Rank threshold (settings.rank_tol)

    Returns:
        StructureReport
    """
    ranks = canonical_ranks(spec, rel_tol)
    B_bar, invariant = shifted_drift(spec, ranks)
    report = StructureReport(
        ranks=ranks,
        D=homogeneous_dimension(ranks),
        dilation_weights=dilation_weights(ranks),
        B_bar=B_bar,
        is_dilation_invariant=invariant,
        layout_warnings=canonical_layout_check(spec, ranks),
    )
    logger.info(f"Structure of '{spec.label}': ranks={report.ranks}, D={report.D}, "
                f"dilation invariant={report.is_dilation_invariant}")
    return report
