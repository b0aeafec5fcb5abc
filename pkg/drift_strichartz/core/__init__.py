"""
Linear algebra of (Q, B): Gramian, volume function, canonical structure and regimes.
"""

from drift_strichartz.core.gramian import (
    GramianSample,
    OperatorSpec,
    check_hoermander,
    gramian_at,
    gramian_limit,
    gramian_series,
    volume,
)
from drift_strichartz.core.structure import StructureReport, analyze_structure, canonical_ranks
from drift_strichartz.core.regimes import PairSpec, RegimeReport, admissible_pair, classify, strichartz_pair

__all__ = [
    "GramianSample",
    "OperatorSpec",
    "check_hoermander",
    "gramian_at",
    "gramian_limit",
    "gramian_series",
    "volume",
    "StructureReport",
    "analyze_structure",
    "canonical_ranks",
    "PairSpec",
    "RegimeReport",
    "admissible_pair",
    "classify",
    "strichartz_pair"
]
