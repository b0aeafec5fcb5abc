"""
Regime classification of (Q, B) and the exponent algebra of admissible pairs.

The decision procedure, in order:
  (i)   some eigenvalue of B off the imaginary axis       -> hypothesis A
  (ii)  Q invertible                                      -> hypothesis A
  (iii) B equal to its principal part B_bar               -> hypothesis A
  (iv)  B similar to a skew-symmetric matrix              -> hypothesis B, D_inf = n
  (v)   anything else: fit the large-time growth exponent D_inf of V(t)
"""

import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from drift_strichartz.config import get_settings
from drift_strichartz.core.gramian import OperatorSpec, gramian_series
from drift_strichartz.core.linalg import Spectrum, is_similar_skew, numerical_rank, spectrum
from drift_strichartz.core.structure import StructureReport
from drift_strichartz.errors import DomainError, InconclusiveRegimeError

logger = logging.getLogger(__name__)

CASE_TAGS = ("Thm1.3-i", "Thm1.3-ii", "Thm1.3-iii", "Thm1.4", "anomalous-A", "anomalous-B")

# Fitted exponents this close to an integer are reported as that integer
_INTEGER_SNAP = 0.1


class RegimeReport(BaseModel):
    """Spectral facts about B and the regime (Q, B) falls in."""

    model_config = ConfigDict(frozen=True)

    trB: float
    spectrum_summary: Spectrum
    case_tag: str
    hypothesis: str
    D: int
    D_infty: Optional[float] = None
    fit_diagnostics: Dict[str, Any] = {}

    def to_dict(self) -> dict:
        return {
            "trB": self.trB,
            "spectrum": self.spectrum_summary.to_dict(),
            "case_tag": self.case_tag,
            "hypothesis": self.hypothesis,
            "D": self.D,
            "D_infty": self.D_infty,
            "fit_diagnostics": dict(self.fit_diagnostics),
        }


class PairSpec(BaseModel):
    """An admissible exponent pair (q, r) with its duals, beta and, under hypothesis B, q_inf."""

    model_config = ConfigDict(frozen=True)

    D: float
    q: float
    r: float
    q_dual: float
    r_dual: float
    beta: float
    q_infty: Optional[float] = None
    q_infty_dual: Optional[float] = None
    D_infty: Optional[float] = None

    def to_dict(self) -> dict:
        return self.model_dump()


def fit_growth_exponent(spec: OperatorSpec, t_lo: Optional[float] = None, t_hi: Optional[float] = None,
                        samples: Optional[int] = None) -> Tuple[float, float]:
    """
    Least-squares slope of log V against log t on a log-spaced window.

    Args:
        spec: Operator specification
        t_lo: Window start (settings.fit_t_lo)
        t_hi: Window end (settings.fit_t_hi)
        samples: Number of log-spaced times, at least 8 (settings.fit_samples)

    Returns:
        (exponent, residual) with residual the largest absolute deviation in log V
    """
    settings = get_settings()
    t_lo = settings.fit_t_lo if t_lo is None else t_lo
    t_hi = settings.fit_t_hi if t_hi is None else t_hi
    samples = settings.fit_samples if samples is None else samples
    if not 0 < t_lo < t_hi:
        raise DomainError(f"fit window must satisfy 0 < t_lo < t_hi, got [{t_lo}, {t_hi}]")
    if samples < 8:
        raise DomainError(f"fit needs at least 8 samples, got {samples}")

    ts = np.geomspace(t_lo, t_hi, samples)
    log_v = np.array([s.logdet for s in gramian_series(spec, ts)])
    log_t = np.log(ts)
    slope, intercept = np.polyfit(log_t, log_v, 1)
    residual = float(np.max(np.abs(log_v - (slope * log_t + intercept))))
    logger.debug(f"Growth fit for '{spec.label}' on [{t_lo}, {t_hi}]: slope={slope:.6f}, residual={residual:.3e}")
    return float(slope), residual


def classify(spec: OperatorSpec, structure: StructureReport, tol: Optional[float] = None) -> RegimeReport:
    """
    Assign (Q, B) to exactly one case of the decision procedure.

    Args:
        spec: Operator specification satisfying (H)
        structure: Its structure report
        tol: Imaginary-axis tolerance on Re sigma(B) (settings.imag_axis_tol*(1+||B||))

    Returns:
        RegimeReport
    """
    settings = get_settings()
    if tol is None:
        tol = settings.imag_axis_tol * (1.0 + np.linalg.norm(spec.B, 2))
    spec_B = spectrum(spec.B)
    n = spec.n
    D = structure.D
    common = {"trB": spec.trB, "spectrum_summary": spec_B, "D": D}

    # Step 1: hyperbolic part present
    if any(abs(re) > tol for re, _ in spec_B.eigenvalues):
        report = RegimeReport(case_tag="Thm1.3-i", hypothesis="A", **common)
    # Step 2: non-degenerate diffusion
    elif numerical_rank(spec.Q, settings.rank_tol) == n:
        report = RegimeReport(case_tag="Thm1.3-ii", hypothesis="A", **common)
    # Step 3: drift is its own principal part, V is an exact power law
    elif structure.is_dilation_invariant:
        report = RegimeReport(case_tag="Thm1.3-iii", hypothesis="A", **common)
    # Step 4: rotation-like drift; the fit is diagnostic only
    elif is_similar_skew(spec.B):
        exponent, residual = fit_growth_exponent(spec)
        report = RegimeReport(case_tag="Thm1.4", hypothesis="B", D_infty=float(n),
                              fit_diagnostics={"exponent": exponent, "residual": residual},
                              **common)
    # Step 5: anomalous, estimate D_inf from the large-time growth
    else:
        report = _classify_anomalous(spec, D, common)

    logger.info(f"Regime of '{spec.label}': {report.case_tag} (hypothesis {report.hypothesis}, "
                f"D={D}, D_infty={report.D_infty})")
    return report


def _classify_anomalous(spec: OperatorSpec, D: int, common: Dict[str, Any]) -> RegimeReport:
    settings = get_settings()
    exponent, residual = fit_growth_exponent(spec)
    diagnostics = {
        "exponent": exponent,
        "residual": residual,
        "t_lo": settings.fit_t_lo,
        "t_hi": settings.fit_t_hi,
        "samples": settings.fit_samples,
    }
    if residual > settings.fit_residual_max:
        raise InconclusiveRegimeError(
            f"growth fit for '{spec.label}' has residual {residual:.3g} > {settings.fit_residual_max}",
            diagnostics=diagnostics,
        )
    if exponent < 2.0 - _INTEGER_SNAP:
        raise InconclusiveRegimeError(
            f"fitted growth exponent {exponent:.4g} for '{spec.label}' is below 2", diagnostics=diagnostics
        )
    D_infty = float(round(exponent)) if abs(exponent - round(exponent)) <= _INTEGER_SNAP else exponent
    D_infty = max(D_infty, 2.0)
    if exponent >= D - settings.anomalous_margin:
        return RegimeReport(case_tag="anomalous-A", hypothesis="A", D_infty=D_infty,
                            fit_diagnostics=diagnostics, **common)
    return RegimeReport(case_tag="anomalous-B", hypothesis="B", D_infty=D_infty,
                        fit_diagnostics=diagnostics, **common)


def _dual(p: float) -> float:
    return p / (p - 1.0)


def admissible_pair(D: float, r: float, D_infty: Optional[float] = None) -> PairSpec:
    """
    The admissible pair with space exponent r: 2/q = D(1/2 - 1/r).

    Args:
        D: Local homogeneous dimension
        r: Space exponent, 2 < r < 2D/(D-2) (no upper bound when D <= 2)
        D_infty: Large-time growth exponent under hypothesis B

    Returns:
        PairSpec; q_infty is the extremal 2/[D_inf(1/2 - 1/r)] when D_infty is given
    """
    if D < 1:
        raise DomainError(f"homogeneous dimension must be >= 1, got {D}")
    if not r > 2:
        raise DomainError(f"space exponent must exceed 2, got r={r}")
    if D > 2 and not r < 2.0 * D / (D - 2.0):
        raise DomainError(f"space exponent r={r} must be below 2D/(D-2) = {2.0 * D / (D - 2.0):.6g} for D={D}")
    gap = 0.5 - 1.0 / r
    q = 2.0 / (D * gap)
    beta = 1.0 - D * gap
    q_infty = q_infty_dual = None
    if D_infty is not None:
        q_infty = 2.0 / (D_infty * gap)
        q_infty_dual = _dual(q_infty)
    return PairSpec(D=D, q=q, r=r, q_dual=_dual(q), r_dual=_dual(r), beta=beta,
                    q_infty=q_infty, q_infty_dual=q_infty_dual, D_infty=D_infty)


def strichartz_pair(D: float, D_infty: Optional[float] = None) -> PairSpec:
    """The diagonal pair q = r = 2(D+2)/D."""
    return admissible_pair(D, 2.0 * (D + 2.0) / D, D_infty)


def pairs_for(report: RegimeReport) -> Dict[str, Any]:
    """Strichartz pair for a classified operator, carrying q_inf under hypothesis B."""
    D_infty = report.D_infty if report.hypothesis == "B" else None
    pair = strichartz_pair(report.D, D_infty)
    return pair.to_dict()
