"""
Controllability Gramian Q(t) = int_0^t e^{sB} Q e^{sB^T} ds and the volume
function V(t) = det Q(t), together with the Hoermander/Kalman check and the
stationary limit Q_inf.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as la
from scipy.integrate import quad_vec
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from drift_strichartz.config import GRAMIAN_METHODS, get_settings
from drift_strichartz.core.linalg import (
    as_matrix,
    cholesky_logdet,
    equilibrated_min_eigenvalue,
    expm,
    expm_series,
    is_symmetric,
    krylov_rank_profile,
    spectrum,
    sqrt_psd,
)
from drift_strichartz.errors import (
    ConsistencyError,
    DegenerateGramianError,
    DimensionError,
    DomainError,
    HoermanderError,
    NumericalError,
)

logger = logging.getLogger(__name__)


def _frozen(A: np.ndarray) -> np.ndarray:
    A = np.array(A, dtype=float)
    A.setflags(write=False)
    return A


def _validate_q(Q: np.ndarray) -> np.ndarray:
    scale = max(1.0, float(np.abs(Q).max(initial=0.0)))
    if not is_symmetric(Q, 1e-12 * scale):
        raise DomainError("Q must be symmetric")
    Q = 0.5 * (Q + Q.T)
    min_eig = float(la.eigvalsh(Q)[0]) if Q.size else 0.0
    if min_eig < -1e-12 * max(np.linalg.norm(Q, 2), 1e-300):
        raise DomainError(f"Q must be positive semidefinite (min eigenvalue {min_eig:.3e})")
    return Q


class OperatorSpec(BaseModel):
    """
    Validated pair (Q, B) of the operator i tr(Q D^2) + <Bx, D>.
    Condition (H) is checked at construction.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    Q: np.ndarray
    B: np.ndarray
    label: str = "custom"

    @field_validator("Q", "B", mode="before")
    @classmethod
    def _to_array(cls, value: Any, info) -> np.ndarray:
        return as_matrix(value, info.field_name)

    @model_validator(mode="after")
    def _check(self) -> "OperatorSpec":
        if self.Q.shape != self.B.shape:
            raise DimensionError(f"Q has shape {self.Q.shape} but B has shape {self.B.shape}")
        Q = _validate_q(self.Q)
        holds, diagnostic = check_hoermander(Q, self.B)
        if not holds:
            raise HoermanderError(
                f"(H) fails for '{self.label}': Krylov rank profile {diagnostic['profile']} "
                f"never reaches n={self.Q.shape[0]}",
                profile=diagnostic["profile"],
            )
        object.__setattr__(self, "Q", _frozen(Q))
        object.__setattr__(self, "B", _frozen(self.B))
        return self

    @property
    def n(self) -> int:
        return int(self.Q.shape[0])

    @property
    def trB(self) -> float:
        return float(np.trace(self.B))

    def with_drift(self, B: np.ndarray, label: Optional[str] = None) -> "OperatorSpec":
        """Same Q with another drift."""
        return OperatorSpec(Q=self.Q, B=B, label=label or self.label)

    def to_problem(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "Q": self.Q.ravel().tolist(),
            "B": self.B.ravel().tolist(),
            "label": self.label,
        }


class GramianSample(BaseModel):
    """Q(t) at one time with its log-determinant and V(t)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    t: float = Field(gt=0)
    Qt: np.ndarray
    logdet: float
    V: float


def _van_loan_gramian(Q: np.ndarray, B: np.ndarray, t: float) -> np.ndarray:
    """
    Gramian by the augmented block exponential on a short step, then doubling.

    exp(h [[-B, Q], [0, B^T]]) = [[*, G], [0, F]] with F = e^{hB^T} and
    Q(h) = F^T G. Doubling uses Q(2s) = Q(s) + e^{sB} Q(s) e^{sB^T}.
    """
    n = B.shape[0]
    norm = float(np.linalg.norm(B, 1))
    k = 0
    if t * norm > 0.5:
        k = int(np.ceil(np.log2(2.0 * t * norm)))
    h = t / 2.0 ** k

    M = np.zeros((2 * n, 2 * n))
    M[:n, :n] = -B
    M[:n, n:] = Q
    M[n:, n:] = B.T
    E = expm_series(h * M, min_terms=2 * n + 2)
    F = E[n:, n:]
    Qh = F.T @ E[:n, n:]
    Eh = F.T
    for _ in range(k):
        Qh = Qh + Eh @ Qh @ Eh.T
        Eh = Eh @ Eh
    return 0.5 * (Qh + Qh.T)


def _quadrature_gramian(Q: np.ndarray, B: np.ndarray, t: float, rel: float) -> np.ndarray:
    """Gramian by adaptive Gauss-Kronrod quadrature of the integrand."""
    n = B.shape[0]

    def integrand(s: float) -> np.ndarray:
        E = expm(B, s)
        return (E @ Q @ E.T).ravel()

    value, _ = quad_vec(integrand, 0.0, t, epsabs=0.0, epsrel=rel, norm="max", quadrature="gk21")
    G = np.asarray(value).reshape(n, n)
    return 0.5 * (G + G.T)


def gramian_matrix(Q: np.ndarray, B: np.ndarray, t: float, method: Optional[str] = None) -> np.ndarray:
    """
    Raw Gramian of the matrix pair (Q, B) at time t > 0.

    Args:
        Q: PSD diffusion matrix
        B: Drift matrix
        t: Positive time
        method: 'augmented-exponential' or 'adaptive-quadrature'

    Returns:
        Q(t) as a symmetric array
    """
    settings = get_settings()
    method = method or settings.gramian_method
    if method not in GRAMIAN_METHODS:
        raise DomainError(f"unknown Gramian method {method!r}; expected one of {GRAMIAN_METHODS}")
    if not (t > 0 and np.isfinite(t)):
        raise DomainError(f"Gramian time must be positive and finite, got {t}")
    if method == "augmented-exponential":
        return _van_loan_gramian(Q, B, t)
    return _quadrature_gramian(Q, B, t, settings.quadrature_rel)


def check_hoermander(Q, B, rel_tol: Optional[float] = None) -> Tuple[bool, Dict[str, Any]]:
    """
    Check condition (H) by the Kalman rank test and cross-check with Q(1).

    Args:
        Q: Symmetric PSD matrix
        B: Drift matrix
        rel_tol: Rank / positivity threshold (settings.rank_tol)

    Returns:
        (holds, diagnostic) where diagnostic has the Krylov rank profile and
        the equilibrated minimum eigenvalue of Q(1)
    """
    rel_tol = get_settings().rank_tol if rel_tol is None else rel_tol
    Q = _validate_q(as_matrix(Q, "Q"))
    B = as_matrix(B, "B")
    if Q.shape != B.shape:
        raise DimensionError(f"Q has shape {Q.shape} but B has shape {B.shape}")
    n = Q.shape[0]

    # Step 1: Kalman rank of [A, BA, ..., B^{n-1}A] with A = Q^{1/2}
    A = sqrt_psd(Q)
    profile = krylov_rank_profile(B, A, rel_tol)
    kalman = profile[-1] == n

    # Step 2: positivity of the unit-time Gramian
    G1 = gramian_matrix(Q, B, 1.0, "augmented-exponential")
    min_eig = equilibrated_min_eigenvalue(G1)
    positive = min_eig > rel_tol

    diagnostic = {"profile": profile, "kalman": kalman, "gramian_min_eig": min_eig}
    if kalman != positive:
        raise ConsistencyError(
            f"Kalman test ({kalman}, profile {profile}) disagrees with Gramian positivity "
            f"({positive}, equilibrated min eigenvalue {min_eig:.3e})"
        )
    logger.debug(f"Hoermander check: {diagnostic}")
    return kalman, diagnostic


def _sample(spec: OperatorSpec, t: float, G: np.ndarray) -> GramianSample:
    try:
        logdet = cholesky_logdet(G)
    except np.linalg.LinAlgError as e:
        raise DegenerateGramianError(t, f"Cholesky failed for '{spec.label}' ({str(e)})")
    return GramianSample(t=t, Qt=G, logdet=logdet, V=float(np.exp(logdet)) if logdet < 709 else float("inf"))


def gramian_at(spec: OperatorSpec, t: float, method: Optional[str] = None) -> GramianSample:
    """
    Q(t), log det Q(t) and V(t) for one time.

    In test mode both methods run and must agree to 1e-8 relative Frobenius.

    Args:
        spec: Operator specification
        t: Positive time
        method: Gramian method (settings.gramian_method)

    Returns:
        GramianSample
    """
    settings = get_settings()
    method = method or settings.gramian_method
    G = gramian_matrix(spec.Q, spec.B, t, method)
    if settings.test_mode:
        other = "adaptive-quadrature" if method == "augmented-exponential" else "augmented-exponential"
        H = gramian_matrix(spec.Q, spec.B, t, other)
        defect = np.linalg.norm(G - H) / max(np.linalg.norm(H), np.finfo(float).tiny)
        if defect > 1e-8:
            raise ConsistencyError(f"Gramian methods disagree at t={t:.6g}: relative defect {defect:.3e}")
    return _sample(spec, t, G)


def volume(spec: OperatorSpec, t: float, method: Optional[str] = None) -> float:
    """V(t) = det Q(t); may overflow to inf for fast-growing drifts (use log_volume)."""
    return gramian_at(spec, t, method).V


def log_volume(spec: OperatorSpec, t: float, method: Optional[str] = None) -> float:
    return gramian_at(spec, t, method).logdet


def gramian_series(spec: OperatorSpec, ts: Sequence[float], method: Optional[str] = None,
                   workers: Optional[int] = None) -> List[GramianSample]:
    """
    Evaluate gramian_at over many times on a worker pool.

    Args:
        spec: Operator specification
        ts: Positive times
        method: Gramian method
        workers: Pool size (settings.workers)

    Returns:
        Samples in the order of ts
    """
    workers = workers or get_settings().workers
    ts = [float(t) for t in ts]
    if workers <= 1 or len(ts) < 2:
        return [gramian_at(spec, t, method) for t in ts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: gramian_at(spec, t, method), ts))


def conjugated_gramian(spec: OperatorSpec, t: float, method: Optional[str] = None) -> np.ndarray:
    """int_0^t e^{-sB} Q e^{-sB^T} ds, the Gramian of the reversed drift."""
    return gramian_matrix(spec.Q, -spec.B, t, method)


def gramian_semigroup_defect(spec: OperatorSpec, t: float, s: float) -> float:
    """Relative Frobenius defect of Q(t+s) = Q(t) + e^{tB} Q(s) e^{tB^T}."""
    Qts = gramian_matrix(spec.Q, spec.B, t + s)
    E = expm(spec.B, t)
    rhs = gramian_matrix(spec.Q, spec.B, t) + E @ gramian_matrix(spec.Q, spec.B, s) @ E.T
    return float(np.linalg.norm(Qts - rhs) / np.linalg.norm(Qts))


def gramian_limit(spec: OperatorSpec, tol: Optional[float] = None) -> Optional[np.ndarray]:
    """
    Stationary Gramian Q_inf solving B X + X B^T + Q = 0.

    Args:
        spec: Operator specification
        tol: Stability margin on max Re sigma(B); defaults to imag_axis_tol*(1+||B||)

    Returns:
        Q_inf when max Re sigma(B) < -tol, otherwise None
    """
    if tol is None:
        tol = get_settings().imag_axis_tol * (1.0 + np.linalg.norm(spec.B, 2))
    spec_B = spectrum(spec.B)
    values = spec_B.values
    worst = values[int(np.argmax(values.real))]
    if worst.real >= -tol:
        logger.info(f"No stationary Gramian for '{spec.label}': eigenvalue {worst:.6g} has Re >= {-tol:.3g}")
        return None
    try:
        X = la.solve_continuous_lyapunov(spec.B, -spec.Q)
    except (la.LinAlgError, ValueError) as e:
        raise NumericalError(f"Lyapunov solve failed for '{spec.label}': {str(e)}")
    return 0.5 * (X + X.T)
