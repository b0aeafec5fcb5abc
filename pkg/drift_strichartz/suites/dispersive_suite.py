"""
Dispersive suite: the normalized decay quotient

    ||U(t) phi||_r V(|t|)^{1/2 - 1/r} w(t) / ||phi||_{r'}

with w(t) = e^{t trB / r} for t > 0 and e^{-trB |t| / r'} for t < 0, tabulated
over both time directions for Gaussian data.
"""

import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from drift_strichartz.config import get_settings
from drift_strichartz.core.gramian import OperatorSpec, log_volume
from drift_strichartz.core.linalg import numerical_rank
from drift_strichartz.errors import DriftStrichartzError
from drift_strichartz.propagation.grid import GridSpec, WaveField, gaussian_probe, lebesgue_norm
from drift_strichartz.propagation.propagator import propagate_many
from drift_strichartz.suites.base import SuiteReport

logger = logging.getLogger(__name__)

TREND_SLOPE_MAX = 0.05
FREE_SLOPE_TOL = 0.05


def conjugate_exponent(r: float) -> float:
    if np.isinf(r):
        return 1.0
    return r / (r - 1.0)


def dispersive_quotient(spec: OperatorSpec, u: WaveField, t: float, r: float, phi_norm: float) -> float:
    """
    The normalized quotient at one time.

    Args:
        spec: Operator specification
        u: U(t) phi
        t: Nonzero time
        r: Space exponent >= 2 or inf
        phi_norm: ||phi||_{r'}

    Returns:
        The quotient
    """
    tau = abs(t)
    gap = 0.5 if np.isinf(r) else 0.5 - 1.0 / r
    if t > 0:
        log_w = 0.0 if np.isinf(r) else t * spec.trB / r
    else:
        log_w = -spec.trB * tau / conjugate_exponent(r)
    log_q = np.log(lebesgue_norm(u, r)) + gap * log_volume(spec, tau) + log_w - np.log(phi_norm)
    return float(np.exp(log_q))


def trend_slope(ts: Sequence[float], values: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log value against log |t| over the upper half of the window."""
    ts = np.abs(np.asarray(ts, dtype=float))
    values = np.asarray(values, dtype=float)
    order = np.argsort(ts)
    ts, values = ts[order], values[order]
    upper = ts >= np.sqrt(ts[0] * ts[-1]) if len(ts) else ts
    if np.count_nonzero(upper) < 3:
        return None
    slope, _ = np.polyfit(np.log(ts[upper]), np.log(values[upper]), 1)
    return float(slope)


class DispersiveSuite:
    """Tabulates the decay quotient and checks it has no growing trend."""

    def __init__(self, method: Optional[str] = None):
        """
        Initialize the dispersive suite.

        Args:
            method: Propagation method (settings.method)
        """
        self.name = "Dispersive Suite"
        self.method = method
        logger.info(f"Initializing {self.name}")

    def run(self, spec: OperatorSpec, grid: GridSpec, r_values: Sequence[float] = (4.0, float("inf")),
            sigma: Optional[float] = None, t_window=(0.1, 5.0), samples: int = 16) -> SuiteReport:
        """
        Run the suite.

        Args:
            spec: Operator specification
            grid: Lattice
            r_values: Space exponents (2 checks conservation)
            sigma: Probe width (a quarter of the guard-band half-width by default)
            t_window: Range of |t|
            samples: Log-spaced times per sign

        Returns:
            SuiteReport
        """
        logger.info(f"Running {self.name} for '{spec.label}' with r in {list(r_values)}")
        report = SuiteReport(suite_name="dispersive", spec_label=spec.label)
        sigma = sigma or 0.25 * min(grid.L) * (1.0 - 2.0 * grid.margin)
        phi = gaussian_probe(grid, sigma)
        report.info.update({"sigma": sigma, "N": grid.N, "L": list(grid.L), "t_window": list(t_window)})

        # Step 1: propagate once per time, reuse for every r
        positive = list(np.geomspace(t_window[0], t_window[1], samples))
        times = [-t for t in reversed(positive)] + positive
        fields: Dict[float, WaveField] = {}
        for t, result in zip(times, propagate_many(spec, phi, times, self.method)):
            if isinstance(result, DriftStrichartzError):
                report.skip(t, str(result))
            else:
                fields[t] = result

        # Step 2: quotients and trend per exponent and direction
        rows: List[List[float]] = []
        for r in r_values:
            phi_norm = lebesgue_norm(phi, conjugate_exponent(r))
            for direction, sign in (("forward", 1.0), ("backward", -1.0)):
                resolved = [t for t in times if t * sign > 0 and t in fields]
                values = [dispersive_quotient(spec, fields[t], t, r, phi_norm) for t in resolved]
                rows.extend([t, r, v] for t, v in zip(resolved, values))
                if r == 2:
                    for t, v in zip(resolved, values):
                        report.close(f"conservation r=2 at t={t:.4g}", v, 1.0, 1e-6)
                    continue
                slope = trend_slope(resolved, values)
                if slope is None:
                    report.skip(None, f"r={r} {direction}: fewer than 3 resolved samples in the upper window")
                    continue
                report.at_most(f"no growth trend r={r} {direction} (log-log slope)", slope, TREND_SLOPE_MAX)
        report.table(["t", "r", "quotient"], rows)

        # Step 3: classical rate for the free equation
        if self._is_free(spec):
            self._check_free_slope(report, spec, phi)

        logger.info(f"{self.name} for '{spec.label}': {'pass' if report.passed else 'FAIL'}, "
                    f"{len(fields)} of {len(times)} times resolved")
        return report

    @staticmethod
    def _is_free(spec: OperatorSpec) -> bool:
        return (numerical_rank(spec.Q, get_settings().rank_tol) == spec.n
                and not np.any(spec.B))

    def _check_free_slope(self, report: SuiteReport, spec: OperatorSpec, phi: WaveField) -> None:
        ts = list(np.geomspace(1.0, 5.0, 12))
        resolved, peaks = [], []
        for t, result in zip(ts, propagate_many(spec, phi, ts, self.method)):
            if isinstance(result, DriftStrichartzError):
                report.skip(t, str(result))
                continue
            resolved.append(t)
            peaks.append(lebesgue_norm(result, float("inf")))
        if len(resolved) < 3:
            report.flag("free decay slope on [1, 5]", False, note="fewer than 3 resolved times")
            return
        slope, _ = np.polyfit(np.log(resolved), np.log(peaks), 1)
        report.close("free decay slope of ||U(t)phi||_inf on [1, 5]", float(slope), -spec.n / 2.0, FREE_SLOPE_TOL)


def run_dispersive_suite(spec: OperatorSpec, grid: GridSpec, r_values: Sequence[float] = (4.0, float("inf")),
                         method: Optional[str] = None, sigma: Optional[float] = None,
                         t_window=(0.1, 5.0)) -> SuiteReport:
    """Run the dispersive suite for one operator on one grid."""
    return DispersiveSuite(method).run(spec, grid, r_values, sigma, t_window)
