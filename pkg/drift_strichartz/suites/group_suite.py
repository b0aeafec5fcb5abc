"""
Group suite: U(0) = I, weighted unitarity, the group law and the inverse.
"""

import logging
from typing import List, Optional, Tuple

from drift_strichartz.core.gramian import OperatorSpec
from drift_strichartz.errors import GeometryError, ResolutionError
from drift_strichartz.propagation.grid import GridSpec, WaveField, gaussian_probe, lebesgue_norm
from drift_strichartz.propagation.propagator import propagate, weighted_field
from drift_strichartz.suites.base import SuiteReport

logger = logging.getLogger(__name__)

UNITARITY_TIMES = [-1.0, -0.5, -0.1, 0.1, 0.5, 1.0]
GROUP_PAIRS = [(0.2, 0.2), (0.5, -0.1), (-0.3, 0.1), (0.1, 0.3)]
INVERSE_TIMES = [0.1, 0.5]


def _l2_distance(a: WaveField, b: WaveField) -> float:
    return lebesgue_norm(a.samples - b.samples, 2, a.grid)


class GroupSuite:
    """Audits the algebraic properties of the discrete propagator."""

    def __init__(self, method: Optional[str] = None):
        """
        Initialize the group suite.

        Args:
            method: Propagation method (settings.method)
        """
        self.name = "Group Suite"
        self.method = method
        logger.info(f"Initializing {self.name}")

    def run(self, spec: OperatorSpec, grid: GridSpec, sigma: Optional[float] = None,
            modulated: bool = False) -> SuiteReport:
        """
        Run the suite on a centered Gaussian probe.

        Args:
            spec: Operator specification
            grid: Lattice
            sigma: Probe width (a quarter of the guard-band half-width by default)
            modulated: Also audit a modulated Gaussian

        Returns:
            SuiteReport
        """
        logger.info(f"Running {self.name} for '{spec.label}' on N={grid.N}, L={grid.L}")
        report = SuiteReport(suite_name="group", spec_label=spec.label)
        sigma = sigma or 0.25 * min(grid.L) * (1.0 - 2.0 * grid.margin)
        probes: List[Tuple[str, WaveField]] = [("gaussian", gaussian_probe(grid, sigma))]
        if modulated:
            omega = 0.125 * grid.nyquist
            probes.append(("modulated", gaussian_probe(grid, sigma, omega=omega)))
        report.info.update({"sigma": sigma, "N": grid.N, "L": list(grid.L), "method": self.method})

        for tag, phi in probes:
            self._audit(report, spec, phi, tag)

        resolved = sum(1 for c in report.checks if c.name.startswith("unitarity"))
        report.at_least("resolved unitarity samples", float(resolved), 1.0)
        logger.info(f"{self.name} for '{spec.label}': {'pass' if report.passed else 'FAIL'}, "
                    f"{len(report.skipped)} samples skipped")
        return report

    def _propagate(self, report: SuiteReport, spec: OperatorSpec, phi: WaveField, t: float) -> Optional[WaveField]:
        try:
            return propagate(spec, phi, t, self.method)
        except (GeometryError, ResolutionError) as e:
            logger.warning(f"Skipping t={t} for '{spec.label}': {str(e)}")
            report.skip(t, str(e))
            return None

    def _audit(self, report: SuiteReport, spec: OperatorSpec, phi: WaveField, tag: str) -> None:
        norm = lebesgue_norm(phi, 2)

        # Step 1: U(0) is the identity
        same = propagate(spec, phi, 0.0, self.method)
        report.at_most(f"identity U(0) [{tag}]", _l2_distance(same, phi) / norm, 0.0)

        # Step 2: weighted L^2 norm is preserved
        rows = []
        for t in UNITARITY_TIMES:
            u = self._propagate(report, spec, phi, t)
            if u is None:
                continue
            measured = lebesgue_norm(weighted_field(spec, u), 2) / norm
            rows.append([t, measured])
            report.close(f"unitarity e^(t trB/2)||U(t)phi|| / ||phi|| at t={t} [{tag}]", measured, 1.0, 1e-6)
        if tag == "gaussian":
            report.table(["t", "weighted_l2_ratio"], rows)

        # Step 3: group law
        for t, s in GROUP_PAIRS:
            ut = self._propagate(report, spec, phi, t)
            if ut is None:
                continue
            uts = self._propagate(report, spec, ut, s)
            direct = self._propagate(report, spec, phi, t + s)
            if uts is None or direct is None:
                continue
            report.at_most(f"group law U({s})U({t}) = U({t + s:g}) [{tag}]", _l2_distance(uts, direct) / norm, 1e-5)

        # Step 4: inverse
        for t in INVERSE_TIMES:
            ut = self._propagate(report, spec, phi, t)
            if ut is None:
                continue
            back = self._propagate(report, spec, ut, -t)
            if back is None:
                continue
            report.at_most(f"inverse U(-{t})U({t}) = I [{tag}]", _l2_distance(back, phi) / norm, 1e-5)


def run_group_suite(spec: OperatorSpec, grid: GridSpec, method: Optional[str] = None,
                    sigma: Optional[float] = None, modulated: bool = False) -> SuiteReport:
    """Run the group suite for one operator on one grid."""
    return GroupSuite(method).run(spec, grid, sigma, modulated)
