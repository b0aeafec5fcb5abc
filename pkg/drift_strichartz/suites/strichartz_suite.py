"""
Strichartz suite: space-time quotients ||u||_{L^q L^r} / (||phi||_2 + ||F||_dual)
for a family of Gaussian probes, their stability across scales, dilations
and resolutions, and one forced case.

Probe scale sigma means the unit Gaussian dilated to widths sigma^{w_j}
(w the dilation weights), sampled on the lattice dilated by the same factors
and followed over the window [-sigma^2 T, sigma^2 T]. For a dilation-invariant
drift every scale is then the same computation in rescaled coordinates.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from drift_strichartz.config import get_settings
from drift_strichartz.core.gramian import OperatorSpec
from drift_strichartz.core.regimes import PairSpec, RegimeReport, classify
from drift_strichartz.core.structure import StructureReport, analyze_structure
from drift_strichartz.errors import DomainError, DriftStrichartzError
from drift_strichartz.propagation.grid import (
    GridSpec,
    WaveField,
    frequency_half_widths,
    gaussian_probe,
    lebesgue_norm,
    mixed_norm,
)
from drift_strichartz.propagation.propagator import duhamel_solve, guard_report, propagate_many
from drift_strichartz.suites.base import SuiteReport

logger = logging.getLogger(__name__)

FAMILY_RATIO_MAX = 1.2
DILATION_TOL = 0.2
REFINEMENT_TOL = 0.1
WINDOW_SHRINK = 0.8
MAX_SHRINKS = 40
# Default windows: hypothesis B needs samples past |t| = 1 for its L^{q_inf} tail
DEFAULT_WINDOW = {"A": 1.0, "B": 3.0}
BREAKPOINTS = (-1.0, 1.0)

Series = List[Tuple[float, float]]


def time_grid(T: float, samples: int, breakpoints: bool = False) -> List[float]:
    """-T..-1e-3 T, 0, 1e-3 T..T, log-spaced on each side; +-1 are added when requested and inside."""
    side = np.geomspace(1e-3 * T, T, samples)
    if breakpoints and T > 1.0:
        side = np.union1d(side, [1.0])
    return [float(t) for t in -side[::-1]] + [0.0] + [float(t) for t in side]


def _with_breakpoints(series: Series) -> Series:
    """Sort by time and insert linearly interpolated samples at t = +-1 when the series straddles them."""
    points = sorted(series)
    for b in BREAKPOINTS:
        times = [p[0] for p in points]
        if len(points) < 2 or not times[0] < b < times[-1] or b in times:
            continue
        k = int(np.searchsorted(times, b))
        (t0, a0), (t1, a1) = points[k - 1], points[k]
        points.insert(k, (b, a0 + (a1 - a0) * (b - t0) / (t1 - t0)))
    return points


def _segment_norm(series: Series, q: float, trB: float) -> float:
    if len(series) < 2:
        return 0.0
    return mixed_norm(series, q, trB, 1)


def split_norm_parts(series: Series, pair: PairSpec, trB: float) -> Tuple[float, float]:
    """
    The two terms of the hypothesis B norm.

    Returns:
        (inner, tail): the L^q norm over |t| <= 1 and the L^{q_inf} norm over
        t <= -1 and t >= 1, with samples at +-1 interpolated in
    """
    if pair.q_infty is None:
        raise DomainError("the split norm needs a pair with q_infty")
    points = _with_breakpoints(series)
    inner = _segment_norm([p for p in points if abs(p[0]) <= 1.0], pair.q, trB)
    outer = [[p for p in points if p[0] <= -1.0], [p for p in points if p[0] >= 1.0]]
    if np.isinf(pair.q_infty):
        tail = max(_segment_norm(seg, pair.q_infty, trB) for seg in outer)
    else:
        tail = sum(_segment_norm(seg, pair.q_infty, trB) ** pair.q_infty for seg in outer) ** (1.0 / pair.q_infty)
    return inner, tail


def split_norm(series: Series, pair: PairSpec, trB: float, hypothesis: str) -> float:
    """
    Time norm of the space norms.

    Under hypothesis A this is the weighted L^q norm. Under hypothesis B it is
    the sum-space norm L^q + L^{q_inf}, bounded by splitting at |t| = 1.
    """
    if hypothesis != "B" or pair.q_infty is None:
        return mixed_norm(series, pair.q, trB, 1)
    inner, tail = split_norm_parts(series, pair, trB)
    return inner + tail


def dual_norm(series: Series, pair: PairSpec, trB: float, hypothesis: str) -> float:
    """Weighted L^{q'} norm; under hypothesis B the intersection norm max(L^{q'}, L^{q_inf'})."""
    value = mixed_norm(series, pair.q_dual, trB, 1)
    if hypothesis == "B" and pair.q_infty_dual is not None:
        value = max(value, mixed_norm(series, pair.q_infty_dual, trB, 1))
    return value


def dilated_probe(grid: GridSpec, weights: Sequence[float], sigma: float) -> WaveField:
    """The unit Gaussian with widths sigma^{w_j} on the lattice dilated by sigma^{w_j}."""
    factors = float(sigma) ** np.asarray(weights, dtype=float)
    lattice = grid.rescaled(tuple(grid.box * factors))
    return gaussian_probe(lattice, 1.0, scale=1.0 / factors)


class StrichartzSuite:
    """Brute-force Strichartz quotients for Gaussian probes."""

    def __init__(self, method: Optional[str] = None):
        """
        Initialize the Strichartz suite.

        Args:
            method: Propagation method (settings.method)
        """
        self.name = "Strichartz Suite"
        self.method = method
        logger.info(f"Initializing {self.name}")

    def run(self, spec: OperatorSpec, grid: GridSpec, pair: PairSpec,
            probe_family: Sequence[float] = (0.5, 1.0, 2.0), T: Optional[float] = None, samples: int = 12,
            dilations: Sequence[float] = (0.5, 2.0), forced: bool = True, refine: bool = False,
            structure: Optional[StructureReport] = None, regime: Optional[RegimeReport] = None) -> SuiteReport:
        """
        Run the suite.

        Args:
            spec: Operator specification
            grid: Lattice of the unit-scale probe
            pair: Admissible pair for the operator's D (with q_infty under hypothesis B)
            probe_family: Probe scales sigma
            T: Unit-scale window [-T, T], shrunk until the guard passes
               (default 1 under hypothesis A, 3 under hypothesis B)
            samples: Log-spaced times per sign
            dilations: lambda values for the rescaling check (dilation-invariant drifts only)
            forced: Also run the forced case phi = 0 with a Gaussian pulse
            refine: Also compare against the grid with 2N points per axis

        Returns:
            SuiteReport
        """
        logger.info(f"Running {self.name} for '{spec.label}' with (q, r) = ({pair.q:.6g}, {pair.r:.6g})")
        report = SuiteReport(suite_name="strichartz", spec_label=spec.label)

        # Step 1: the pair must be admissible for this operator
        structure = structure or analyze_structure(spec)
        regime = regime or classify(spec, structure)
        D = structure.D
        if D > 2 and not pair.r < 2.0 * D / (D - 2.0):
            raise DomainError(f"r={pair.r} is not admissible for D={D}: bound 2D/(D-2) = {2.0 * D / (D - 2.0):.6g}")
        if abs(pair.D - D) > 1e-12:
            raise DomainError(f"pair was built for D={pair.D}, operator has D={D}")
        if regime.hypothesis == "B" and pair.q_infty is None:
            raise DomainError("hypothesis B needs a pair with q_infty")
        hypothesis = regime.hypothesis
        invariant = structure.is_dilation_invariant
        weights = structure.dilation_weights
        T = DEFAULT_WINDOW[hypothesis] if T is None else T

        # Step 2: dilated probes, each resolved on its lattice, and a window every scale can reach
        probes = {sigma: dilated_probe(grid, weights, sigma) for sigma in probe_family}
        mass = get_settings().support_mass
        unresolved = [s for s, phi in probes.items() if np.any(frequency_half_widths(phi, mass) >= phi.grid.nyquist)]
        if unresolved:
            report.flag("probes resolved on their lattices", False,
                        note=f"spectrum reaches the lattice edge for sigma in {unresolved}")
            return report
        T, shrinks = self._resolve_window(spec, probes, T)
        if T is None:
            report.flag("resolvable time window", False, note=f"guard fails after {MAX_SHRINKS} shrinks")
            return report
        use_breakpoints = hypothesis == "B"
        report.info.update({"T": T, "shrinks": shrinks, "q": pair.q, "r": pair.r, "hypothesis": hypothesis,
                            "N": grid.N, "L": list(grid.L), "dilation_weights": list(weights),
                            "windows": {str(s): s * s * T for s in probes},
                            "lattices": {str(s): list(phi.grid.L) for s, phi in probes.items()}})

        # Step 3: free quotients per probe scale
        all_series: Dict[float, Series] = {}
        quotients: Dict[float, float] = {}
        tails: Dict[float, float] = {}
        rows: List[List[float]] = []
        for sigma, phi in probes.items():
            ts = time_grid(sigma * sigma * T, samples, use_breakpoints)
            series = all_series[sigma] = self._series(report, spec, phi, ts, pair.r)
            rows.extend([sigma, t, a] for t, a in series)
            quotients[sigma] = split_norm(series, pair, spec.trB, hypothesis) / lebesgue_norm(phi, 2)
            if use_breakpoints:
                tails[sigma] = split_norm_parts(series, pair, spec.trB)[1]
            report.at_least(f"quotient finite and positive, sigma={sigma}", quotients[sigma], 0.0, strict=True)
        report.table(["sigma", "t", "norm_r"], rows)
        report.info["quotients"] = {str(s): q for s, q in quotients.items()}
        family = max(quotients.values()) / min(quotients.values())
        report.info["family_ratio"] = family
        if invariant:
            report.at_most("family max/min quotient across probe scales", family, FAMILY_RATIO_MAX)
        else:
            logger.info(f"Family ratio {family:.4g} for '{spec.label}' is recorded only, the drift is not "
                        f"dilation invariant")
        if use_breakpoints:
            report.info["tails"] = {str(s): v for s, v in tails.items()}
            for sigma, tail in tails.items():
                if tail == 0.0:
                    report.skip(None, f"window {sigma * sigma * T:.4g} for sigma={sigma} ends inside |t| <= 1, "
                                      f"the L^q_inf tail is not sampled")

        sigma_ref = list(probe_family)[len(probe_family) // 2]
        phi_ref = probes[sigma_ref]
        T_ref = sigma_ref * sigma_ref * T

        # Step 4: parabolic rescaling, ||u_lambda|| = lambda^{-(2/q + D/r)} ||u||
        if invariant and hypothesis == "A":
            self._dilation(report, spec, pair, structure, phi_ref, all_series[sigma_ref], sigma_ref, T_ref,
                           samples, dilations)

        # Step 5: resolution
        if refine:
            fine = grid.refined()
            phi_fine = dilated_probe(fine, weights, sigma_ref)
            series = self._series(report, spec, phi_fine, time_grid(T_ref, samples, use_breakpoints), pair.r)
            q_fine = split_norm(series, pair, spec.trB, hypothesis) / lebesgue_norm(phi_fine, 2)
            report.close(f"N={grid.N} vs N={fine.N} quotient", quotients[sigma_ref], q_fine, REFINEMENT_TOL)

        # Step 6: forced case phi = 0, one pulse per probe scale
        if forced:
            self._forced(report, spec, pair, hypothesis, probes, T, samples, sigma_ref, invariant)

        logger.info(f"{self.name} for '{spec.label}': {'pass' if report.passed else 'FAIL'} on T={T:.4g}")
        return report

    def _resolve_window(self, spec: OperatorSpec, probes: Dict[float, WaveField],
                        T: float) -> Tuple[Optional[float], int]:
        for shrinks in range(MAX_SHRINKS + 1):
            bad = [v["message"] for sigma, phi in probes.items() for t in (sigma * sigma * T, -sigma * sigma * T)
                   for v in guard_report(spec, phi, t, self.method)["violations"]]
            if not bad:
                return T, shrinks
            logger.warning(f"Shrinking window for '{spec.label}' from T={T:.4g} to {T * WINDOW_SHRINK:.4g}: {bad[0]}")
            T *= WINDOW_SHRINK
        return None, MAX_SHRINKS

    def _series(self, report: SuiteReport, spec: OperatorSpec, phi: WaveField, ts: Sequence[float],
                r: float) -> Series:
        series: Series = []
        for t, result in zip(ts, propagate_many(spec, phi, ts, self.method)):
            if isinstance(result, DriftStrichartzError):
                report.skip(t, str(result))
                continue
            series.append((t, lebesgue_norm(result, r)))
        return series

    def _dilation(self, report: SuiteReport, spec: OperatorSpec, pair: PairSpec, structure: StructureReport,
                  phi_ref: WaveField, series_ref: Series, sigma_ref: float, T_ref: float, samples: int,
                  dilations: Sequence[float]) -> None:
        w = np.asarray(structure.dilation_weights, dtype=float)
        base = mixed_norm(series_ref, pair.q, spec.trB, 1)
        exponent = 2.0 / pair.q + structure.D / pair.r
        for lam in dilations:
            # phi o delta_lambda on the lattice shrunk by the same factors
            lattice = phi_ref.grid.rescaled(tuple(phi_ref.grid.box / lam ** w))
            phi_lam = gaussian_probe(lattice, 1.0, scale=lam ** w / sigma_ref ** w)
            series = self._series(report, spec, phi_lam, time_grid(T_ref / lam ** 2, samples), pair.r)
            measured = mixed_norm(series, pair.q, spec.trB, 1) * lam ** exponent / base
            report.close(f"dilation invariance lambda={lam}", measured, 1.0, DILATION_TOL)

    def _forced(self, report: SuiteReport, spec: OperatorSpec, pair: PairSpec, hypothesis: str,
                probes: Dict[float, WaveField], T: float, samples: int, sigma_ref: float,
                invariant: bool) -> None:
        constants: Dict[float, float] = {}
        for sigma, pulse in probes.items():
            window = sigma * sigma * T
            t_grid = list(np.linspace(0.0, window, 2 * samples + 1))
            center, width = window / 2.0, window / 8.0
            forcing = [pulse.replace(np.exp(-((t - center) / width) ** 2) * pulse.samples, t=t) for t in t_grid]
            zero = pulse.replace(np.zeros(pulse.grid.shape))
            try:
                solution = duhamel_solve(spec, zero, forcing, t_grid, self.method)
            except DriftStrichartzError as e:
                logger.error(f"Error in forced case for '{spec.label}' at sigma={sigma}: {str(e)}")
                report.flag(f"forced case resolved, sigma={sigma}", False, note=str(e))
                return
            lhs = split_norm([(u.t, lebesgue_norm(u, pair.r)) for u in solution], pair, spec.trB, hypothesis)
            rhs = dual_norm([(f.t, lebesgue_norm(f, pair.r_dual)) for f in forcing], pair, spec.trB, hypothesis)
            constants[sigma] = lhs / rhs
            report.at_least(f"forced constant finite and positive, sigma={sigma}", constants[sigma], 0.0,
                            strict=True)
        report.info["forced_constants"] = {str(s): c for s, c in constants.items()}
        report.info["forced_constant"] = constants[sigma_ref]
        spread = max(constants.values()) / min(constants.values())
        report.info["forced_ratio"] = spread
        if invariant:
            report.at_most("forced case max/min constant across probe scales", spread, FAMILY_RATIO_MAX)


def run_strichartz_suite(spec: OperatorSpec, grid: GridSpec, pair: PairSpec,
                         probe_family: Sequence[float] = (0.5, 1.0, 2.0), method: Optional[str] = None,
                         **options) -> SuiteReport:
    """Run the Strichartz suite for one operator, grid and pair."""
    return StrichartzSuite(method).run(spec, grid, pair, probe_family, **options)
