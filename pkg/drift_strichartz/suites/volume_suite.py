"""
Volume suite: monotonicity, identities and asymptotics of V(t) = det Q(t).
"""

import logging
from typing import List, Optional

import numpy as np

from drift_strichartz.config import get_settings
from drift_strichartz.core.gramian import (
    OperatorSpec,
    conjugated_gramian,
    gramian_limit,
    gramian_matrix,
    gramian_semigroup_defect,
    gramian_series,
    log_volume,
)
from drift_strichartz.core.linalg import expm, spectrum
from drift_strichartz.core.regimes import RegimeReport, classify
from drift_strichartz.core.structure import StructureReport, analyze_structure, canonical_ranks
from drift_strichartz.errors import DriftStrichartzError
from drift_strichartz.suites.base import SuiteReport

logger = logging.getLogger(__name__)

SEMIGROUP_PAIRS = [(0.3, 0.7), (1.0, 2.0), (2.5, 0.5)]
CONJUGATION_TIMES = [0.1, 1.0, 5.0]
CLOSED_FORM_GRAMIAN_TIMES = [0.1, 1.0, 10.0]
# Floor on the lower-bound constants relative to their small-time (or t=1) value
GAMMA_FLOOR = 1e-2
LOWER_BOUND_DIP = 1e-2


class VolumeSuite:
    """
    Checks every applicable property of V(t) for an operator's regime.
    Closed-form comparisons run only when a fixture supplies them.
    """

    def __init__(self):
        """Initialize the volume suite."""
        self.name = "Volume Suite"
        logger.info(f"Initializing {self.name}")

    def run(self, spec: OperatorSpec, fixture=None, structure: Optional[StructureReport] = None,
            regime: Optional[RegimeReport] = None) -> SuiteReport:
        """
        Run the suite.

        Args:
            spec: Operator specification
            fixture: Optional gallery Fixture carrying ground truth
            structure: Precomputed structure report
            regime: Precomputed regime report

        Returns:
            SuiteReport
        """
        logger.info(f"Running {self.name} for '{spec.label}'")
        report = SuiteReport(suite_name="volume", spec_label=spec.label)

        # Step 1: structure and regime
        try:
            structure = structure or analyze_structure(spec)
            regime = regime or classify(spec, structure)
        except DriftStrichartzError as e:
            logger.error(f"Error classifying '{spec.label}': {str(e)}")
            report.flag("classification", False, note=str(e))
            return report
        report.info.update({"ranks": structure.ranks, "D": structure.D, "case_tag": regime.case_tag,
                            "hypothesis": regime.hypothesis, "D_infty": regime.D_infty, "trB": spec.trB})

        # Step 2: monotonicity on a log-spaced window
        ts = np.geomspace(1e-3, 10.0, 64)
        log_v = np.array([s.logdet for s in gramian_series(spec, ts)])
        report.table(["t", "log_V", "log_V_minus_2t_trB"],
                     np.column_stack([ts, log_v, log_v - 2.0 * ts * spec.trB]))
        report.at_least("log V strictly increasing (min step)", float(np.min(np.diff(log_v))), 0.0, strict=True)
        weighted = np.diff(log_v - 2.0 * ts * spec.trB)
        report.at_least("V e^{-2t trB} non-decreasing (min step)", float(np.min(weighted)),
                        -1e-9 * float(np.max(np.abs(log_v))))

        # Step 3: identities of the Gramian
        for t, s in SEMIGROUP_PAIRS:
            report.at_most(f"semigroup defect Q({t}+{s})", gramian_semigroup_defect(spec, t, s), 1e-8)
        for t in CONJUGATION_TIMES:
            E = expm(spec.B, t)
            lhs = gramian_matrix(spec.Q, spec.B, t)
            rhs = E @ conjugated_gramian(spec, t) @ E.T
            defect = float(np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs))
            report.at_most(f"conjugation identity at t={t}", defect, 1e-8)

        # Step 4: small-time universality against the principal drift
        self._check_principal_part(report, spec, structure)

        # Step 5: regime-specific lower bounds and exponents
        self._check_regime(report, spec, structure, regime, fixture)

        # Step 6: ground truth carried by the fixture
        if fixture is not None:
            self._check_fixture(report, spec, structure, regime, fixture)

        # Step 7: stationary limit
        self._check_limit(report, spec, fixture)

        logger.info(f"{self.name} for '{spec.label}': {'pass' if report.passed else 'FAIL'} "
                    f"({len(report.checks)} checks)")
        return report

    def _check_principal_part(self, report: SuiteReport, spec: OperatorSpec, structure: StructureReport) -> None:
        try:
            principal = spec.with_drift(structure.B_bar, label=f"{spec.label}-principal")
        except DriftStrichartzError as e:
            report.flag("principal drift satisfies (H)", False, note=str(e))
            return
        t = 1e-3
        ratio = float(np.exp(log_volume(spec, t) - log_volume(principal, t)))
        report.close("small-time V/V_bar at t=1e-3", ratio, 1.0, 0.05)
        report.flag("canonical ranks of (Q, B_bar) match", canonical_ranks(principal) == structure.ranks)
        if structure.is_dilation_invariant:
            for lam in (0.5, 2.0):
                for t in (0.1, 1.0):
                    scaled = log_volume(principal, lam * lam * t) - log_volume(principal, t)
                    measured = float(np.exp(scaled - 2.0 * structure.D * np.log(lam)))
                    report.close(f"dilation law V(lambda^2 t)=lambda^2D V(t), lambda={lam}, t={t}",
                                 measured, 1.0, 1e-7)

    def _check_regime(self, report: SuiteReport, spec: OperatorSpec, structure: StructureReport,
                      regime: RegimeReport, fixture) -> None:
        settings = get_settings()
        D = structure.D
        ts = np.geomspace(1e-3, 1e2, 96)
        log_v = np.array([s.logdet for s in gramian_series(spec, ts)])
        log_t = np.log(ts)
        log_small = self._small_time_constant(spec, structure)
        if regime.hypothesis == "A":
            log_ratio = log_v - D * log_t - ts * spec.trB
            log_gamma = float(np.min(log_ratio))
            log_reference = log_small
            key, label = "gamma_A", "V/(t^D e^{t trB})"
        else:
            log_ratio = log_v - np.minimum(D * log_t, regime.D_infty * log_t)
            log_gamma = float(np.min(log_ratio))
            fit_ts = np.geomspace(settings.fit_t_lo, settings.fit_t_hi, settings.fit_samples)
            fit_log_v = np.array([s.logdet for s in gramian_series(spec, fit_ts)])
            log_fitted = float(np.mean(fit_log_v - regime.D_infty * np.log(fit_ts)))
            report.info["fitted_constant_B"] = float(np.exp(log_fitted))
            log_reference = min(log_small, log_fitted)
            key, label = "gamma_B", "V/min(t^D, t^D_inf)"
        report.info[key] = float(np.exp(log_gamma))
        report.info["small_time_constant"] = float(np.exp(log_small))
        report.at_least(f"hypothesis {regime.hypothesis} constant log gamma", log_gamma - log_reference,
                        float(np.log(GAMMA_FLOOR)),
                        note=f"inf of {label} on [1e-3, 1e2] relative to its small/large-time constant")
        decade = int(np.searchsorted(ts, 10.0))
        slope = float((log_ratio[-1] - log_ratio[decade]) / (log_t[-1] - log_t[decade]))
        report.at_least(f"{label} does not decay on [10, 100] (log slope)", slope, -settings.anomalous_margin)

        if regime.case_tag == "Thm1.3-iii":
            grid = np.geomspace(1e-2, 1e2, 32)
            log_v1 = log_volume(spec, 1.0)
            logs = np.array([s.logdet for s in gramian_series(spec, grid)])
            worst = float(np.max(np.abs(np.expm1(logs - log_v1 - D * np.log(grid)))))
            report.at_most("exact power law |V/(V(1) t^D) - 1|", worst, 1e-6)
        if regime.case_tag == "Thm1.4":
            report.close("large-time exponent equals n", regime.fit_diagnostics["exponent"], float(spec.n),
                         0.1, relative=False)

        self._check_lower_bounds(report, spec)

    def _small_time_constant(self, spec: OperatorSpec, structure: StructureReport) -> float:
        """log V_bar(1), the constant of V ~ V_bar(1) t^D near t = 0."""
        try:
            principal = spec.with_drift(structure.B_bar, label=f"{spec.label}-principal")
            return float(log_volume(principal, 1.0))
        except DriftStrichartzError as e:
            logger.warning(f"Error building principal drift of '{spec.label}', using V(1e-3): {str(e)}")
            return float(log_volume(spec, 1e-3) - structure.D * np.log(1e-3))

    def _check_lower_bounds(self, report: SuiteReport, spec: OperatorSpec) -> None:
        ts = np.geomspace(1.0, 50.0, 48)
        log_v = np.array([s.logdet for s in gramian_series(spec, ts)])
        max_re = spectrum(spec.B).max_real_part()
        tol = get_settings().imag_axis_tol * (1.0 + np.linalg.norm(spec.B, 2))
        bounds = []
        if spec.trB >= -tol:
            bounds.append(("c t^2", 2.0 * np.log(ts)))
            if max_re > tol:
                bounds.append((f"c e^(2 L0 t), L0={max_re:.6g}", 2.0 * max_re * ts))
        if max_re >= -tol:
            bounds.append(("c t", np.log(ts)))
        for name, log_bound in bounds:
            log_ratio = log_v - log_bound
            log_c = float(np.min(log_ratio))
            report.info[f"lower bound {name}"] = float(np.exp(log_c))
            report.at_least(f"lower bound V >= {name} on [1, 50] (log c relative to t=1)",
                            log_c - float(log_ratio[0]), float(np.log(LOWER_BOUND_DIP)))

    def _check_fixture(self, report: SuiteReport, spec: OperatorSpec, structure: StructureReport,
                       regime: RegimeReport, fixture) -> None:
        if fixture.ranks is not None:
            report.flag(f"ranks equal {fixture.ranks}", structure.ranks == fixture.ranks,
                        note=f"computed {structure.ranks}")
        if fixture.D is not None:
            report.close("homogeneous dimension", float(structure.D), float(fixture.D), 0.0, relative=False)
        if fixture.case_tag is not None:
            report.flag(f"case tag {fixture.case_tag}", regime.case_tag == fixture.case_tag,
                        note=f"computed {regime.case_tag}")
        if fixture.D_infty is not None and regime.D_infty is not None:
            measured = regime.fit_diagnostics.get("exponent", regime.D_infty)
            report.close("fitted D_infty", float(measured), fixture.D_infty, fixture.D_infty_tol, relative=False)
        if fixture.volume_fn is not None:
            ts = np.geomspace(0.1, 20.0, 24)
            samples = gramian_series(spec, ts)
            worst = max(abs(np.expm1(s.logdet - np.log(fixture.volume_fn(s.t)))) for s in samples)
            report.at_most(f"closed-form V = {fixture.volume_formula} on [0.1, 20]", float(worst),
                           fixture.volume_tol)
        if fixture.gramian_fn is not None:
            for t in CLOSED_FORM_GRAMIAN_TIMES:
                G = gramian_matrix(spec.Q, spec.B, t)
                expected = fixture.gramian_fn(t)
                defect = float(np.linalg.norm(G - expected) / np.linalg.norm(expected))
                report.at_most(f"closed-form Q(t) at t={t}", defect, fixture.gramian_tol)
        if fixture.asymptote is not None:
            c, power = fixture.asymptote
            t = get_settings().fit_t_hi
            measured = float(np.exp(log_volume(spec, t) - np.log(c) - power * np.log(t)))
            report.close(f"V(t) ~ {c:.6g} t^{power:g} at t={t:g}", measured, 1.0, 0.05)

    def _check_limit(self, report: SuiteReport, spec: OperatorSpec, fixture) -> None:
        Q_inf = gramian_limit(spec)
        if Q_inf is None:
            return
        report.info["Q_infty"] = Q_inf.tolist()
        if fixture is not None and fixture.Q_infty is not None:
            defect = float(np.linalg.norm(Q_inf - fixture.Q_infty) / np.linalg.norm(fixture.Q_infty))
            report.at_most("stationary Gramian Q_infty", defect, 1e-10)
        max_re = spectrum(spec.B).max_real_part()
        t = 40.0 / abs(max_re)
        measured = float(np.exp(log_volume(spec, t) - np.log(np.linalg.det(Q_inf))))
        report.close(f"V(t) -> det Q_infty at t={t:.4g}", measured, 1.0, 1e-8)


def run_volume_suite(spec: OperatorSpec, fixture=None) -> SuiteReport:
    """Run the volume suite for one operator."""
    return VolumeSuite().run(spec, fixture)
