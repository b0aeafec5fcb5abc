"""
Runs the suites as independent jobs and collects their reports.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Optional, Union

from drift_strichartz.config import get_settings
from drift_strichartz.core.gramian import OperatorSpec
from drift_strichartz.core.regimes import PairSpec, classify, pairs_for
from drift_strichartz.core.structure import analyze_structure
from drift_strichartz.errors import DomainError
from drift_strichartz.propagation.grid import GridSpec
from drift_strichartz.suites.base import SuiteReport
from drift_strichartz.suites.dispersive_suite import DispersiveSuite
from drift_strichartz.suites.group_suite import GroupSuite
from drift_strichartz.suites.strichartz_suite import StrichartzSuite
from drift_strichartz.suites.volume_suite import VolumeSuite

logger = logging.getLogger(__name__)

SUITES = ("volume", "group", "dispersive", "strichartz")


def run_suite(name: str, spec: OperatorSpec, grid: Optional[GridSpec] = None, pair: Optional[PairSpec] = None,
              fixture=None, method: Optional[str] = None, **options) -> SuiteReport:
    """
    Run one suite by name.

    Args:
        name: 'volume', 'group', 'dispersive' or 'strichartz'
        spec: Operator specification
        grid: Lattice (default from settings)
        pair: Exponent pair for the Strichartz suite (default: the operator's Strichartz pair)
        fixture: Optional gallery fixture with ground truth
        method: Propagation method
        **options: Passed to the suite's run method

    Returns:
        SuiteReport
    """
    settings = get_settings()
    if grid is None:
        grid = GridSpec(n=spec.n, L=settings.grid_L, N=settings.grid_n, margin=settings.margin)
    if name == "volume":
        return VolumeSuite().run(spec, fixture)
    if name == "group":
        return GroupSuite(method).run(spec, grid, **options)
    if name == "dispersive":
        return DispersiveSuite(method).run(spec, grid, **options)
    if name == "strichartz":
        structure = analyze_structure(spec)
        regime = classify(spec, structure)
        if pair is None:
            pair = PairSpec(**pairs_for(regime))
        return StrichartzSuite(method).run(spec, grid, pair, structure=structure, regime=regime, **options)
    raise DomainError(f"unknown suite '{name}'; expected one of {SUITES}")


def run_all_suites(spec: OperatorSpec, grid: Optional[GridSpec] = None, fixture=None,
                   out_dir: Optional[Union[str, Path]] = None, method: Optional[str] = None) -> Dict[str, SuiteReport]:
    """
    Run all four suites concurrently.

    Args:
        spec: Operator specification
        grid: Lattice (default from settings)
        fixture: Optional gallery fixture
        out_dir: Write each report's CSV/JSON here when given
        method: Propagation method

    Returns:
        Reports keyed by suite name
    """
    logger.info(f"Running all suites for '{spec.label}'")
    workers = min(len(SUITES), get_settings().workers)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = {name: pool.submit(run_suite, name, spec, grid, None, fixture, method) for name in SUITES}
        reports = {name: future.result() for name, future in futures.items()}
    if out_dir is not None:
        for report in reports.values():
            report.write_outputs(out_dir)
    failed = [name for name, r in reports.items() if not r.passed]
    logger.info(f"Suites for '{spec.label}': {len(SUITES) - len(failed)} passed, failed: {failed or 'none'}")
    return reports
