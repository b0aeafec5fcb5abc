"""
Verification suites for the volume function, the group law and the dispersive and Strichartz estimates.
"""

from drift_strichartz.suites.base import SuiteReport
from drift_strichartz.suites.volume_suite import VolumeSuite, run_volume_suite
from drift_strichartz.suites.group_suite import GroupSuite, run_group_suite
from drift_strichartz.suites.dispersive_suite import DispersiveSuite, run_dispersive_suite
from drift_strichartz.suites.strichartz_suite import StrichartzSuite, run_strichartz_suite
from drift_strichartz.suites.runner import run_all_suites, run_suite

__all__ = [
    "SuiteReport",
    "VolumeSuite",
    "GroupSuite",
    "DispersiveSuite",
    "StrichartzSuite",
    "run_volume_suite",
    "run_group_suite",
    "run_dispersive_suite",
    "run_strichartz_suite",
    "run_all_suites",
    "run_suite"
]
