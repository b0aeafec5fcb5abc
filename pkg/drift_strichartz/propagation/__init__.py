"""
Lattice fields and the propagator group U(t).
"""

from drift_strichartz.propagation.grid import GridSpec, WaveField, gaussian_probe, lebesgue_norm
from drift_strichartz.propagation.propagator import (
    duhamel_solve,
    gaussian_lebesgue_norm,
    guard_report,
    propagate,
    propagate_many,
)

__all__ = [
    "GridSpec",
    "WaveField",
    "gaussian_probe",
    "lebesgue_norm",
    "duhamel_solve",
    "gaussian_lebesgue_norm",
    "guard_report",
    "propagate",
    "propagate_many"
]
