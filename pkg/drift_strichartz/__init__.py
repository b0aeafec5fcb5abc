"""
Drift-Strichartz toolkit.
Structure, regimes, propagation and estimate checks for degenerate
Schrödinger operators with drift, i tr(Q D^2) + <Bx, D>.
"""

__version__ = "1.0.0"
